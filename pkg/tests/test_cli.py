import json

import pytest

from ran_topo.cli import main

SYNTH_CFG = {
    "sites": 15,
    "cells_per_site": [2, 4],
    "bbox": [57.0, 57.15, 11.5, 11.8],
    "radius_km": 3.0,
    "bands": 3,
    "seed": 4,
}

EXPERIMENT_CFG = {
    "seed": 11,
    "data": {"synthetic": SYNTH_CFG},
    "split": {"ratios": [0.8, 0.1, 0.1]},
    "candidate_configs": [{"k": 1000, "max_dist_km": None}],
    "filter": {"k": 10, "max_dist_km": 3.0},
    "dims": {"h": 8, "d": 8},
    "train": {"epochs": 3, "batch_size": 256, "learning_rate": 1e-3},
    "cutoff": 0.5,
}


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def synth_dir(tmp_path):
    cfg = write_json(tmp_path / "synth.json", SYNTH_CFG)
    out = tmp_path / "net"
    assert main(["synth", "--config", cfg, "--out", str(out)]) == 0
    return out


class TestSynth:
    def test_writes_network(self, synth_dir):
        assert (synth_dir / "cells.csv").is_file()
        assert (synth_dir / "edges.csv").is_file()
        meta = json.loads((synth_dir / "groundtruth-meta.json").read_text())
        assert meta["nodes"] > 0
        assert meta["edges"] > 0

    def test_bad_config_exit_2(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "bad.json", {**SYNTH_CFG, "sites": 1})
        assert main(["synth", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_config_exit_3(self, tmp_path):
        assert main(["synth", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == 3

    def test_unwritable_out_exit_3(self, tmp_path):
        cfg = write_json(tmp_path / "synth.json", SYNTH_CFG)
        # a regular file in the middle of the output path makes makedirs fail
        blocker = tmp_path / "blocked"
        blocker.write_text("")
        assert main(["synth", "--config", cfg, "--out", str(blocker / "sub")]) == 3

    def test_seed_override_changes_output(self, tmp_path):
        cfg = write_json(tmp_path / "synth.json", SYNTH_CFG)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", "--config", cfg, "--out", str(a), "--seed", "1"]) == 0
        assert main(["synth", "--config", cfg, "--out", str(b), "--seed", "2"]) == 0
        assert (a / "cells.csv").read_text() != (b / "cells.csv").read_text()


class TestCandidates:
    def test_unlimited_k_perfect_recall(self, synth_dir, capsys):
        code = main([
            "candidates",
            "--cells", str(synth_dir / "cells.csv"),
            "--edges", str(synth_dir / "edges.csv"),
            "--k", "100000",
            "--eval-split", "0.8,0.1,0.1",
        ])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["recall"] == 1.0

    def test_k_zero_zero_recall(self, synth_dir, capsys):
        code = main([
            "candidates",
            "--cells", str(synth_dir / "cells.csv"),
            "--edges", str(synth_dir / "edges.csv"),
            "--k", "0",
            "--eval-split", "0.8,0.1,0.1",
        ])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["recall"] == 0.0

    def test_missing_file_exit_3(self, tmp_path):
        code = main([
            "candidates",
            "--cells", str(tmp_path / "missing.csv"),
            "--edges", str(tmp_path / "missing2.csv"),
            "--k", "5",
        ])
        assert code == 3

    def test_report_written_to_out(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "cand.json"
        code = main([
            "candidates",
            "--cells", str(synth_dir / "cells.csv"),
            "--edges", str(synth_dir / "edges.csv"),
            "--k", "10", "--max-dist-km", "2.0",
            "--eval-split", "0.8,0.1,0.1",
            "--out", str(out),
        ])
        assert code == 0
        capsys.readouterr()
        report = json.loads(out.read_text())
        assert report["mode"].startswith("candidate")
        assert report["pairs"] == report["tp"] + report["fp"] + report["tn"] + report["fn"]


class TestExperiment:
    def test_full_bundle(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_CFG)
        out = tmp_path / "run"
        assert main(["experiment", "--config", cfg, "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "balanced" in stdout
        for name in ("config.json", "summary.csv", "params_mlp.json", "params_gnn.json"):
            assert (out / name).is_file()
        assert len(list((out / "reports").iterdir())) == 7

    def test_bad_experiment_config_exit_2(self, tmp_path):
        cfg = write_json(tmp_path / "exp.json", {**EXPERIMENT_CFG, "data": {}})
        assert main(["experiment", "--config", cfg, "--out", str(tmp_path / "run")]) == 2


class TestTrainEvalPredict:
    @pytest.fixture
    def trained(self, tmp_path):
        cfg = write_json(tmp_path / "exp.json", EXPERIMENT_CFG)
        out = tmp_path / "model"
        assert main(["train", "--config", cfg, "--out", str(out), "--model", "mlp"]) == 0
        return cfg, out

    def test_train_outputs(self, trained):
        _, out = trained
        assert (out / "params_mlp.json").is_file()
        assert (out / "history_mlp.csv").is_file()
        assert (out / "norm_params.json").is_file()
        history = (out / "history_mlp.csv").read_text().splitlines()
        assert history[0] == "epoch,train_loss,val_accuracy"
        assert len(history) == 1 + EXPERIMENT_CFG["train"]["epochs"]

    def test_eval_reports(self, trained, tmp_path, capsys):
        cfg, out = trained
        eval_out = tmp_path / "eval"
        code = main([
            "eval", "--params", str(out / "params_mlp.json"),
            "--config", cfg, "--out", str(eval_out),
        ])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "mlp balanced:" in stdout
        for mode in ("balanced", "all_pairs", "candidate_filtered"):
            report = json.loads((eval_out / f"mlp_{mode}.json").read_text())
            assert report["mode"] == mode
            assert 0.0 <= report["accuracy"] <= 1.0

    def test_predict_ranked_output(self, trained, tmp_path, capsys):
        cfg, out = trained
        data_dir = out / "data"
        with open(data_dir / "cells.csv") as fh:
            header = fh.readline().strip().split(",")
            first_row = fh.readline().strip().split(",")
        new_cell = dict(zip(header[1:], map(float, first_row[1:])))
        cell_path = write_json(tmp_path / "new.json", new_cell)
        code = main([
            "predict",
            "--params", str(out / "params_mlp.json"),
            "--norm-params", str(out / "norm_params.json"),
            "--cells", str(data_dir / "cells.csv"),
            "--edges", str(data_dir / "edges.csv"),
            "--new-cell", cell_path,
            "--k", "10", "--cutoff", "0.0",
        ])
        assert code == 0
        out_text = capsys.readouterr().out
        ranked = json.loads(out_text)
        assert len(ranked) > 0
        probs = [r["probability"] for r in ranked]
        assert probs == sorted(probs, reverse=True)
        _ = cfg

    def test_predict_empty_candidates_warns(self, trained, tmp_path, capsys):
        _, out = trained
        data_dir = out / "data"
        with open(data_dir / "cells.csv") as fh:
            header = fh.readline().strip().split(",")
            first_row = fh.readline().strip().split(",")
        new_cell = dict(zip(header[1:], map(float, first_row[1:])))
        new_cell["lat"], new_cell["lon"] = -30.0, 100.0  # far from the network
        cell_path = write_json(tmp_path / "new.json", new_cell)
        code = main([
            "predict",
            "--params", str(out / "params_mlp.json"),
            "--norm-params", str(out / "norm_params.json"),
            "--cells", str(data_dir / "cells.csv"),
            "--edges", str(data_dir / "edges.csv"),
            "--new-cell", cell_path,
            "--k", "10", "--max-dist-km", "5.0",
        ])
        captured = capsys.readouterr()
        assert code == 0
        assert json.loads(captured.out) == []
        assert "empty" in captured.err

    def test_predict_recovers_true_neighbors(self, tmp_path, capsys):
        # distance-only network: hold one cell out, train on the rest, and
        # the predicted neighbor list must equal the held-out cell's true
        # neighbors
        from ran_topo.graph import remove_nodes
        from ran_topo.synth import SynthConfig, export, generate

        synth = SynthConfig(
            sites=40, cells_per_site=(2, 4), bbox=(57.0, 57.2, 11.5, 11.9),
            radius_km=3.0, bands=1, seed=6,
        )
        gt = generate(synth)
        target = next(c for c in gt.graph.ids if 3 <= len(gt.graph.neighbors(c)) <= 8)
        true_neighbors = sorted(gt.graph.neighbors(target))
        reduced = gt.graph
        idx = reduced.index_of(target)
        new_cell = dict(zip(reduced.features.columns, reduced.features.values[idx]))
        reduced = remove_nodes(reduced, {target})

        data_dir = tmp_path / "data"
        data_dir.mkdir()
        from ran_topo.data_io import write_cells_csv, write_edges_csv

        with open(data_dir / "cells.csv", "w") as fh:
            write_cells_csv(fh, list(reduced.ids), reduced.features)
        with open(data_dir / "edges.csv", "w") as fh:
            write_edges_csv(fh, reduced.edge_list())

        config = {
            "seed": 5,
            "data": {
                "cells_csv": str(data_dir / "cells.csv"),
                "edges_csv": str(data_dir / "edges.csv"),
            },
            "split": {"ratios": [0.9, 0.05, 0.05]},
            "dims": {"h": 64, "d": 64},
            "train": {"epochs": 40, "batch_size": 256, "learning_rate": 1e-3},
        }
        cfg_path = write_json(tmp_path / "cfg.json", config)
        model_dir = tmp_path / "model"
        assert main(["train", "--config", cfg_path, "--out", str(model_dir), "--model", "mlp"]) == 0

        cell_path = write_json(tmp_path / "new.json", new_cell)
        code = main([
            "predict",
            "--params", str(model_dir / "params_mlp.json"),
            "--norm-params", str(model_dir / "norm_params.json"),
            "--cells", str(data_dir / "cells.csv"),
            "--edges", str(data_dir / "edges.csv"),
            "--new-cell", cell_path,
            "--k", "100000", "--max-dist-km", str(synth.radius_km),
        ])
        assert code == 0
        ranked = json.loads(capsys.readouterr().out)
        assert sorted(r["cell_id"] for r in ranked) == true_neighbors

    def test_predict_missing_feature_exit_2(self, trained, tmp_path):
        _, out = trained
        data_dir = out / "data"
        cell_path = write_json(tmp_path / "new.json", {"lat": 57.0, "lon": 11.6})
        code = main([
            "predict",
            "--params", str(out / "params_mlp.json"),
            "--norm-params", str(out / "norm_params.json"),
            "--cells", str(data_dir / "cells.csv"),
            "--edges", str(data_dir / "edges.csv"),
            "--new-cell", cell_path,
        ])
        assert code == 2
