import numpy as np
import pytest

from conftest import make_graph, random_graph
from ran_topo import models, pipeline
from ran_topo.candidate import CandidateConfig
from ran_topo.errors import (
    EmptyEvalSet,
    NotEnoughNegatives,
    SingleClassOnly,
)
from ran_topo.graph import split_nodes
from ran_topo.pipeline import (
    AllPairs,
    Balanced,
    CandidateFiltered,
    TrainConfig,
    auc,
    evaluate,
    make_scorer,
    mask_to_train_edges,
    predict_new_node,
    sample_pairs,
    subseed,
    train,
)
from ran_topo.synth import SynthConfig, generate


def pair_auc(scores, labels):
    """Quadratic oracle: fraction of (pos, neg) pairs ranked correctly,
    counting ties as half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestSubseed:
    def test_stable_and_distinct(self):
        assert subseed(1, "a") == subseed(1, "a")
        assert subseed(1, "a") != subseed(1, "b")
        assert subseed(1, "a") != subseed(2, "a")


class TestSamplePairs:
    def test_balanced_counts_and_labels(self):
        # path of 5 nodes, eval on the middle: positives (1,2) and (2,3)
        g = make_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        ps = sample_pairs(g, ["n2"], Balanced(), seed=0)
        assert len(ps.pairs) == 4
        assert ps.labels.sum() == 2
        pos = {tuple(p) for p, y in zip(ps.pairs.tolist(), ps.labels) if y == 1}
        assert pos == {(1, 2), (2, 3)}
        for i, j in ps.pairs.tolist():
            assert i < j
            assert 2 in (i, j)

    def test_balanced_negatives_are_nonedges(self):
        rng = np.random.default_rng(0)
        for trial in range(200):
            g = random_graph(rng)
            eval_nodes = [g.ids[int(k)] for k in rng.choice(g.n, size=2, replace=False)]
            try:
                ps = sample_pairs(g, eval_nodes, Balanced(), seed=trial)
            except NotEnoughNegatives:
                continue
            eval_idx = {g.index_of(node) for node in eval_nodes}
            for (i, j), y in zip(ps.pairs.tolist(), ps.labels.tolist()):
                assert i < j
                assert (i in eval_idx) or (j in eval_idx)
                assert ((i, j) in g.edges) == bool(y)
            assert ps.labels.sum() * 2 == len(ps.labels)
            # no duplicate pairs
            assert len({tuple(p) for p in ps.pairs.tolist()}) == len(ps.pairs)

    def test_balanced_not_enough_negatives(self):
        g = make_graph(3, [(0, 1), (0, 2), (1, 2)])  # complete graph
        with pytest.raises(NotEnoughNegatives):
            sample_pairs(g, ["n0"], Balanced(), seed=0)

    def test_balanced_deterministic(self):
        g = make_graph(20, [(i, i + 1) for i in range(19)])
        a = sample_pairs(g, ["n3", "n7"], Balanced(), seed=5)
        b = sample_pairs(g, ["n3", "n7"], Balanced(), seed=5)
        assert np.array_equal(a.pairs, b.pairs)
        assert np.array_equal(a.labels, b.labels)

    def test_all_pairs_single_eval(self):
        g = make_graph(5, [(0, 1), (1, 2)])
        ps = sample_pairs(g, ["n1"], AllPairs())
        assert ps.pairs.tolist() == [[0, 1], [1, 2], [1, 3], [1, 4]]
        assert ps.labels.tolist() == [1, 1, 0, 0]

    def test_all_pairs_eval_pair_counted_once(self):
        g = make_graph(4, [(0, 1)])
        ps = sample_pairs(g, ["n0", "n1"], AllPairs())
        # (0,1) once, plus each eval node against nodes 2 and 3
        assert len(ps.pairs) == 5
        assert len({tuple(p) for p in ps.pairs.tolist()}) == 5

    def test_candidate_filtered_k_zero_empty(self):
        g = make_graph(4, [(0, 1)])
        ps = sample_pairs(g, ["n0"], CandidateFiltered(CandidateConfig(k=0)))
        assert ps.pairs.shape == (0, 2)

    def test_candidate_filtered_subset_of_all_pairs(self):
        rng = np.random.default_rng(1)
        for trial in range(100):
            g = random_graph(rng)
            eval_nodes = [g.ids[int(rng.integers(0, g.n))]]
            k = int(rng.integers(0, g.n))
            full = sample_pairs(g, eval_nodes, AllPairs())
            filt = sample_pairs(
                g, eval_nodes, CandidateFiltered(CandidateConfig(k=k))
            )
            full_set = {tuple(p) for p in full.pairs.tolist()}
            filt_set = {tuple(p) for p in filt.pairs.tolist()}
            assert filt_set <= full_set
            _ = trial

    def test_empty_eval_set(self):
        g = make_graph(3, [(0, 1)])
        with pytest.raises(EmptyEvalSet):
            sample_pairs(g, [], Balanced())


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_inverted(self):
        assert auc([0.1, 0.9], [1, 0]) == 0.0

    def test_all_tied_half(self):
        assert auc([0.5, 0.5, 0.5], [1, 0, 0]) == 0.5

    def test_hand_value(self):
        # pos scores {0.8, 0.4}, neg {0.6, 0.2}: correct pairs 3/4
        assert auc([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0]) == 0.75

    def test_single_class_raises(self):
        with pytest.raises(SingleClassOnly):
            auc([0.5, 0.6], [1, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n = int(rng.integers(2, 40))
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                labels[0] = 1 - labels[0]
            # quantized scores force plenty of ties
            scores = np.round(rng.random(n), 1)
            assert auc(scores, labels) == pytest.approx(
                pair_auc(scores.tolist(), labels.tolist()), rel=1e-12
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(4, 30))
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                labels[0] = 1 - labels[0]
            scores = rng.random(n)
            assert auc(scores, labels) == pytest.approx(
                auc(2.0 * scores + 1.0, labels), rel=1e-12
            )


class TestEvaluate:
    def oracle_scorer(self, graph):
        def score(pairs):
            return np.array(
                [1.0 - 1e-9 if (i, j) in graph.edges else 1e-9 for i, j in pairs.tolist()]
            )

        return score

    def test_oracle_scorer_perfect(self):
        g = make_graph(6, [(0, 1), (1, 2), (2, 3)])
        rep = evaluate(self.oracle_scorer(g), g, ["n1", "n2"], Balanced(), seed=1)
        assert rep.accuracy == 1.0
        assert rep.precision == 1.0
        assert rep.recall == 1.0
        assert rep.auc == 1.0

    def test_anti_oracle_scorer(self):
        g = make_graph(6, [(0, 1), (1, 2), (2, 3)])

        def anti(pairs):
            return 1.0 - self.oracle_scorer(g)(pairs)

        rep = evaluate(anti, g, ["n1", "n2"], Balanced(), seed=1)
        assert rep.accuracy == 0.0
        assert rep.auc == 0.0

    def test_constant_scorer_below_cutoff(self):
        g = make_graph(6, [(0, 1), (1, 2)])
        rep = evaluate(lambda p: np.full(len(p), 0.3), g, ["n1"], Balanced(), seed=0)
        assert rep.recall == 0.0
        assert rep.precision == 0.0  # no predicted positives
        assert rep.auc == 0.5

    def test_empty_pair_set_zero_report(self):
        g = make_graph(4, [(0, 1)])
        rep = evaluate(
            lambda p: np.zeros(len(p)), g, ["n3"],
            CandidateFiltered(CandidateConfig(k=0)),
        )
        assert rep.pairs == 0
        assert rep.auc is None

    def test_single_class_auc_none(self):
        g = make_graph(4, [])
        rep = evaluate(lambda p: np.zeros(len(p)), g, ["n0"], AllPairs())
        assert rep.auc is None

    def test_metrics_consistent_with_counts(self):
        rng = np.random.default_rng(4)
        for trial in range(200):
            g = random_graph(rng)
            eval_nodes = [g.ids[int(rng.integers(0, g.n))]]

            def noisy(pairs):
                return np.random.default_rng(trial).random(len(pairs))

            rep = evaluate(noisy, g, eval_nodes, AllPairs(), cutoff=float(rng.random()))
            assert rep.pairs == rep.tp + rep.fp + rep.tn + rep.fn
            if rep.pairs:
                assert rep.accuracy == pytest.approx(
                    (rep.tp + rep.tn) / rep.pairs, abs=1e-12
                )
            if rep.tp + rep.fp:
                assert rep.precision == pytest.approx(
                    rep.tp / (rep.tp + rep.fp), abs=1e-12
                )
            if rep.tp + rep.fn:
                assert rep.recall == pytest.approx(
                    rep.tp / (rep.tp + rep.fn), abs=1e-12
                )

    def test_cutoff_monotonicity(self):
        # raising the cutoff can only shrink the predicted-positive set
        g = make_graph(8, [(0, 1), (1, 2), (2, 3), (4, 5)])

        def scorer(pairs):
            return np.random.default_rng(9).random(len(pairs))

        reports = [
            evaluate(scorer, g, ["n1", "n5"], AllPairs(), cutoff=c)
            for c in (0.1, 0.3, 0.5, 0.7, 0.9)
        ]
        for lo, hi in zip(reports, reports[1:]):
            assert hi.tp + hi.fp <= lo.tp + lo.fp
            assert hi.recall <= lo.recall


def experiment_fixture(seed=13):
    cfg = SynthConfig(
        sites=30,
        cells_per_site=(2, 4),
        bbox=(57.0, 57.08, 11.5, 11.64),
        radius_km=4.0,
        bands=3,
        seed=seed,
    )
    gt = generate(cfg)
    graph = gt.graph
    split = split_nodes(graph, (0.7, 0.15, 0.15), seed=1)
    from ran_topo.data_io import zscore_apply, zscore_fit

    train_rows = [graph.index_of(node) for node in split.train_nodes]
    norm = zscore_fit(graph.features, train_rows)
    x = zscore_apply(norm, graph.features).values
    return graph, split, x, norm


class TestTrain:
    def test_lr_zero_keeps_init_params(self):
        graph, split, x, _ = experiment_fixture()
        cfg = TrainConfig(epochs=2, batch_size=64, learning_rate=0.0, seed=3)
        result = train("mlp", graph, x, split, cfg, hidden=8)
        init = models.init_params(
            "mlp", k=x.shape[1], hidden=8, seed=subseed(cfg.seed, "init")
        )
        for name, arr in models.params_to_dict(result.params).items():
            assert np.array_equal(arr, models.params_to_dict(init)[name])

    def test_deterministic(self):
        graph, split, x, _ = experiment_fixture()
        cfg = TrainConfig(epochs=3, batch_size=128, seed=5)
        a = train("gnn", graph, x, split, cfg, hidden=8, embed=8)
        b = train("gnn", graph, x, split, cfg, hidden=8, embed=8)
        assert a.history == b.history
        for name, arr in models.params_to_dict(a.params).items():
            assert np.array_equal(arr, models.params_to_dict(b.params)[name])

    def test_loss_decreases_on_separable_problem(self):
        graph, split, x, _ = experiment_fixture()
        cfg = TrainConfig(epochs=30, batch_size=256, seed=7, resample_negatives=False)
        result = train("mlp", graph, x, split, cfg, hidden=16)
        losses = [row["train_loss"] for row in result.history]
        assert losses[-1] < losses[0] * 0.8
        assert result.best_val_accuracy > 0.6

    def test_history_schema_and_best_epoch(self):
        graph, split, x, _ = experiment_fixture()
        cfg = TrainConfig(epochs=4, batch_size=128, seed=8)
        result = train("mlp", graph, x, split, cfg, hidden=8)
        assert [row["epoch"] for row in result.history] == [0, 1, 2, 3]
        accs = [row["val_accuracy"] for row in result.history]
        assert result.best_val_accuracy == max(accs)
        assert result.best_epoch == accs.index(max(accs))

    def test_patience_stops_early(self):
        graph, split, x, _ = experiment_fixture()
        cfg = TrainConfig(epochs=50, batch_size=128, learning_rate=0.0, seed=9, patience=2)
        result = train("mlp", graph, x, split, cfg, hidden=8)
        # lr 0 never improves after the first epoch
        assert len(result.history) == 3


class TestMaskToTrainEdges:
    def test_only_train_train_edges_survive(self):
        g = make_graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        masked = mask_to_train_edges(g, ["n0", "n1", "n2"])
        assert masked.ids == g.ids
        assert masked.edges == {(0, 1), (1, 2)}

    def test_all_train_is_identity_topology(self):
        g = make_graph(4, [(0, 1), (2, 3)])
        masked = mask_to_train_edges(g, g.ids)
        assert masked.edges == g.edges


class TestPredictNewNode:
    def setup_scene(self):
        graph, split, x, norm = experiment_fixture(seed=17)
        params = models.init_params("mlp", k=x.shape[1], hidden=8, seed=0)
        return graph, x, params

    def test_no_candidates_flag(self):
        graph, x, params = self.setup_scene()
        pred = predict_new_node(
            params, graph, x, x[0], (0.0, 0.0), CandidateConfig(k=0)
        )
        assert pred.no_candidates
        assert pred.neighbors == []

    def test_far_point_with_distance_cap(self):
        graph, x, params = self.setup_scene()
        pred = predict_new_node(
            params, graph, x, x[0], (-30.0, 100.0),
            CandidateConfig(k=10, max_dist=5.0),
        )
        assert pred.no_candidates

    def test_output_sorted_and_capped(self):
        graph, x, params = self.setup_scene()
        coords = tuple(graph.features.coords()[0])
        cfg = CandidateConfig(k=12)
        pred = predict_new_node(
            params, graph, x, x[0], coords, cfg, cutoff=0.0, max_neighbors=5
        )
        assert not pred.no_candidates
        assert len(pred.neighbors) <= 5
        probs = [p for _, p in pred.neighbors]
        assert probs == sorted(probs, reverse=True)
        known = set(graph.ids)
        for cid, p in pred.neighbors:
            assert cid in known
            assert 0.0 < p < 1.0

    def test_cutoff_filters(self):
        graph, x, params = self.setup_scene()
        coords = tuple(graph.features.coords()[0])
        cfg = CandidateConfig(k=12)
        loose = predict_new_node(params, graph, x, x[0], coords, cfg, cutoff=0.0)
        tight = predict_new_node(params, graph, x, x[0], coords, cfg, cutoff=1.0 - 1e-9)
        assert tight.neighbors == []
        assert not tight.no_candidates
        assert len(loose.neighbors) <= cfg.k

    def test_gnn_new_node_uses_empty_neighborhood(self):
        graph, x, _ = self.setup_scene()
        params = models.init_params("gnn", k=x.shape[1], hidden=8, embed=8, seed=1)
        coords = tuple(graph.features.coords()[0])
        pred = predict_new_node(
            params, graph, x, x[0], coords, CandidateConfig(k=5), cutoff=0.0
        )
        # manual recomputation of the top candidate's score
        emb = models.sage_embed(params, x, graph)
        new_emb = models.new_node_embedding(params, x[0])
        rows = np.vstack([emb, new_emb[None, :]])
        top_id, top_p = pred.neighbors[0]
        j = graph.index_of(top_id)
        expected = models.symmetric_score_batch(
            params, rows, np.array([[graph.n, j]])
        )[0]
        assert top_p == expected


class TestRunExperiment:
    def small_config(self):
        return {
            "seed": 3,
            "data": {
                "synthetic": {
                    "sites": 20,
                    "cells_per_site": [2, 4],
                    "bbox": [57.0, 57.2, 11.5, 11.9],
                    "radius_km": 3.0,
                    "bands": 3,
                    "seed": 2,
                }
            },
            "split": {"ratios": [0.8, 0.1, 0.1]},
            "candidate_configs": [{"k": 1000, "max_dist_km": None}, {"k": 5, "max_dist_km": 2.0}],
            "filter": {"k": 10, "max_dist_km": 4.0},
            "dims": {"h": 8, "d": 8},
            "train": {"epochs": 2, "batch_size": 256, "learning_rate": 1e-3},
            "cutoff": 0.5,
        }

    def test_structure_and_reports(self, tmp_path):
        result = pipeline.run_experiment(self.small_config(), str(tmp_path))
        assert len(result.candidate_reports) == 2
        # unlimited candidate list catches every true neighbor
        assert result.candidate_reports[0][1].recall == 1.0
        assert set(result.model_results) == {"mlp", "gnn"}
        assert set(result.model_reports) == {
            (kind, mode)
            for kind in ("mlp", "gnn")
            for mode in ("balanced", "all_pairs", "candidate_filtered")
        }
        for name in (
            "config.json",
            "norm_params.json",
            "summary.csv",
            "params_mlp.json",
            "params_gnn.json",
            "history_mlp.csv",
            "history_gnn.csv",
        ):
            assert (tmp_path / name).is_file()
        report_files = sorted(p.name for p in (tmp_path / "reports").iterdir())
        assert report_files == [
            "candidate_0.json",
            "candidate_1.json",
            "gnn_all_pairs.json",
            "gnn_balanced.json",
            "gnn_candidate_filtered.json",
            "mlp_all_pairs.json",
            "mlp_balanced.json",
            "mlp_candidate_filtered.json",
        ]
        assert (tmp_path / "data" / "cells.csv").is_file()

    def test_bundle_byte_identical(self, tmp_path):
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        pipeline.run_experiment(self.small_config(), str(dir_a))
        pipeline.run_experiment(self.small_config(), str(dir_b))
        files_a = sorted(p.relative_to(dir_a) for p in dir_a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(dir_b) for p in dir_b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (dir_a / rel).read_bytes() == (dir_b / rel).read_bytes()

    def test_format_summary_lists_all_rows(self):
        result = pipeline.run_experiment(self.small_config())
        text = pipeline.format_summary(result)
        assert len(text.splitlines()) == 1 + 2 + 6  # header + candidates + model rows
        assert "balanced" in text
        assert "candidate_filtered" in text


class TestScorer:
    def test_mlp_scorer_matches_direct_scores(self):
        graph, split, x, _ = experiment_fixture()
        params = models.init_params("mlp", k=x.shape[1], hidden=8, seed=2)
        scorer = make_scorer(params, x)
        pairs = np.array([[0, 1], [2, 5], [3, 3 + 1]])
        direct = models.symmetric_score_batch(params, x, pairs)
        assert np.array_equal(scorer(pairs), direct)
        _ = split

    def test_gnn_scorer_requires_graph(self):
        from ran_topo.errors import ValidationError

        params = models.init_params("gnn", k=2, hidden=4, embed=4, seed=0)
        with pytest.raises(ValidationError):
            make_scorer(params, np.zeros((3, 2)))
