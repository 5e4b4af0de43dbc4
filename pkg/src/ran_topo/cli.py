"""Command-line surface: ``ran-topo <subcommand>``.

Exit codes: 0 success, 2 configuration/validation error, 3 I/O error,
4 internal invariant violation. Log level comes from the RAN_TOPO_LOG
environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import models, pipeline
from .candidate import CandidateConfig
from .data_io import NormParams, parse_cells_csv, parse_edges_csv, zscore_apply, zscore_fit
from .errors import InternalError, IoError, RanTopoError, StageError, ValidationError
from .graph import FeatureMatrix, build_graph, split_nodes
from .synth import SynthConfig, export, generate

log = logging.getLogger("ran_topo")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from exc


def _load_graph(cells_path: str, edges_path: str):
    try:
        with open(cells_path) as fh:
            ids, features, mask = parse_cells_csv(fh)
        with open(edges_path) as fh:
            edge_pairs = parse_edges_csv(fh)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if mask.any():
        raise ValidationError(
            "input has missing feature values; run them through an experiment "
            "config with a missing_policy instead"
        )
    return build_graph(ids, edge_pairs, features)


def cmd_synth(args) -> int:
    cfg = SynthConfig.from_dict(_load_json(args.config))
    if args.seed is not None:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    gt = generate(cfg)
    try:
        os.makedirs(args.out, exist_ok=True)
        export(gt, args.out)
        meta = {
            "config": cfg.to_dict(),
            "nodes": gt.graph.n,
            "edges": gt.graph.num_edges,
        }
        with open(os.path.join(args.out, "groundtruth-meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    log.info("wrote %d cells, %d edges to %s", gt.graph.n, gt.graph.num_edges, args.out)
    return EXIT_OK


def cmd_candidates(args) -> int:
    graph = _load_graph(args.cells, args.edges)
    cfg = CandidateConfig(
        k=args.k,
        max_dist=math.inf if args.max_dist_km is None else args.max_dist_km,
    )
    ratios = tuple(float(r) for r in args.eval_split.split(","))
    split = split_nodes(graph, ratios, seed=pipeline.subseed(args.seed, "split"))
    from .candidate import evaluate_candidates

    report = evaluate_candidates(graph, split.val_nodes, cfg)
    text = report.to_json()
    print(text)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
                fh.write("\n")
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return EXIT_OK


def _experiment_config(args) -> dict:
    config = _load_json(args.config) if args.config else pipeline.default_config()
    if args.seed is not None:
        config = {**config, "seed": args.seed}
    return config


def cmd_train(args) -> int:
    config = _experiment_config(args)
    data = pipeline.prepare_experiment(config, args.out)
    os.makedirs(args.out, exist_ok=True)
    train_obj = dict(config.get("train", {}))
    dims = config.get("dims", {})
    kinds = [args.model] if args.model != "both" else [models.MLP_KIND, models.GNN_KIND]
    seed = int(config.get("seed", 0))
    for kind in kinds:
        cfg = pipeline.TrainConfig(
            epochs=int(train_obj.get("epochs", 150)),
            batch_size=int(train_obj.get("batch_size", 512)),
            learning_rate=float(train_obj.get("learning_rate", 1e-3)),
            seed=pipeline.subseed(seed, f"train_{kind}"),
            resample_negatives=bool(train_obj.get("resample_negatives", True)),
            patience=train_obj.get("patience"),
        )
        result = pipeline.train(
            kind, data.graph, data.features_norm, data.split, cfg,
            hidden=int(dims.get("h", models.DEFAULT_HIDDEN)),
            embed=int(dims.get("d", models.DEFAULT_EMBED)),
        )
        try:
            with open(os.path.join(args.out, f"params_{kind}.json"), "w") as fh:
                fh.write(models.params_to_json(result.params))
                fh.write("\n")
            pipeline._write_history_csv(
                os.path.join(args.out, f"history_{kind}.csv"), result.history
            )
        except OSError as exc:
            raise IoError(str(exc)) from exc
        log.info(
            "%s: best val accuracy %.4f at epoch %d",
            kind, result.best_val_accuracy, result.best_epoch,
        )
    try:
        with open(os.path.join(args.out, "norm_params.json"), "w") as fh:
            fh.write(data.norm_params.to_json())
            fh.write("\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _experiment_config(args)
    try:
        with open(args.params) as fh:
            params = models.params_from_json(fh.read())
    except OSError as exc:
        raise IoError(str(exc)) from exc
    data = pipeline.prepare_experiment(config)
    seed = int(config.get("seed", 0))
    cutoff = float(config.get("cutoff", pipeline.DEFAULT_CUTOFF))
    filter_cfg = pipeline._candidate_config_from_dict(
        config.get("filter", {"k": 60, "max_dist_km": None})
    )
    scorer = pipeline.make_scorer(params, data.features_norm, embed_graph=data.graph)
    kind = models.kind_of(params)
    os.makedirs(args.out, exist_ok=True)
    for mode in (
        pipeline.Balanced(),
        pipeline.AllPairs(),
        pipeline.CandidateFiltered(filter_cfg),
    ):
        name = pipeline.mode_name(mode)
        report = pipeline.evaluate(
            scorer, data.graph, data.split.val_nodes, mode, cutoff=cutoff,
            seed=pipeline.subseed(seed, f"eval_{kind}_{name}"),
        )
        print(f"{kind} {name}: acc={report.accuracy:.4f} precision={report.precision:.4f} "
              f"recall={report.recall:.4f} auc={report.auc}")
        try:
            with open(os.path.join(args.out, f"{kind}_{name}.json"), "w") as fh:
                fh.write(report.to_json())
                fh.write("\n")
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        with open(args.params) as fh:
            params = models.params_from_json(fh.read())
        with open(args.norm_params) as fh:
            norm = NormParams.from_json(fh.read())
    except OSError as exc:
        raise IoError(str(exc)) from exc
    graph = _load_graph(args.cells, args.edges)
    new_cell = _load_json(args.new_cell)

    try:
        coords = (float(new_cell["lat"]), float(new_cell["lon"]))
        raw = [float(new_cell[name]) for name in graph.features.columns]
    except KeyError as exc:
        raise ValidationError(f"new cell is missing feature {exc}") from exc

    features_norm = zscore_apply(norm, graph.features).values
    new_fm = FeatureMatrix(graph.features.columns, [raw], graph.features.coord_cols)
    new_norm = zscore_apply(norm, new_fm).values[0]

    cand_cfg = CandidateConfig(
        k=args.k,
        max_dist=math.inf if args.max_dist_km is None else args.max_dist_km,
    )
    prediction = pipeline.predict_new_node(
        params, graph, features_norm, new_norm, coords, cand_cfg,
        cutoff=args.cutoff, max_neighbors=args.max_neighbors,
    )
    if prediction.no_candidates:
        print("warning: candidate set is empty", file=sys.stderr)
    print(json.dumps(
        [{"cell_id": cid, "probability": prob} for cid, prob in prediction.neighbors],
        indent=2,
    ))
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = _experiment_config(args)
    result = pipeline.run_experiment(config, args.out)
    print(pipeline.format_summary(result))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ran-topo",
        description="Predict mobility relations for cells in a radio network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic network")
    p.add_argument("--config", required=True, help="SynthConfig JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("candidates", help="evaluate the geographic candidate baseline")
    p.add_argument("--cells", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--k", type=int, required=True, help="max candidates per cell")
    p.add_argument("--max-dist-km", type=float, default=None, help="max distance (km)")
    p.add_argument("--eval-split", default="0.9,0.05,0.05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="also write the report JSON here")
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("train", help="train the link-prediction models")
    p.add_argument("--config", default=None, help="experiment config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=["mlp", "gnn", "both"], default="both")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate trained parameters in all modes")
    p.add_argument("--params", required=True, help="model parameter JSON")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="predict neighbors for a new cell")
    p.add_argument("--params", required=True)
    p.add_argument("--norm-params", required=True)
    p.add_argument("--cells", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--new-cell", required=True, help="JSON with lat, lon, and features")
    p.add_argument("--k", type=int, default=60)
    p.add_argument("--max-dist-km", type=float, default=None)
    p.add_argument("--cutoff", type=float, default=0.5)
    p.add_argument("--max-neighbors", type=int, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("experiment", help="run the full pipeline end to end")
    p.add_argument("--config", default=None, help="experiment config JSON (default: shipped synthetic config)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("RAN_TOPO_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        cause = exc.cause
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(cause, IoError) or isinstance(cause, OSError):
            return EXIT_IO
        if isinstance(cause, InternalError):
            return EXIT_INTERNAL
        return EXIT_CONFIG
    except IoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InternalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except RanTopoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
