"""Pair sampling, the training loop, evaluation in the three regimes
(balanced, all-pairs, candidate-filtered), AUC, new-node prediction, and the
end-to-end experiment runner.

Everything is seeded: one experiment seed fans out into named stage
sub-seeds, so any stage can be reproduced on its own and a full run is
byte-identical when repeated.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from . import models
from .candidate import CandidateConfig, candidates, candidates_for_new, evaluate_candidates
from .data_io import MissingPolicy, NormParams, apply_missing_policy, parse_cells_csv, parse_edges_csv, zscore_apply, zscore_fit
from .errors import (
    BadConfig,
    DegenerateGraph,
    EmptyEvalSet,
    EmptyTrainSet,
    NotEnoughNegatives,
    SingleClassOnly,
    StageError,
    ValidationError,
)
from .graph import FeatureMatrix, NodeSplit, RanGraph, build_graph, split_nodes
from .report import EvalReport
from .synth import SynthConfig, export, generate

DEFAULT_CUTOFF = 0.5


def subseed(seed: int, name: str) -> int:
    """Stable named sub-seed derived from the experiment seed."""
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# pair sampling

@dataclass(frozen=True)
class Balanced:
    """All positive pairs incident to the eval nodes plus an equal number of
    uniformly sampled negative pairs."""


@dataclass(frozen=True)
class AllPairs:
    """Every (eval node, other node) pair exactly once."""


@dataclass(frozen=True)
class CandidateFiltered:
    """Only pairs whose other node is in the eval node's candidate set."""

    config: CandidateConfig


PairMode = Balanced | AllPairs | CandidateFiltered


def mode_name(mode: PairMode) -> str:
    if isinstance(mode, Balanced):
        return "balanced"
    if isinstance(mode, AllPairs):
        return "all_pairs"
    return "candidate_filtered"


@dataclass(frozen=True, eq=False)
class PairSet:
    """Labeled node-index pairs; label 1 iff the pair is an edge."""

    pairs: np.ndarray  # (B, 2) int
    labels: np.ndarray  # (B,) int


def _positive_pairs(graph: RanGraph, eval_idx: list[int]) -> list[tuple[int, int]]:
    eval_set = set(eval_idx)
    seen = set()
    for e in eval_idx:
        for nb in graph.neighbor_indices(e):
            seen.add((min(e, nb), max(e, nb)))
    _ = eval_set  # pairs between two eval nodes are naturally deduplicated
    return sorted(seen)


def sample_pairs(
    graph: RanGraph, eval_nodes, mode: PairMode, seed: int = 0
) -> PairSet:
    """Draw labeled pairs connecting eval nodes to the rest of the graph.

    Pairs are canonical: a pair between two eval nodes appears once.
    """
    eval_idx = sorted(graph.index_of(node) for node in eval_nodes)
    if not eval_idx:
        raise EmptyEvalSet("no evaluation nodes given")
    eval_set = set(eval_idx)
    n = graph.n

    if isinstance(mode, CandidateFiltered):
        seen = set()
        for e in eval_idx:
            for cand_id, _ in candidates(graph, graph.ids[e], mode.config):
                j = graph.index_of(cand_id)
                seen.add((min(e, j), max(e, j)))
        chosen = sorted(seen)
        pairs = np.array(chosen, dtype=np.int64).reshape(-1, 2)
        labels = np.array([1 if (i, j) in graph.edges else 0 for i, j in chosen])
        return PairSet(pairs, labels.astype(np.int64))

    if isinstance(mode, AllPairs):
        out = []
        for e in eval_idx:
            for j in range(n):
                if j == e or (j in eval_set and j < e):
                    continue  # eval-eval pairs only from the lower index
                out.append((min(e, j), max(e, j)))
        pairs = np.array(sorted(out), dtype=np.int64)
        labels = np.array([1 if (i, j) in graph.edges else 0 for i, j in pairs])
        return PairSet(pairs, labels.astype(np.int64))

    positives = _positive_pairs(graph, eval_idx)
    needed = len(positives)
    n_eval = len(eval_idx)
    total_incident = n_eval * (n - n_eval) + n_eval * (n_eval - 1) // 2
    available = total_incident - len(positives)
    if needed > available:
        raise NotEnoughNegatives(
            f"need {needed} negative pairs but only {available} exist"
        )

    rng = np.random.default_rng(seed)
    negatives: set[tuple[int, int]] = set()
    if needed > available // 2:
        # dense case: enumerate everything and choose without replacement
        pool = []
        for e in eval_idx:
            for j in range(n):
                if j == e or (j in eval_set and j < e):
                    continue
                pair = (min(e, j), max(e, j))
                if pair not in graph.edges:
                    pool.append(pair)
        pool = sorted(set(pool))
        chosen_idx = rng.choice(len(pool), size=needed, replace=False)
        negatives = {pool[i] for i in chosen_idx}
    else:
        eval_arr = np.array(eval_idx)
        while len(negatives) < needed:
            batch = max(64, 2 * (needed - len(negatives)))
            es = eval_arr[rng.integers(0, n_eval, size=batch)]
            js = rng.integers(0, n, size=batch)
            for e, j in zip(es.tolist(), js.tolist()):
                if j == e:
                    continue
                pair = (min(e, j), max(e, j))
                if pair in graph.edges or pair in negatives:
                    continue
                negatives.add(pair)
                if len(negatives) == needed:
                    break

    all_pairs = positives + sorted(negatives)
    pairs = np.array(all_pairs, dtype=np.int64).reshape(-1, 2)
    labels = np.concatenate(
        [np.ones(len(positives), dtype=np.int64), np.zeros(needed, dtype=np.int64)]
    )
    return PairSet(pairs, labels)


# ---------------------------------------------------------------------------
# metrics

def auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC with midranks for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = int((labels == 1).sum())
    neg = int((labels == 0).sum())
    if pos == 0 or neg == 0:
        raise SingleClassOnly("AUC needs at least one positive and one negative")
    ranks = rankdata(scores, method="average")
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)


# ---------------------------------------------------------------------------
# scoring

@dataclass(frozen=True, eq=False)
class PairScorer:
    """Symmetric pair scorer over a fixed row matrix.

    For the MLP the rows are normalized features; for the GNN they are
    embeddings computed once from the graph snapshot this scorer was built
    with.
    """

    params: models.ModelParams
    rows: np.ndarray

    def __call__(self, pairs: np.ndarray) -> np.ndarray:
        return models.symmetric_score_batch(self.params, self.rows, pairs)


def make_scorer(
    params: models.ModelParams,
    features_norm: np.ndarray,
    embed_graph: RanGraph | None = None,
) -> PairScorer:
    """Build a PairScorer; the GNN needs the graph whose edges the SAGE
    layer may aggregate over (the masked graph during evaluation of unseen
    nodes, the deployed graph in production)."""
    if isinstance(params, models.GnnParams):
        if embed_graph is None:
            raise ValidationError("GNN scorer needs a graph for embeddings")
        rows = models.sage_embed(params, features_norm, embed_graph)
    else:
        rows = np.asarray(features_norm, dtype=np.float64)
    return PairScorer(params, rows)


def evaluate(
    scorer,
    graph: RanGraph,
    eval_nodes,
    mode: PairMode,
    cutoff: float = DEFAULT_CUTOFF,
    seed: int = 0,
) -> EvalReport:
    """Score sampled pairs, threshold at the cutoff, report counts and AUC.

    ``scorer`` is any callable mapping an (B, 2) index-pair array to
    probabilities; pairs are scored symmetrically by PairScorer.
    """
    pair_set = sample_pairs(graph, eval_nodes, mode, seed=seed)
    if pair_set.pairs.size == 0:
        return EvalReport(
            mode=mode_name(mode), cutoff=cutoff, pairs=0,
            tp=0, fp=0, tn=0, fn=0,
            accuracy=0.0, precision=0.0, recall=0.0, auc=None,
        )
    scores = np.asarray(scorer(pair_set.pairs), dtype=np.float64)
    predicted = scores >= cutoff
    actual = pair_set.labels == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(np.sum(~predicted & ~actual))
    try:
        auc_value = auc(scores, pair_set.labels)
    except SingleClassOnly:
        auc_value = None
    return EvalReport.from_counts(
        mode=mode_name(mode), cutoff=cutoff, tp=tp, fp=fp, tn=tn, fn=fn, auc=auc_value
    )


# ---------------------------------------------------------------------------
# training

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 512
    learning_rate: float = 1e-3
    seed: int = 0
    resample_negatives: bool = True
    patience: int | None = None

    def __post_init__(self):
        if self.epochs <= 0 or self.batch_size <= 0 or self.learning_rate < 0:
            raise BadConfig("epochs and batch size must be positive, lr >= 0")
        if self.patience is not None and self.patience <= 0:
            raise BadConfig("patience must be positive when set")


@dataclass(frozen=True, eq=False)
class TrainResult:
    params: models.ModelParams
    history: list[dict]  # epoch, train_loss, val_accuracy
    best_epoch: int
    best_val_accuracy: float


def mask_to_train_edges(graph: RanGraph, train_nodes) -> RanGraph:
    """All nodes of ``graph`` but only edges between train nodes.

    Keeps val/test edges out of anything the optimizer can see while still
    covering every node index.
    """
    train_idx = {graph.index_of(node) for node in train_nodes}
    kept = [
        (graph.ids[i], graph.ids[j])
        for i, j in graph.edges
        if i in train_idx and j in train_idx
    ]
    return build_graph(list(graph.ids), kept, graph.features)


def train(
    kind: str,
    graph: RanGraph,
    features_norm: np.ndarray,
    split: NodeSplit,
    cfg: TrainConfig,
    hidden: int = models.DEFAULT_HIDDEN,
    embed: int = models.DEFAULT_EMBED,
) -> TrainResult:
    """Train one model on balanced pairs from the masked training graph.

    Each positive and sampled negative pair is presented in both concat
    orders. The GNN recomputes embeddings from the training graph every
    optimizer step. Returns the parameters of the epoch with the best
    balanced validation accuracy.
    """
    from .neural import AdamState, adam_step

    if not split.train_nodes:
        raise EmptyTrainSet("no training nodes")
    train_graph = split.train_graph
    if not train_graph.edges:
        raise DegenerateGraph("training graph has no edges")

    # features aligned with the train graph's dense indices
    train_rows = [graph.index_of(node) for node in train_graph.ids]
    x_train = features_norm[train_rows]
    k = x_train.shape[1]

    params = models.init_params(
        kind, k=k, hidden=hidden, embed=embed, seed=subseed(cfg.seed, "init")
    )
    param_dict = {name: arr.copy() for name, arr in models.params_to_dict(params).items()}
    adam = AdamState(lr=cfg.learning_rate)

    # fixed balanced validation pair set; embeddings for validation come from
    # the full deployed graph, mirroring how the model is used at inference
    val_pairs = sample_pairs(
        graph, split.val_nodes, Balanced(), seed=subseed(cfg.seed, "val_pairs")
    )
    eval_graph = graph

    sample_rng_seed = subseed(cfg.seed, "negatives")
    shuffle_rng = np.random.default_rng(subseed(cfg.seed, "shuffle"))

    history: list[dict] = []
    best_acc = -1.0
    best_epoch = -1
    best_params_dict = {name: arr.copy() for name, arr in param_dict.items()}
    since_best = 0

    for epoch in range(cfg.epochs):
        neg_seed = sample_rng_seed + epoch if cfg.resample_negatives else sample_rng_seed
        epoch_pairs = sample_pairs(
            train_graph, train_graph.ids, Balanced(), seed=neg_seed
        )
        # both concat orders for every pair
        ordered = np.concatenate([epoch_pairs.pairs, epoch_pairs.pairs[:, ::-1]])
        labels = np.concatenate([epoch_pairs.labels, epoch_pairs.labels]).astype(np.float64)
        order = shuffle_rng.permutation(len(ordered))
        ordered, labels = ordered[order], labels[order]

        total_loss = 0.0
        for start in range(0, len(ordered), cfg.batch_size):
            batch = slice(start, start + cfg.batch_size)
            current = models.params_from_dict(kind, param_dict)
            loss, grads = models.loss_and_grads(
                current, x_train, ordered[batch], labels[batch],
                graph=train_graph if kind == models.GNN_KIND else None,
            )
            total_loss += loss * len(labels[batch])
            param_dict, adam = adam_step(param_dict, grads, adam)
        train_loss = total_loss / len(labels)

        current = models.params_from_dict(kind, param_dict)
        scorer = make_scorer(current, features_norm, embed_graph=eval_graph)
        val_scores = scorer(val_pairs.pairs)
        val_acc = float(np.mean((val_scores >= DEFAULT_CUTOFF) == (val_pairs.labels == 1)))

        history.append(
            {"epoch": epoch, "train_loss": train_loss, "val_accuracy": val_acc}
        )
        if val_acc > best_acc:
            best_acc = val_acc
            best_epoch = epoch
            best_params_dict = {name: arr.copy() for name, arr in param_dict.items()}
            since_best = 0
        else:
            since_best += 1
            if cfg.patience is not None and since_best >= cfg.patience:
                break

    return TrainResult(
        params=models.params_from_dict(kind, best_params_dict),
        history=history,
        best_epoch=best_epoch,
        best_val_accuracy=best_acc,
    )


# ---------------------------------------------------------------------------
# prediction for a new cell

@dataclass(frozen=True)
class Prediction:
    """Ranked predicted neighbors for a new cell."""

    neighbors: list  # (cell id, probability), probability descending
    no_candidates: bool


def predict_new_node(
    params: models.ModelParams,
    graph: RanGraph,
    features_norm: np.ndarray,
    new_features_norm: np.ndarray,
    coords,
    cand_cfg: CandidateConfig,
    cutoff: float = DEFAULT_CUTOFF,
    max_neighbors: int | None = None,
) -> Prediction:
    """Score a not-yet-deployed cell against its geographic candidate set.

    The new cell's features must already be normalized with the stored
    normalization parameters; ``coords`` are its raw (lat, lon). For the
    GNN the new cell embeds with an empty neighborhood while existing cells
    embed over the full deployed graph.
    """
    cands = candidates_for_new(graph, coords, cand_cfg)
    if not cands:
        return Prediction(neighbors=[], no_candidates=True)

    new_x = np.asarray(new_features_norm, dtype=np.float64)
    if isinstance(params, models.GnnParams):
        base_rows = models.sage_embed(params, features_norm, graph)
        new_row = models.new_node_embedding(params, new_x)
    else:
        base_rows = np.asarray(features_norm, dtype=np.float64)
        new_row = new_x
    rows = np.vstack([base_rows, new_row[None, :]])
    new_idx = graph.n
    cand_idx = np.array([graph.index_of(c) for c, _ in cands], dtype=np.int64)
    pairs = np.column_stack([np.full(len(cand_idx), new_idx, dtype=np.int64), cand_idx])
    scores = models.symmetric_score_batch(params, rows, pairs)

    keep = scores >= cutoff
    ranked = sorted(
        zip(cand_idx[keep].tolist(), scores[keep].tolist()),
        key=lambda item: (-item[1], item[0]),
    )
    if max_neighbors is not None:
        ranked = ranked[:max_neighbors]
    return Prediction(
        neighbors=[(graph.ids[i], p) for i, p in ranked],
        no_candidates=False,
    )


# ---------------------------------------------------------------------------
# experiment runner

def default_config() -> dict:
    """The shipped default experiment: synthetic network, both models,
    candidate baseline sweep, all three evaluation modes."""
    return {
        "seed": 7,
        "data": {"synthetic": SynthConfig().to_dict()},
        "split": {"ratios": [0.9, 0.05, 0.05]},
        "candidate_configs": [{"k": 100000, "max_dist_km": None}],
        "filter": {"k": 60, "max_dist_km": 4.0},
        "dims": {"h": 64, "d": 64},
        "train": {
            # the synthetic default separates quickly; a short run keeps the
            # model in the paper-like regime instead of memorizing the box
            "epochs": 6,
            "batch_size": 512,
            "learning_rate": 1e-3,
            "resample_negatives": True,
            "patience": None,
        },
        "cutoff": DEFAULT_CUTOFF,
    }


def _candidate_config_from_dict(obj: dict) -> CandidateConfig:
    max_dist = obj.get("max_dist_km")
    return CandidateConfig(
        k=int(obj["k"]),
        max_dist=math.inf if max_dist is None else float(max_dist),
    )


@dataclass(frozen=True, eq=False)
class ExperimentData:
    """Everything the training/evaluation stages consume."""

    graph: RanGraph  # raw features (candidate module needs raw lat/lon)
    split: NodeSplit
    norm_params: NormParams
    features_norm: np.ndarray  # (N, k) aligned with graph indices
    synthetic: bool


def prepare_experiment(config: dict, out_dir: str | None = None) -> ExperimentData:
    """Run the data, split, and normalization stages of an experiment.

    With a synthetic data source and an out_dir, the generated network is
    exported as cells.csv / edges.csv for inspection and reuse.
    """
    seed = int(config.get("seed", 0))
    data_cfg = config.get("data", {})
    try:
        if "synthetic" in data_cfg:
            synth_cfg = SynthConfig.from_dict(data_cfg["synthetic"])
            gt = generate(synth_cfg)
            graph = gt.graph
            if out_dir is not None:
                data_dir = os.path.join(out_dir, "data")
                os.makedirs(data_dir, exist_ok=True)
                export(gt, data_dir)
            synthetic = True
        elif "cells_csv" in data_cfg:
            with open(data_cfg["cells_csv"]) as fh:
                ids, features, mask = parse_cells_csv(fh)
            with open(data_cfg["edges_csv"]) as fh:
                edge_pairs = parse_edges_csv(fh)
            policy = MissingPolicy(data_cfg.get("missing_policy", "drop_row"))
            features, kept = apply_missing_policy(features, mask, policy)
            kept_ids = [ids[i] for i in kept]
            kept_set = set(kept_ids)
            edge_pairs = [
                (a, b) for a, b in edge_pairs if a in kept_set and b in kept_set
            ]
            graph = build_graph(kept_ids, edge_pairs, features)
            synthetic = False
        else:
            raise BadConfig("config.data needs 'synthetic' or 'cells_csv'/'edges_csv'")
    except OSError as exc:
        from .errors import IoError

        raise StageError("data", IoError(str(exc))) from exc
    except StageError:
        raise
    except Exception as exc:
        raise StageError("data", exc) from exc

    try:
        ratios = tuple(config.get("split", {}).get("ratios", (0.9, 0.05, 0.05)))
        split = split_nodes(graph, ratios, seed=subseed(seed, "split"))
    except Exception as exc:
        raise StageError("split", exc) from exc

    try:
        train_rows = [graph.index_of(node) for node in split.train_nodes]
        norm_params = zscore_fit(graph.features, train_rows)
        features_norm = zscore_apply(norm_params, graph.features).values
    except Exception as exc:
        raise StageError("normalize", exc) from exc

    return ExperimentData(
        graph=graph,
        split=split,
        norm_params=norm_params,
        features_norm=features_norm,
        synthetic=synthetic,
    )


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    data: ExperimentData
    candidate_reports: list  # (CandidateConfig, EvalReport)
    model_results: dict  # kind -> TrainResult
    model_reports: dict  # (kind, mode name) -> EvalReport


def run_experiment(config: dict, out_dir: str | None = None) -> ExperimentResult:
    """Execute the full pipeline and optionally write the report bundle."""
    seed = int(config.get("seed", 0))
    cutoff = float(config.get("cutoff", DEFAULT_CUTOFF))
    data = prepare_experiment(config, out_dir)
    graph, split = data.graph, data.split

    try:
        cand_reports = []
        for cand_obj in config.get("candidate_configs", []):
            cand_cfg = _candidate_config_from_dict(cand_obj)
            cand_reports.append(
                (cand_cfg, evaluate_candidates(graph, split.val_nodes, cand_cfg))
            )
    except StageError:
        raise
    except Exception as exc:
        raise StageError("candidate", exc) from exc

    train_obj = dict(config.get("train", {}))
    dims = config.get("dims", {})
    hidden = int(dims.get("h", models.DEFAULT_HIDDEN))
    embed = int(dims.get("d", models.DEFAULT_EMBED))

    model_results: dict = {}
    model_reports: dict = {}
    filter_cfg = _candidate_config_from_dict(
        config.get("filter", {"k": 60, "max_dist_km": None})
    )
    # edges are only masked while training; scoring uses the deployed graph
    eval_graph = graph
    for kind in (models.MLP_KIND, models.GNN_KIND):
        try:
            cfg = TrainConfig(
                epochs=int(train_obj.get("epochs", 150)),
                batch_size=int(train_obj.get("batch_size", 512)),
                learning_rate=float(train_obj.get("learning_rate", 1e-3)),
                seed=subseed(seed, f"train_{kind}"),
                resample_negatives=bool(train_obj.get("resample_negatives", True)),
                patience=train_obj.get("patience"),
            )
            result = train(
                kind, graph, data.features_norm, split, cfg,
                hidden=hidden, embed=embed,
            )
            model_results[kind] = result
        except StageError:
            raise
        except Exception as exc:
            raise StageError(f"train_{kind}", exc) from exc

        try:
            scorer = make_scorer(result.params, data.features_norm, embed_graph=eval_graph)
            for mode in (Balanced(), AllPairs(), CandidateFiltered(filter_cfg)):
                report = evaluate(
                    scorer, graph, split.val_nodes, mode, cutoff=cutoff,
                    seed=subseed(seed, f"eval_{kind}_{mode_name(mode)}"),
                )
                model_reports[(kind, mode_name(mode))] = report
        except StageError:
            raise
        except Exception as exc:
            raise StageError(f"eval_{kind}", exc) from exc

    result = ExperimentResult(
        data=data,
        candidate_reports=cand_reports,
        model_results=model_results,
        model_reports=model_reports,
    )
    if out_dir is not None:
        try:
            write_bundle(result, config, out_dir)
        except OSError as exc:
            from .errors import IoError

            raise StageError("write", IoError(str(exc))) from exc
    return result


def _write_history_csv(path: str, history: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_accuracy"])
        for row in history:
            writer.writerow(
                [row["epoch"], repr(row["train_loss"]), repr(row["val_accuracy"])]
            )


def write_bundle(result: ExperimentResult, config: dict, out_dir: str) -> None:
    """Write reports, parameters, histories, and summary.csv for a run.

    Output is a pure function of the config, so repeated runs are
    byte-identical.
    """
    os.makedirs(out_dir, exist_ok=True)
    reports_dir = os.path.join(out_dir, "reports")
    os.makedirs(reports_dir, exist_ok=True)

    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "norm_params.json"), "w") as fh:
        fh.write(result.data.norm_params.to_json())
        fh.write("\n")

    summary_rows = []
    for idx, (cand_cfg, report) in enumerate(result.candidate_reports):
        with open(os.path.join(reports_dir, f"candidate_{idx}.json"), "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        summary_rows.append(
            (f"candidate(k={cand_cfg.k},m={cand_cfg.max_dist})", "all_pairs", report)
        )

    for kind, train_result in result.model_results.items():
        with open(os.path.join(out_dir, f"params_{kind}.json"), "w") as fh:
            fh.write(models.params_to_json(train_result.params))
            fh.write("\n")
        _write_history_csv(
            os.path.join(out_dir, f"history_{kind}.csv"), train_result.history
        )

    for (kind, mode), report in result.model_reports.items():
        with open(os.path.join(reports_dir, f"{kind}_{mode}.json"), "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        summary_rows.append((kind, mode, report))

    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "mode", "acc_pct", "precision_pct", "recall_pct", "auc"])
        for model_name, mode, report in summary_rows:
            writer.writerow(
                [
                    model_name,
                    mode,
                    f"{100 * report.accuracy:.2f}",
                    f"{100 * report.precision:.2f}",
                    f"{100 * report.recall:.2f}",
                    "" if report.auc is None else f"{report.auc:.4f}",
                ]
            )


def format_summary(result: ExperimentResult) -> str:
    """Human-readable table mirroring the report columns."""
    lines = [f"{'model':<34} {'mode':<20} {'ACC %':>7} {'Prec %':>7} {'Rec %':>7} {'AUC':>7}"]
    rows = [
        (f"candidate(k={cfg.k},m={cfg.max_dist})", "all_pairs", rep)
        for cfg, rep in result.candidate_reports
    ] + [(kind, mode, rep) for (kind, mode), rep in result.model_reports.items()]
    for model_name, mode, rep in rows:
        auc_text = "-" if rep.auc is None else f"{rep.auc:.4f}"
        lines.append(
            f"{model_name:<34} {mode:<20} {100 * rep.accuracy:>7.2f}"
            f" {100 * rep.precision:>7.2f} {100 * rep.recall:>7.2f} {auc_text:>7}"
        )
    return "\n".join(lines)
