"""Geographic candidate algorithm.

For a query cell, return the K nearest cells within a maximum distance m,
using only the raw (unnormalized) latitude/longitude columns. Serves both
as a baseline predictor and as a pre-filter for the learned models.

The search is an exact brute-force scan; networks here are desk-scale and
an index must not change results anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyEvalSet, ValidationError
from .graph import CellId, RanGraph
from .report import EvalReport

EARTH_RADIUS_KM = 6371.0


class DistanceMetric(Enum):
    HAVERSINE_KM = "haversine_km"
    EUCLIDEAN_DEGREES = "euclidean_degrees"


@dataclass(frozen=True)
class CandidateConfig:
    """K = max number of candidates, m = max distance (km by default)."""

    k: int
    max_dist: float = math.inf
    metric: DistanceMetric = DistanceMetric.HAVERSINE_KM

    def __post_init__(self):
        if self.k < 0:
            raise ValidationError("K must be >= 0")
        if self.max_dist < 0:
            raise ValidationError("max distance must be >= 0")


def geo_distance(a, b, metric: DistanceMetric = DistanceMetric.HAVERSINE_KM) -> float:
    """Distance between two (lat, lon) points in degrees.

    Haversine returns kilometers on a sphere of radius 6371 km; the
    Euclidean variant returns plain degrees.
    """
    if metric is DistanceMetric.EUCLIDEAN_DEGREES:
        return math.hypot(a[0] - b[0], a[1] - b[1])
    lat1, lon1, lat2, lon2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    s = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def _distances_to_all(coords: np.ndarray, point, metric: DistanceMetric) -> np.ndarray:
    """Vectorized distances from one (lat, lon) point to every row of coords."""
    if coords.size == 0:
        return np.empty(0)
    if metric is DistanceMetric.EUCLIDEAN_DEGREES:
        diff = coords - np.asarray(point)
        return np.hypot(diff[:, 0], diff[:, 1])
    lat1 = math.radians(point[0])
    lon1 = math.radians(point[1])
    lat2 = np.radians(coords[:, 0])
    lon2 = np.radians(coords[:, 1])
    s = (
        np.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))


def _select(dist: np.ndarray, exclude: int | None, cfg: CandidateConfig):
    """Filter by max distance, sort by (distance, index), truncate to K."""
    idx = np.arange(dist.size)
    keep = dist <= cfg.max_dist
    if exclude is not None:
        keep[exclude] = False
    idx = idx[keep]
    order = np.lexsort((idx, dist[keep]))
    chosen = idx[order][: cfg.k]
    return [(int(i), float(dist[i])) for i in chosen]


def candidates(
    graph: RanGraph, node: CellId, cfg: CandidateConfig
) -> list[tuple[CellId, float]]:
    """K nearest cells to a cell in the graph, within max distance.

    Sorted ascending by distance, ties broken by internal index; the query
    cell itself is excluded.
    """
    i = graph.index_of(node)
    coords = graph.features.coords()
    dist = _distances_to_all(coords, coords[i], cfg.metric)
    return [(graph.ids[j], d) for j, d in _select(dist, i, cfg)]


def candidates_for_new(
    graph: RanGraph, coords_point, cfg: CandidateConfig
) -> list[tuple[CellId, float]]:
    """Candidate set for a query point that need not be a graph node."""
    coords = graph.features.coords()
    dist = _distances_to_all(coords, coords_point, cfg.metric)
    return [(graph.ids[j], d) for j, d in _select(dist, None, cfg)]


def evaluate_candidates(graph: RanGraph, eval_nodes, cfg: CandidateConfig) -> EvalReport:
    """Confusion report treating each node's candidate set as its predicted
    neighbor list, over all (eval node, other node) pairs.

    AUC is omitted: candidate membership is a hard binary prediction.
    """
    eval_idx = sorted(graph.index_of(node) for node in eval_nodes)
    if not eval_idx:
        raise EmptyEvalSet("no evaluation nodes given")

    # Each eval node is scored against every other node; pairs between two
    # eval nodes are therefore counted once per direction, since each node
    # has its own candidate list.
    tp = fp = fn = 0
    n_pairs = 0
    for i in eval_idx:
        predicted = {graph.index_of(c) for c, _ in candidates(graph, graph.ids[i], cfg)}
        actual = set(graph.neighbor_indices(i))
        tp += len(predicted & actual)
        fp += len(predicted - actual)
        fn += len(actual - predicted)
        n_pairs += graph.n - 1
    tn = n_pairs - tp - fp - fn
    return EvalReport.from_counts(
        mode=f"candidate(k={cfg.k},m={cfg.max_dist})",
        cutoff=0.5,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        auc=None,
    )
