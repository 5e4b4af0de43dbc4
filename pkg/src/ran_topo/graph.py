"""Immutable attributed radio-network graph.

Cells are nodes, mobility relations are undirected unweighted edges. A cell
is identified externally by an opaque id (string or integer) and internally
by a dense index in [0, N) assigned in input order. All operations that look
like mutation return a new graph; instances are safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadRatios,
    FeatureRowMismatch,
    GraphTooSmall,
    SelfLoop,
    UnknownEndpoint,
    UnknownNode,
    ValidationError,
)

CellId = str | int


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """N x k table of per-cell attributes with named columns.

    The two coordinate columns (latitude, longitude in degrees) are flagged
    by index so geographic code can find them regardless of ordering.
    """

    columns: tuple[str, ...]
    values: np.ndarray  # (N, k) float64
    coord_cols: tuple[int, int] = (0, 1)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError("feature values must be a 2-D matrix")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        values.setflags(write=False)
        if len(self.columns) != values.shape[1]:
            raise ValidationError(
                f"{len(self.columns)} column names for {values.shape[1]} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise ValidationError("duplicate feature column names")
        if values.shape[1] < 2:
            raise ValidationError("need at least lat and lon columns")
        lat_i, lon_i = self.coord_cols
        if not (0 <= lat_i < values.shape[1] and 0 <= lon_i < values.shape[1]):
            raise ValidationError("coordinate column indices out of range")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def coords(self) -> np.ndarray:
        """Raw (lat, lon) pairs, shape (N, 2)."""
        return self.values[:, list(self.coord_cols)]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def take_rows(self, rows) -> "FeatureMatrix":
        return FeatureMatrix(self.columns, self.values[np.asarray(rows)], self.coord_cols)

    def validate_coordinates(self) -> None:
        """Check lat/lon ranges; only meaningful before normalization."""
        lat, lon = self.coords()[:, 0], self.coords()[:, 1]
        if lat.size and (np.any(lat < -90) or np.any(lat > 90)):
            raise ValidationError("latitude outside [-90, 90]")
        if lon.size and (np.any(lon < -180) or np.any(lon > 180)):
            raise ValidationError("longitude outside [-180, 180]")


@dataclass(frozen=True, eq=False)
class RanGraph:
    """Undirected attributed graph over cells, immutable after construction."""

    ids: tuple[CellId, ...]
    edges: frozenset  # of (i, j) index pairs with i < j
    adjacency: tuple[tuple[int, ...], ...]  # sorted neighbor indices per node
    features: FeatureMatrix
    _index: dict = field(repr=False, hash=False, compare=False, default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def index_of(self, node: CellId) -> int:
        """Dense internal index for an external id or index."""
        if isinstance(node, (int, np.integer)) and node not in self._index:
            i = int(node)
            if 0 <= i < self.n:
                return i
            raise UnknownNode(f"node index {i} out of range")
        try:
            return self._index[node]
        except KeyError:
            raise UnknownNode(f"unknown cell id {node!r}") from None

    def id_of(self, index: int) -> CellId:
        return self.ids[index]

    def has_edge(self, a: CellId, b: CellId) -> bool:
        i, j = self.index_of(a), self.index_of(b)
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, node: CellId) -> list[CellId]:
        """Adjacent cells, sorted by internal index, as external ids."""
        i = self.index_of(node)
        return [self.ids[j] for j in self.adjacency[i]]

    def neighbor_indices(self, index: int) -> tuple[int, ...]:
        return self.adjacency[index]

    def edge_list(self) -> list[tuple[CellId, CellId]]:
        """Edges as external-id pairs, sorted by index pair."""
        return [(self.ids[i], self.ids[j]) for i, j in sorted(self.edges)]

    def with_features(self, features: FeatureMatrix) -> "RanGraph":
        """Same topology with a replacement feature matrix."""
        if features.n_rows != self.n:
            raise FeatureRowMismatch(
                f"{features.n_rows} feature rows for {self.n} nodes"
            )
        return RanGraph(self.ids, self.edges, self.adjacency, features, self._index)


def build_graph(
    nodes: list[CellId],
    edges,
    features: FeatureMatrix,
) -> RanGraph:
    """Construct a canonical RanGraph.

    Duplicate and reversed-duplicate edges collapse to one; self-loops and
    unknown endpoints are rejected.
    """
    ids = tuple(nodes)
    index = {}
    for i, node_id in enumerate(ids):
        if node_id in index:
            raise ValidationError(f"duplicate node id {node_id!r}")
        index[node_id] = i
    if features.n_rows != len(ids):
        raise FeatureRowMismatch(
            f"{features.n_rows} feature rows for {len(ids)} nodes"
        )

    edge_set = set()
    for edge in edges:
        a, b = tuple(edge)
        if a not in index:
            raise UnknownEndpoint(f"edge endpoint {a!r} is not a node")
        if b not in index:
            raise UnknownEndpoint(f"edge endpoint {b!r} is not a node")
        i, j = index[a], index[b]
        if i == j:
            raise SelfLoop(f"self-loop on node {a!r}")
        edge_set.add((min(i, j), max(i, j)))

    adj = [[] for _ in ids]
    for i, j in edge_set:
        adj[i].append(j)
        adj[j].append(i)
    adjacency = tuple(tuple(sorted(neigh)) for neigh in adj)
    return RanGraph(ids, frozenset(edge_set), adjacency, features, index)


def remove_nodes(graph: RanGraph, removed) -> RanGraph:
    """Graph with the given nodes and all their incident edges removed.

    Surviving nodes keep their relative order and get fresh dense indices;
    the input graph is untouched.
    """
    removed_idx = {graph.index_of(node) for node in removed}
    keep = [i for i in range(graph.n) if i not in removed_idx]
    kept_ids = [graph.ids[i] for i in keep]
    old_to_new = {old: new for new, old in enumerate(keep)}
    kept_edges = [
        (kept_ids[old_to_new[i]], kept_ids[old_to_new[j]])
        for i, j in graph.edges
        if i in old_to_new and j in old_to_new
    ]
    return build_graph(kept_ids, kept_edges, graph.features.take_rows(keep))


@dataclass(frozen=True)
class NodeSplit:
    """Disjoint train/val/test node sets plus the edge-masked training graph."""

    train_nodes: tuple[CellId, ...]
    val_nodes: tuple[CellId, ...]
    test_nodes: tuple[CellId, ...]
    train_graph: RanGraph


def split_nodes(graph: RanGraph, ratios, seed: int) -> NodeSplit:
    """Seeded uniform node split with masked training graph.

    Val/test sizes are floor(N * ratio); remainder nodes go to train. The
    training graph keeps only edges with both endpoints in the train set.
    """
    train_r, val_r, test_r = ratios
    if min(train_r, val_r, test_r) <= 0:
        raise BadRatios("split ratios must be positive")
    if abs(train_r + val_r + test_r - 1.0) > 1e-9:
        raise BadRatios(f"split ratios sum to {train_r + val_r + test_r}, not 1")
    if graph.n < 3:
        raise GraphTooSmall(f"cannot split a graph with {graph.n} nodes")

    n_val = int(np.floor(graph.n * val_r))
    n_test = int(np.floor(graph.n * test_r))
    n_train = graph.n - n_val - n_test

    rng = np.random.default_rng(seed)
    order = rng.permutation(graph.n)
    train_idx = sorted(order[:n_train].tolist())
    val_idx = sorted(order[n_train : n_train + n_val].tolist())
    test_idx = sorted(order[n_train + n_val :].tolist())

    masked = remove_nodes(graph, [graph.ids[i] for i in val_idx + test_idx])
    return NodeSplit(
        train_nodes=tuple(graph.ids[i] for i in train_idx),
        val_nodes=tuple(graph.ids[i] for i in val_idx),
        test_nodes=tuple(graph.ids[i] for i in test_idx),
        train_graph=masked,
    )
