"""Seeded synthetic mobile-network generator with a ground-truth edge oracle.

Sites are placed uniformly in a bounding box; every cell of a site shares
the site's coordinates (as in real exports, where cell locations reflect the
managing hardware). Each cell carries 8 features:

    lat, lon, band, azimuth, tx_power, antenna_height, capacity, nuisance

Oracle edges, rule "band" (default):
    (a) every intra-site cell pair;
    (b) inter-site pairs with haversine distance <= radius_km and band ids
        equal or adjacent (|delta band| <= 1).

Rule "site_mean" replaces the band condition for inter-site pairs with a
neighbor-aggregate condition: the pair is related iff the sum of the two
cells' site-mate mean tx_power values reaches a threshold. A cell's own
features say nothing about its site-mates' mean, so this rule rewards
models that can aggregate over the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .candidate import geo_distance
from .errors import BadConfig
from .graph import FeatureMatrix, RanGraph, build_graph

FEATURE_COLUMNS = (
    "lat",
    "lon",
    "band",
    "azimuth",
    "tx_power",
    "antenna_height",
    "capacity",
    "nuisance",
)

BAND_RULE = "band"
SITE_MEAN_RULE = "site_mean"

TX_POWER_RANGE = (10.0, 50.0)
ANTENNA_HEIGHT_RANGE = (10.0, 60.0)
CAPACITY_RANGE = (50.0, 500.0)


@dataclass(frozen=True)
class SynthConfig:
    sites: int = 300
    cells_per_site: tuple[int, int] = (3, 7)
    bbox: tuple[float, float, float, float] = (56.8, 57.8, 11.0, 13.0)  # lat min/max, lon min/max
    radius_km: float = 4.0
    bands: int = 6
    feature_noise: float = 1.0
    seed: int = 0
    edge_rule: str = BAND_RULE
    # site_mean rule only; default = twice the tx_power midpoint, so roughly
    # half of the close pairs qualify
    site_mean_threshold: float = TX_POWER_RANGE[0] + TX_POWER_RANGE[1]

    def validate(self) -> None:
        lat_min, lat_max, lon_min, lon_max = self.bbox
        if self.sites < 2:
            raise BadConfig("sites must be >= 2")
        lo, hi = self.cells_per_site
        if not 1 <= lo <= hi:
            raise BadConfig("cells_per_site must be a range with 1 <= lo <= hi")
        if self.radius_km <= 0:
            raise BadConfig("radius_km must be > 0")
        if self.bands < 1:
            raise BadConfig("bands must be >= 1")
        if self.feature_noise < 0:
            raise BadConfig("feature_noise must be >= 0")
        if not (lat_min < lat_max and lon_min < lon_max):
            raise BadConfig("bbox must have positive extent")
        if max(abs(lat_min), abs(lat_max)) > 60 or max(abs(lon_min), abs(lon_max)) > 180:
            raise BadConfig("bbox must lie within |lat| <= 60, |lon| <= 180")
        if self.edge_rule not in (BAND_RULE, SITE_MEAN_RULE):
            raise BadConfig(f"unknown edge rule {self.edge_rule!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        kwargs = dict(obj)
        if "cells_per_site" in kwargs:
            kwargs["cells_per_site"] = tuple(kwargs["cells_per_site"])
        if "bbox" in kwargs:
            kwargs["bbox"] = tuple(kwargs["bbox"])
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise BadConfig(str(exc)) from None
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "sites": self.sites,
            "cells_per_site": list(self.cells_per_site),
            "bbox": list(self.bbox),
            "radius_km": self.radius_km,
            "bands": self.bands,
            "feature_noise": self.feature_noise,
            "seed": self.seed,
            "edge_rule": self.edge_rule,
            "site_mean_threshold": self.site_mean_threshold,
        }


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Generated graph plus the oracle rule parameters that produced it."""

    graph: RanGraph
    config: SynthConfig
    site_of: tuple[int, ...] = field(repr=False)  # site index per cell


def _site_mate_mean_tx(x: np.ndarray, site_of: np.ndarray) -> np.ndarray:
    """Per cell: mean tx_power over same-site cells excluding itself."""
    tx = x[:, FEATURE_COLUMNS.index("tx_power")]
    out = np.zeros(len(tx))
    for site in np.unique(site_of):
        members = np.flatnonzero(site_of == site)
        if len(members) < 2:
            continue
        total = tx[members].sum()
        out[members] = (total - tx[members]) / (len(members) - 1)
    return out


def oracle_edge(
    cfg: SynthConfig,
    site_a: int,
    site_b: int,
    dist_km: float,
    band_a: float,
    band_b: float,
    mate_mean_a: float,
    mate_mean_b: float,
) -> bool:
    """The ground-truth relation rule for one cell pair."""
    if site_a == site_b:
        return True
    if dist_km > cfg.radius_km:
        return False
    if cfg.edge_rule == BAND_RULE:
        return abs(band_a - band_b) <= 1
    return mate_mean_a + mate_mean_b >= cfg.site_mean_threshold


def generate(cfg: SynthConfig) -> GroundTruth:
    """Deterministically generate a synthetic network for the config seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    lat_min, lat_max, lon_min, lon_max = cfg.bbox

    site_lat = rng.uniform(lat_min, lat_max, size=cfg.sites)
    site_lon = rng.uniform(lon_min, lon_max, size=cfg.sites)
    lo, hi = cfg.cells_per_site
    cells_per_site = rng.integers(lo, hi + 1, size=cfg.sites)

    n = int(cells_per_site.sum())
    site_of = np.repeat(np.arange(cfg.sites), cells_per_site)
    ids = []
    for site, count in enumerate(cells_per_site):
        ids.extend(f"S{site:04d}C{c}" for c in range(count))

    x = np.empty((n, len(FEATURE_COLUMNS)))
    x[:, 0] = site_lat[site_of]
    x[:, 1] = site_lon[site_of]
    x[:, 2] = rng.integers(0, cfg.bands, size=n)
    x[:, 3] = rng.uniform(0.0, 360.0, size=n)
    x[:, 4] = rng.uniform(*TX_POWER_RANGE, size=n)
    x[:, 5] = rng.uniform(*ANTENNA_HEIGHT_RANGE, size=n)
    x[:, 6] = rng.uniform(*CAPACITY_RANGE, size=n)
    x[:, 7] = rng.normal(0.0, cfg.feature_noise, size=n)

    mate_mean = _site_mate_mean_tx(x, site_of)

    # site-level distance matrix keeps the pair scan at S^2, not N^2
    site_dist = np.empty((cfg.sites, cfg.sites))
    for s in range(cfg.sites):
        site_dist[s, s] = 0.0
        for t in range(s + 1, cfg.sites):
            d = geo_distance((site_lat[s], site_lon[s]), (site_lat[t], site_lon[t]))
            site_dist[s, t] = site_dist[t, s] = d

    cells_by_site = [np.flatnonzero(site_of == s) for s in range(cfg.sites)]
    edges = []
    band = x[:, 2]
    for s in range(cfg.sites):
        members = cells_by_site[s]
        for ai in range(len(members)):
            for bi in range(ai + 1, len(members)):
                edges.append((ids[members[ai]], ids[members[bi]]))
        for t in range(s + 1, cfg.sites):
            if site_dist[s, t] > cfg.radius_km:
                continue
            for a in members:
                for b in cells_by_site[t]:
                    if oracle_edge(
                        cfg, s, t, site_dist[s, t],
                        band[a], band[b], mate_mean[a], mate_mean[b],
                    ):
                        edges.append((ids[a], ids[b]))

    features = FeatureMatrix(FEATURE_COLUMNS, x)
    features.validate_coordinates()
    graph = build_graph(ids, edges, features)
    return GroundTruth(graph=graph, config=cfg, site_of=tuple(site_of.tolist()))


def export(gt: GroundTruth, out_dir) -> tuple[str, str]:
    """Write cells.csv and edges.csv; re-ingestion reproduces the graph."""
    import os

    from .data_io import write_cells_csv, write_edges_csv
    from .errors import IoError

    cells_path = os.path.join(out_dir, "cells.csv")
    edges_path = os.path.join(out_dir, "edges.csv")
    try:
        write_cells_csv(cells_path, gt.graph.ids, gt.graph.features)
        write_edges_csv(edges_path, gt.graph.edge_list())
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return cells_path, edges_path
