"""CSV/JSON ingestion of cells and relations, missing-data handling, and
z-score normalization with train-only statistics.

File formats:
  cells.csv  header ``cell_id,lat,lon,<feature names...>``, UTF-8, ``.``
             decimal separator, empty field = missing value.
  edges.csv  header ``cell_id_a,cell_id_b``.
  norm_params.json  ``{"columns": [...], "mean": [...], "std": [...]}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    AllValuesMissing,
    BadCoordinate,
    BadRow,
    ColumnMismatch,
    DuplicateCellId,
    EmptyRowSet,
    MissingHeader,
)
from .graph import CellId, FeatureMatrix

# std below this is treated as a constant column and normalizes to zero
DEGENERATE_STD = 1e-12


class MissingPolicy(Enum):
    DROP_ROW = "drop_row"
    FILL_COLUMN_MEAN = "fill_column_mean"


def _as_text_lines(source):
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    return source  # assume an open text file


def parse_cells_csv(source) -> tuple[list[CellId], FeatureMatrix, np.ndarray]:
    """Read cells.csv into (ids, features, missing mask).

    Row order is preserved. The mask is True where a field was empty or
    non-numeric. Coordinates must parse and lie in valid ranges.
    """
    reader = csv.reader(_as_text_lines(source))
    header = next(reader, None)
    if not header or header[0].strip() != "cell_id" or len(header) < 3:
        raise MissingHeader("cells.csv must start with 'cell_id,lat,lon,...'")
    columns = tuple(name.strip() for name in header[1:])
    if columns[:2] != ("lat", "lon"):
        raise MissingHeader("cells.csv columns 2 and 3 must be 'lat,lon'")

    ids: list[CellId] = []
    seen = set()
    rows = []
    mask_rows = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise BadRow(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
        cell_id = row[0].strip()
        if cell_id in seen:
            raise DuplicateCellId(f"line {line_no}: duplicate cell id {cell_id!r}")
        seen.add(cell_id)
        ids.append(cell_id)

        values = np.empty(len(columns))
        missing = np.zeros(len(columns), dtype=bool)
        for k, field in enumerate(row[1:]):
            field = field.strip()
            try:
                values[k] = float(field)
            except ValueError:
                values[k] = np.nan
                missing[k] = True
        lat, lon = values[0], values[1]
        if not missing[0] and not -90.0 <= lat <= 90.0:
            raise BadCoordinate(f"line {line_no}: latitude {lat} outside [-90, 90]")
        if not missing[1] and not -180.0 <= lon <= 180.0:
            raise BadCoordinate(f"line {line_no}: longitude {lon} outside [-180, 180]")
        rows.append(values)
        mask_rows.append(missing)

    values = np.array(rows) if rows else np.empty((0, len(columns)))
    mask = np.array(mask_rows) if mask_rows else np.empty((0, len(columns)), dtype=bool)
    return ids, FeatureMatrix(columns, values), mask


def parse_edges_csv(source) -> list[tuple[CellId, CellId]]:
    """Read edges.csv into id pairs, verbatim; dedup is build_graph's job."""
    reader = csv.reader(_as_text_lines(source))
    header = next(reader, None)
    if not header or [h.strip() for h in header] != ["cell_id_a", "cell_id_b"]:
        raise MissingHeader("edges.csv must start with 'cell_id_a,cell_id_b'")
    pairs = []
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2 or not row[0].strip() or not row[1].strip():
            raise BadRow(f"line {line_no}: expected two cell ids")
        pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def _format_float(x: float) -> str:
    # repr gives the shortest decimal that round-trips exactly
    return repr(float(x))


def write_cells_csv(path_or_file, ids, features: FeatureMatrix) -> None:
    """Serialize cells to CSV; floats round-trip exactly."""
    close = False
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        fh = open(path_or_file, "w", newline="")
        close = True
    else:
        fh = path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cell_id", *features.columns])
        for i, cell_id in enumerate(ids):
            writer.writerow(
                [cell_id, *(_format_float(v) for v in features.values[i])]
            )
    finally:
        if close:
            fh.close()


def write_edges_csv(path_or_file, edges) -> None:
    close = False
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        fh = open(path_or_file, "w", newline="")
        close = True
    else:
        fh = path_or_file
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cell_id_a", "cell_id_b"])
        for a, b in edges:
            writer.writerow([a, b])
    finally:
        if close:
            fh.close()


def apply_missing_policy(
    features: FeatureMatrix, mask: np.ndarray, policy: MissingPolicy
) -> tuple[FeatureMatrix, list[int]]:
    """Resolve missing entries; returns the cleaned matrix and kept row indices.

    DROP_ROW removes any row with a missing entry. FILL_COLUMN_MEAN replaces
    missing entries with the column mean over non-missing entries and keeps
    every row; non-missing entries are untouched.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != features.values.shape:
        raise ColumnMismatch(
            f"mask shape {mask.shape} does not match features {features.values.shape}"
        )
    if policy is MissingPolicy.DROP_ROW:
        kept = np.flatnonzero(~mask.any(axis=1))
        return features.take_rows(kept), kept.tolist()

    values = features.values.copy()
    for k in range(features.n_cols):
        col_missing = mask[:, k]
        if not col_missing.any():
            continue
        if col_missing.all():
            raise AllValuesMissing(f"column {features.columns[k]!r} has no values")
        values[col_missing, k] = values[~col_missing, k].mean()
    return (
        FeatureMatrix(features.columns, values, features.coord_cols),
        list(range(features.n_rows)),
    )


@dataclass(frozen=True)
class NormParams:
    """Per-column z-score statistics (population std)."""

    columns: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def to_json(self) -> str:
        return json.dumps(
            {
                "columns": list(self.columns),
                "mean": self.mean.tolist(),
                "std": self.std.tolist(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "NormParams":
        obj = json.loads(text)
        return cls(
            tuple(obj["columns"]),
            np.asarray(obj["mean"], dtype=np.float64),
            np.asarray(obj["std"], dtype=np.float64),
        )


def zscore_fit(features: FeatureMatrix, rows) -> NormParams:
    """Fit per-column mean and population std over the given rows only."""
    rows = sorted(rows)
    if not rows:
        raise EmptyRowSet("cannot fit normalization on an empty row set")
    sub = features.values[rows]
    return NormParams(
        columns=features.columns,
        mean=sub.mean(axis=0),
        std=sub.std(axis=0),  # population (1/N) std
    )


def zscore_apply(params: NormParams, features: FeatureMatrix) -> FeatureMatrix:
    """(x - mean) / std per column; near-constant columns map to zero."""
    if params.columns != features.columns:
        raise ColumnMismatch(
            f"normalization columns {params.columns} != features {features.columns}"
        )
    safe_std = np.where(params.std < DEGENERATE_STD, 1.0, params.std)
    out = (features.values - params.mean) / safe_std
    out[:, params.std < DEGENERATE_STD] = 0.0
    return FeatureMatrix(features.columns, out, features.coord_cols)
