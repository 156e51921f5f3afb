"""CSV/JSON readers and writers for distributions, matrices and hierarchies.

Floats are written with ``repr``, which round-trips every double exactly.

Distribution CSV: a header of element ids, one distribution per row.
An optional ``label`` column names rows; ``weights_column`` picks a column
holding ensemble weights. JSON input is either a list of numbers or
``{"elements": [...], "probs": [...]}`` (``probs`` may be a list of rows).

Matrix CSV: square, with the element ids as the header row (after one
corner cell) and as the first column, in the same order.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .similarity import DistanceMatrix, Hierarchy, SimilarityMatrix, level_map

MATRIX_KINDS = ("distance", "similarity", "abundance", "square")


@dataclass
class DistributionTable:
    elements: List[str]
    probs: np.ndarray  # (m, n)
    weights: Optional[np.ndarray] = None
    labels: Optional[List[str]] = None


def _rows(path) -> List[List[str]]:
    with open(path, newline="") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh) if any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: no data")
    width = len(rows[0])
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != width:
            raise ValidationError(f"{path}: ragged row at line {i} ({len(r)} fields, expected {width})")
    return rows


def _float(cell: str, path, row: int, col: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValidationError(f"{path}: non-numeric value {cell!r} at row {row}, column {col}") from None


def read_distributions(path, weights_column: Optional[str] = None,
                       label_column: str = "label") -> DistributionTable:
    """Read distributions from CSV or JSON (chosen by file suffix)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _read_distributions_json(path)
    rows = _rows(path)
    header, body = rows[0], rows[1:]
    if not body:
        raise ValidationError(f"{path}: header only, no distributions")
    if weights_column is not None and weights_column not in header:
        raise ValidationError(f"{path}: weights column {weights_column!r} not in header")
    skip = {c for c in (weights_column, label_column) if c in header}
    cols = [j for j, h in enumerate(header) if h not in skip]
    P = np.array([[_float(r[j], path, i, j) for j in cols] for i, r in enumerate(body)])
    w = None
    if weights_column is not None:
        j = header.index(weights_column)
        w = np.array([_float(r[j], path, i, j) for i, r in enumerate(body)])
    labels = [r[header.index(label_column)] for r in body] if label_column in header else None
    return DistributionTable([header[j] for j in cols], P, w, labels)


def _read_distributions_json(path: Path) -> DistributionTable:
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(obj, list):
        obj = {"probs": obj}
    if not isinstance(obj, dict) or "probs" not in obj:
        raise ValidationError(f"{path}: expected a list or an object with 'probs'")
    P = np.atleast_2d(np.asarray(obj["probs"], dtype=float))
    elements = [str(e) for e in obj.get("elements", range(P.shape[1]))]
    if len(elements) != P.shape[1]:
        raise ValidationError(f"{path}: {len(elements)} element ids for {P.shape[1]} columns")
    w = np.asarray(obj["weights"], dtype=float) if "weights" in obj else None
    return DistributionTable(elements, P, w, obj.get("labels"))


def read_matrix_csv(path, kind: str):
    """Read a matrix CSV and apply the checks of ``kind``.

    ``distance`` and ``similarity`` must be square with matching header
    row and column; ``square`` applies only those shape checks and returns
    the raw array. ``abundance`` is plots x species with plot ids in the
    first column and species ids in the header; it returns
    ``(plots, species, values)``.
    """
    if kind not in MATRIX_KINDS:
        raise ValidationError(f"kind must be one of {MATRIX_KINDS}, got {kind!r}")
    rows = _rows(path)
    header, body = rows[0][1:], rows[1:]
    row_ids = [r[0] for r in body]
    values = np.array([[_float(c, path, i, j) for j, c in enumerate(r[1:])] for i, r in enumerate(body)])
    if kind == "abundance":
        if values.size and values.min() < 0:
            i, j = np.argwhere(values < 0)[0]
            raise ValidationError(f"{path}: negative abundance at ({i}, {j})")
        return row_ids, header, values
    if len(body) != len(header):
        raise ValidationError(f"{path}: {len(body)} rows but {len(header)} columns; matrix must be square")
    for i, (a, b) in enumerate(zip(row_ids, header)):
        if a != b:
            raise ValidationError(f"{path}: row id {a!r} at index {i} does not match column id {b!r}")
    if kind == "square":
        return values
    if kind == "distance":
        return DistanceMatrix(values)
    return SimilarityMatrix(values)


def element_ids_of_matrix(path) -> List[str]:
    return _rows(path)[0][1:]


def write_matrix_csv(path, M, ids: Optional[Sequence] = None) -> None:
    M = np.asarray(M, dtype=float)
    ids = [str(i) for i in (ids if ids is not None else range(M.shape[1]))]
    row_ids = ids if M.shape[0] == M.shape[1] else [str(i) for i in range(M.shape[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + ids)
        for rid, row in zip(row_ids, M):
            w.writerow([rid] + [repr(float(x)) for x in row])


def write_rows_csv(path, rows: List[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def read_hierarchy(path, levels_path) -> Hierarchy:
    """Hierarchy from a CSV (``element,level1,...,levelL``) and a JSON ``{level: similarity}`` map."""
    rows = _rows(path)
    body = rows[1:]
    if not body:
        raise ValidationError(f"{path}: no elements")
    try:
        mapping = json.loads(Path(levels_path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{levels_path}: invalid JSON ({exc})") from None
    if not isinstance(mapping, dict):
        raise ValidationError(f"{levels_path}: expected an object mapping level to similarity")
    return Hierarchy([r[1:] for r in body], level_map(mapping))


def hierarchy_element_ids(path) -> List[str]:
    return [r[0] for r in _rows(path)[1:]]
