"""Clustered dataset container, file ingestion and diagnostics.

Observations are stored grouped by cluster (clusters in first-appearance
order, rows within a cluster in file order) so that per-cluster sums are a
single ``np.add.reduceat`` over ``offsets``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np
from scipy import sparse

from .errors import ConflictError, ConsistencyError, DomainError, ParseError, ShapeError


@dataclass(frozen=True)
class Cluster:
    id: Hashable
    y: np.ndarray
    X: np.ndarray

    @property
    def rows(self) -> list[tuple[float, np.ndarray]]:
        return [(float(yi), xi) for yi, xi in zip(self.y, self.X)]


@dataclass(frozen=True, eq=False)
class ClusteredDataset:
    """Outcomes in [0, 1] and an n x p design grouped into G clusters.

    ``X`` is either a dense float array or a ``scipy.sparse.csc_matrix``.
    """

    X: np.ndarray | sparse.csc_matrix
    y: np.ndarray
    offsets: np.ndarray
    cluster_ids: tuple
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        n = self.y.shape[0]
        if self.X.ndim != 2 or self.X.shape[0] != n:
            raise ShapeError(f"design has shape {self.X.shape}, expected ({n}, p)")
        if len(self.offsets) < 2:
            raise ShapeError("need at least one cluster")
        if self.offsets[0] != 0 or self.offsets[-1] != n or np.any(np.diff(self.offsets) < 1):
            raise ShapeError("cluster offsets must partition the rows into nonempty clusters")
        if len(self.cluster_ids) != len(self.offsets) - 1:
            raise ShapeError("one id per cluster required")
        if self.columns is not None and len(self.columns) != self.X.shape[1]:
            raise ShapeError("column names do not match design width")
        if not np.all((self.y >= 0) & (self.y <= 1)):
            raise DomainError("outcomes must lie in [0, 1]")
        if sparse.issparse(self.X):
            if not np.all(np.isfinite(self.X.data)):
                raise DomainError("design contains non-finite values")
        elif not np.all(np.isfinite(self.X)):
            raise DomainError("design contains non-finite values")

    @classmethod
    def from_arrays(cls, X, y, clusters: Sequence[Hashable],
                    columns: Sequence[str] | None = None) -> "ClusteredDataset":
        """Group rows by cluster label, keeping first-appearance and within-cluster order."""
        y = np.asarray(y, dtype=float).ravel()
        labels = list(clusters)
        if len(labels) != y.shape[0]:
            raise ShapeError("one cluster label per observation required")
        first: dict[Hashable, int] = {}
        codes = np.empty(len(labels), dtype=np.intp)
        for i, lab in enumerate(labels):
            codes[i] = first.setdefault(lab, len(first))
        order = np.argsort(codes, kind="stable")
        sizes = np.bincount(codes, minlength=len(first))
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)
        if sparse.issparse(X):
            Xg = sparse.csc_matrix(X[order], dtype=float)
            Xg.sort_indices()
        else:
            Xg = np.asfortranarray(np.asarray(X, dtype=float)[order])
        return cls(Xg, y[order], offsets, tuple(first),
                   None if columns is None else tuple(columns))

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @property
    def G(self) -> int:
        return len(self.offsets) - 1

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.X)

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.diff(self.offsets)

    @property
    def cluster_index(self) -> np.ndarray:
        """Cluster number of each (grouped) observation."""
        return np.repeat(np.arange(self.G), self.cluster_sizes)

    @property
    def clusters(self) -> list[Cluster]:
        Xd = self.dense_X()
        return [Cluster(cid, self.y[a:b], Xd[a:b])
                for cid, a, b in zip(self.cluster_ids, self.offsets[:-1], self.offsets[1:])]

    def dense_X(self) -> np.ndarray:
        return self.X.toarray() if self.is_sparse else self.X

    def to_sparse(self) -> "ClusteredDataset":
        Xs = sparse.csc_matrix(self.X, dtype=float)
        Xs.sort_indices()
        return ClusteredDataset(Xs, self.y, self.offsets, self.cluster_ids, self.columns)

    def to_dense(self) -> "ClusteredDataset":
        return ClusteredDataset(np.asfortranarray(self.dense_X()), self.y, self.offsets,
                                self.cluster_ids, self.columns)

    def cluster_sum(self, v: np.ndarray) -> np.ndarray:
        """Sum an observation-level array (n,) or (n, m) within clusters."""
        return np.add.reduceat(np.asarray(v), self.offsets[:-1], axis=0)

    def column_index(self, name: str) -> int:
        if self.columns is None or name not in self.columns:
            raise KeyError(name)
        return self.columns.index(name)


# ---------------------------------------------------------------------------
# long CSV


@dataclass(frozen=True)
class CsvSchema:
    cluster: str = "cluster"
    outcome: str = "y"
    covariates: tuple[str, ...] | None = None  # None: every other column, header order


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {what} value {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} value {text!r}", line)
    return value


def load_long_csv(path: str | Path, schema: CsvSchema | None = None) -> ClusteredDataset:
    """Read one observation per row: cluster id, outcome, covariates."""
    schema = schema or CsvSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", 1) from None
        for col in (schema.cluster, schema.outcome):
            if col not in header:
                raise ParseError(f"header lacks column {col!r}", 1)
        covs = schema.covariates
        if covs is None:
            covs = tuple(h for h in header if h not in (schema.cluster, schema.outcome))
        missing = [c for c in covs if c not in header]
        if missing:
            raise ParseError(f"header lacks covariate columns {missing}", 1)
        ci, yi = header.index(schema.cluster), header.index(schema.outcome)
        xi = [header.index(c) for c in covs]
        labels, ys, rows = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != len(header):
                raise ShapeError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
            y = _parse_float(rec[yi], lineno, "outcome")
            if not 0.0 <= y <= 1.0:
                raise DomainError(f"line {lineno}: outcome {y} outside [0, 1]")
            labels.append(rec[ci].strip())
            ys.append(y)
            rows.append([_parse_float(rec[j], lineno, header[j]) for j in xi])
    if not ys:
        raise ParseError("no data rows", 2)
    X = np.array(rows, dtype=float).reshape(len(ys), len(xi))
    return ClusteredDataset.from_arrays(X, ys, labels, covs)


def write_long_csv(ds: ClusteredDataset, path: str | Path, schema: CsvSchema | None = None) -> None:
    schema = schema or CsvSchema()
    cols = ds.columns or tuple(f"x{j + 1}" for j in range(ds.p))
    Xd = ds.dense_X()
    labels = np.repeat(np.array(ds.cluster_ids, dtype=object), ds.cluster_sizes)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([schema.cluster, schema.outcome, *cols])
        for lab, y, x in zip(labels, ds.y, Xd):
            w.writerow([lab, repr(float(y)), *(repr(float(v)) for v in x)])


# ---------------------------------------------------------------------------
# sparse triplets


def _numeric_records(path: str | Path, ncols: int, what: str):
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if lineno == 1 and not _looks_numeric(rec[-1]):
                continue  # header: data rows end in a number
            if len(rec) != ncols:
                raise ShapeError(f"{what} line {lineno}: expected {ncols} fields, got {len(rec)}")
            yield lineno, [r.strip() for r in rec]


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_sparse_triplets(rows_path: str | Path, labels_path: str | Path, p: int | None = None,
                         intercept: bool = False) -> ClusteredDataset:
    """Build a sparse dataset from ``doc,col,value`` triplets and ``doc,cluster,y`` labels.

    Document order follows the labels file.  Cells absent from the triplet
    file are zero.  With ``intercept=True`` a column of ones is prepended.
    """
    docs: dict[str, int] = {}
    labels, ys = [], []
    for lineno, (doc, cl, yv) in _numeric_records(labels_path, 3, "labels"):
        if doc in docs:
            raise ConflictError(f"labels line {lineno}: document {doc} labeled twice")
        y = _parse_float(yv, lineno, "outcome")
        if not 0.0 <= y <= 1.0:
            raise DomainError(f"labels line {lineno}: outcome {y} outside [0, 1]")
        docs[doc] = len(docs)
        labels.append(cl)
        ys.append(y)
    if not docs:
        raise ParseError("labels file has no rows", 1)
    r_idx, c_idx, vals = [], [], []
    seen: set[tuple[int, int]] = set()
    for lineno, (doc, col, val) in _numeric_records(rows_path, 3, "triplets"):
        if doc not in docs:
            raise ConsistencyError(f"triplets line {lineno}: document {doc} has no label")
        try:
            j = int(col)
        except ValueError:
            raise ParseError(f"column index {col!r} is not an integer", lineno) from None
        if j < 0 or (p is not None and j >= p):
            raise ShapeError(f"triplets line {lineno}: column {j} outside [0, {p})")
        key = (docs[doc], j)
        if key in seen:
            raise ConflictError(f"triplets line {lineno}: duplicate cell (doc {doc}, col {j})")
        seen.add(key)
        r_idx.append(key[0])
        c_idx.append(j)
        vals.append(_parse_float(val, lineno, "value"))
    width = p if p is not None else (max(c_idx) + 1 if c_idx else 0)
    X = sparse.coo_matrix((vals, (r_idx, c_idx)), shape=(len(docs), width)).tocsc()
    columns = [f"w{j}" for j in range(width)]
    if intercept:
        X = sparse.hstack([np.ones((len(docs), 1)), X], format="csc")
        columns = ["intercept", *columns]
    return ClusteredDataset.from_arrays(X, ys, labels, columns)


# ---------------------------------------------------------------------------
# diagnostics


def validate(ds: ClusteredDataset, max_cluster_size: int | None = None) -> list[str]:
    """Return human-readable findings; never modifies ``ds``."""
    findings: list[str] = []
    Xd = ds.dense_X()
    col_min, col_max = Xd.min(axis=0), Xd.max(axis=0)
    constant = col_min == col_max
    intercept = next((j for j in range(ds.p) if constant[j] and col_min[j] == 1.0), None)
    for j in np.flatnonzero(constant):
        if j != intercept:
            findings.append(f"constant column {j}")
    sizes = ds.cluster_sizes
    multi = sizes >= 2
    if np.any(multi):
        starts = ds.offsets[:-1]
        cmin = np.minimum.reduceat(Xd, starts, axis=0)[multi]
        cmax = np.maximum.reduceat(Xd, starts, axis=0)[multi]
        within_const = np.all(cmin == cmax, axis=0)
        for j in np.flatnonzero(within_const & ~constant):
            findings.append(f"column {j} has zero within-cluster variation")
    if max_cluster_size is not None:
        for g in np.flatnonzero(sizes > max_cluster_size):
            findings.append(f"cluster {ds.cluster_ids[g]!r} has {sizes[g]} > {max_cluster_size} rows")
    if np.all(ds.y == 0) or np.all(ds.y == 1):
        findings.append("degenerate outcome: all y identical (perfect-separation risk)")
    return findings
