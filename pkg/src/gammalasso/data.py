"""Design-matrix container and file ingestion.

The solver consumes columns through a compressed sparse layout (one
``indices``/``values`` slice per column); columns that are mostly zero
drop their zeros, dense columns keep every row.  Either storage yields
identical numerics downstream, the split is purely about memory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SPARSE_ZERO_FRACTION = 0.5  # store a column sparsely when > 50% zeros


class DataError(ValueError):
    """Raised for any ingestion or validation problem."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PenaltyScales:
    """Per-column multiplier on |beta_j| inside the penalty (0 for free columns)."""

    s: np.ndarray

    def __post_init__(self):
        _freeze(self.s)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column-oriented design matrix with response.

    Columns are stored in a CSC-like layout: column j occupies
    ``indices[indptr[j]:indptr[j+1]]`` / ``values[indptr[j]:indptr[j+1]]``.
    ``dense_mask[j]`` records whether the column keeps explicit zeros
    (indices then run 0..n-1).  ``col_sd`` uses the population convention
    (divisor n) so the penalty-scale algebra stays exact.
    """

    n: int
    p: int
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    dense_mask: np.ndarray
    y: np.ndarray
    col_mean: np.ndarray
    col_sd: np.ndarray
    free: frozenset = field(default_factory=frozenset)
    names: Optional[tuple] = None

    def __post_init__(self):
        for a in (self.indptr, self.indices, self.values, self.dense_mask,
                  self.y, self.col_mean, self.col_sd):
            _freeze(a)

    # -- construction -------------------------------------------------

    @staticmethod
    def from_columns(columns: Sequence[tuple], y, n: int, free=(),
                     names=None, family_hint: str = "gaussian") -> "Dataset":
        """Build from per-column (row_indices, values) pairs.

        Row indices must be strictly increasing within a column; explicit
        zero values are dropped.  Columns with more than 50% zeros are kept
        sparse, the rest are densified.
        """
        y = np.array(y, dtype=np.float64)  # own copy: stored arrays are frozen
        if y.shape != (n,):
            raise DataError(f"response length {y.shape[0]} != n={n}")
        if not np.all(np.isfinite(y)):
            raise DataError("non-finite response value")
        if family_hint == "binomial" and (y.min() < 0.0 or y.max() > 1.0):
            bad = int(np.argmax((y < 0) | (y > 1)))
            raise DataError(f"binomial response outside [0,1] at row {bad}: {y[bad]}")

        p = len(columns)
        free = frozenset(int(j) for j in free)
        for j in free:
            if not 0 <= j < p:
                raise DataError(f"free column index {j} out of range")

        indptr = np.zeros(p + 1, dtype=np.int64)
        idx_parts, val_parts = [], []
        dense_mask = np.zeros(p, dtype=bool)
        col_mean = np.zeros(p)
        col_sd = np.zeros(p)
        for j, (ri, vv) in enumerate(columns):
            ri = np.asarray(ri, dtype=np.int64)
            vv = np.asarray(vv, dtype=np.float64)
            if ri.shape != vv.shape:
                raise DataError(f"column {j}: index/value length mismatch")
            if not np.all(np.isfinite(vv)):
                raise DataError(f"column {j}: non-finite value")
            if ri.size:
                if ri[0] < 0 or ri[-1] >= n or np.any(np.diff(ri) <= 0):
                    raise DataError(
                        f"column {j}: row indices must be strictly increasing in [0,{n})")
            keep = vv != 0.0
            ri, vv = ri[keep], vv[keep]
            nz = ri.size
            col_mean[j] = vv.sum() / n
            # two-pass variance: stable under large means
            dev = vv - col_mean[j]
            ss = float(dev @ dev) + (n - nz) * col_mean[j] ** 2
            col_sd[j] = float(np.sqrt(max(ss / n, 0.0)))
            if col_sd[j] == 0.0 and j not in free:
                raise DataError(f"constant penalized column {j}"
                                + (f" ({names[j]})" if names else ""))
            if n - nz > SPARSE_ZERO_FRACTION * n:
                idx_parts.append(ri)
                val_parts.append(vv)
                indptr[j + 1] = indptr[j] + nz
            else:
                dense = np.zeros(n)
                dense[ri] = vv
                idx_parts.append(np.arange(n, dtype=np.int64))
                val_parts.append(dense)
                dense_mask[j] = True
                indptr[j + 1] = indptr[j] + n

        indices = np.concatenate(idx_parts) if idx_parts else np.zeros(0, dtype=np.int64)
        values = np.concatenate(val_parts) if val_parts else np.zeros(0)
        return Dataset(n=n, p=p, indptr=indptr, indices=indices, values=values,
                       dense_mask=dense_mask, y=y, col_mean=col_mean, col_sd=col_sd,
                       free=free, names=tuple(names) if names else None)

    @staticmethod
    def from_matrix(X, y, free=(), names=None, family_hint: str = "gaussian") -> "Dataset":
        """Build from a dense (n, p) array."""
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        cols = []
        for j in range(X.shape[1]):
            nz = np.nonzero(X[:, j])[0]
            cols.append((nz, X[nz, j]))
        return Dataset.from_columns(cols, y, n, free=free, names=names,
                                    family_hint=family_hint)

    def take_rows(self, rows, allow_constant: bool = False) -> "Dataset":
        """Row subset (ascending ``rows``), keeping each column's storage class.

        ``allow_constant`` skips the constant-penalized-column check; a
        cross-validation training fold may lose every nonzero of a sparse
        column, and the path fitter locks such columns out instead.
        """
        rows = np.asarray(rows, dtype=np.int64)
        if rows.size and (np.any(np.diff(rows) <= 0) or rows[0] < 0
                          or rows[-1] >= self.n):
            raise DataError("rows must be strictly increasing and in range")
        n_new = rows.size
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[rows] = np.arange(n_new)
        mapped = pos[self.indices]
        keep = mapped >= 0
        kc = np.concatenate(([0], np.cumsum(keep)))
        counts = kc[self.indptr[1:]] - kc[self.indptr[:-1]]
        indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        indices = mapped[keep]
        values = self.values[keep]

        csum = np.concatenate(([0.0], np.cumsum(values)))
        tot = csum[indptr[1:]] - csum[indptr[:-1]]
        col_mean = tot / max(n_new, 1)
        col_id = np.repeat(np.arange(self.p), counts)
        dev2 = (values - col_mean[col_id]) ** 2
        cdev = np.concatenate(([0.0], np.cumsum(dev2)))
        ss = (cdev[indptr[1:]] - cdev[indptr[:-1]]
              + (n_new - counts) * col_mean ** 2)
        col_sd = np.sqrt(np.maximum(ss / max(n_new, 1), 0.0))
        if not allow_constant:
            bad = np.nonzero(self.penalized & (col_sd == 0.0))[0]
            if bad.size:
                raise DataError(f"constant penalized column {bad[0]} after row subset")
        return Dataset(n=n_new, p=self.p, indptr=indptr, indices=indices,
                       values=values, dense_mask=self.dense_mask.copy(),
                       y=self.y[rows], col_mean=col_mean, col_sd=col_sd,
                       free=self.free, names=self.names)

    def with_free(self, free) -> "Dataset":
        """Same data under a different penalized/free partition (revalidated)."""
        free = frozenset(int(j) for j in free)
        for j in free:
            if not 0 <= j < self.p:
                raise DataError(f"free column index {j} out of range")
        for j in range(self.p):
            if self.col_sd[j] == 0.0 and j not in free:
                raise DataError(f"constant penalized column {j}")
        return Dataset(n=self.n, p=self.p, indptr=self.indptr, indices=self.indices,
                       values=self.values, dense_mask=self.dense_mask, y=self.y,
                       col_mean=self.col_mean, col_sd=self.col_sd, free=free,
                       names=self.names)

    # -- access -------------------------------------------------------

    def column(self, j: int):
        """(row_indices, values) slice for column j."""
        a, b = self.indptr[j], self.indptr[j + 1]
        return self.indices[a:b], self.values[a:b]

    def dense_column(self, j: int) -> np.ndarray:
        ri, vv = self.column(j)
        out = np.zeros(self.n)
        out[ri] = vv
        return out

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((self.n, self.p))
        for j in range(self.p):
            ri, vv = self.column(j)
            out[ri, j] = vv
        return out

    @property
    def penalized(self) -> np.ndarray:
        """Boolean mask of penalized columns."""
        mask = np.ones(self.p, dtype=bool)
        for j in self.free:
            mask[j] = False
        return mask


def penalty_scales(dataset: Dataset, standardize: bool) -> PenaltyScales:
    """Penalty multipliers: col_sd under standardization, 1 otherwise, 0 if free."""
    s = np.where(dataset.penalized,
                 dataset.col_sd if standardize else 1.0,
                 0.0)
    return PenaltyScales(s=np.ascontiguousarray(s, dtype=np.float64))


# -- file formats ------------------------------------------------------
#
# CSV: header row, comma separated, decimal-point reals.
# Triplets: optional first line "base=0" or "base=1", then whitespace
# separated "row col value" lines; response as one value per line.


def load_csv(path, response_name: str, family_hint: str = "gaussian",
             free=()) -> Dataset:
    """Load a header CSV, extracting ``response_name`` as y.

    ``free`` marks unpenalized covariates, by header name or by index into
    the covariate columns (response excluded).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if response_name not in header:
            raise DataError(f"{path}: response column {response_name!r} not in header")
        rows = []
        for r, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise DataError(f"{path}: row {r} has {len(rec)} cells, expected {len(header)}")
            vals = []
            for c, cell in enumerate(rec):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell at row {r}, column {header[c]!r}: "
                        f"{cell!r}") from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    table = np.asarray(rows)
    yi = header.index(response_name)
    y = table[:, yi]
    keep = [c for c in range(len(header)) if c != yi]
    names = [header[c] for c in keep]
    free_idx = []
    for item in free:
        if isinstance(item, int):
            free_idx.append(item)
        elif item in names:
            free_idx.append(names.index(item))
        else:
            raise DataError(f"unknown free column name {item!r}")
    return Dataset.from_matrix(table[:, keep], y, free=free_idx, names=names,
                               family_hint=family_hint)


def load_triplets(path, n: int, p: int, y_path, family_hint: str = "gaussian",
                  free=()) -> Dataset:
    """Load a sparse design from (row, col, value) triplets plus a response file."""
    base = 0
    entries = {}
    with open(path) as fh:
        lines = fh.read().split("\n")
    start = 0
    if lines and lines[0].strip().startswith("base="):
        base = int(lines[0].strip()[5:])
        if base not in (0, 1):
            raise DataError(f"{path}: base must be 0 or 1")
        start = 1
    for ln, line in enumerate(lines[start:], start=start + 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{path}: line {ln}: expected 'row col value'")
        try:
            r, c, v = int(parts[0]) - base, int(parts[1]) - base, float(parts[2])
        except ValueError:
            raise DataError(f"{path}: line {ln}: non-numeric entry") from None
        if not 0 <= r < n:
            raise DataError(f"{path}: line {ln}: row index {parts[0]} out of range")
        if not 0 <= c < p:
            raise DataError(f"{path}: line {ln}: column index {parts[1]} out of range")
        if (r, c) in entries:
            raise DataError(f"{path}: line {ln}: duplicate entry ({parts[0]}, {parts[1]})")
        entries[(r, c)] = v

    with open(y_path) as fh:
        yvals = [float(t) for t in fh.read().split()]
    if len(yvals) != n:
        raise DataError(f"{y_path}: response length {len(yvals)} != n={n}")

    percol = [[] for _ in range(p)]
    for (r, c), v in sorted(entries.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        percol[c].append((r, v))
    cols = []
    for j in range(p):
        if percol[j]:
            ri, vv = zip(*percol[j])
        else:
            ri, vv = (), ()
        cols.append((np.asarray(ri, dtype=np.int64), np.asarray(vv, dtype=np.float64)))
    return Dataset.from_columns(cols, np.asarray(yvals), n, free=free,
                                family_hint=family_hint)


def save_triplets(dataset: Dataset, path, y_path):
    """Write the stored nonzero entries back out (inverse of load_triplets)."""
    with open(path, "w") as fh:
        fh.write("base=0\n")
        for j in range(dataset.p):
            ri, vv = dataset.column(j)
            for r, v in zip(ri, vv):
                if v != 0.0:
                    fh.write(f"{r} {j} {float(v)!r}\n")
    with open(y_path, "w") as fh:
        for v in dataset.y:
            fh.write(f"{float(v)!r}\n")
