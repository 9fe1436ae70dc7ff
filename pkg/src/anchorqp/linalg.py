"""Sparse kernels, the structured quadratic operator, and norm estimation.

The quadratic term Q may be diagonal, sparse symmetric, or sparse plus a
low-rank factor (Q = P + R'R); all variants are applied matrix-free and the
low-rank product R'R is never materialized.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp

from . import _kernels as kern
from .errors import DimensionMismatch, NonFiniteData, ZeroMatrix


def _as_float_vec(x, n=None, what="vector"):
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{what} must be 1-dimensional, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(f"{what} has length {v.shape[0]}, expected {n}")
    return v


@dataclasses.dataclass(frozen=True)
class SparseMatrix:
    """Immutable CSR matrix supporting row-major traversal and A'y products.

    Indices are canonical: sorted and strictly increasing within each row,
    duplicates merged at construction time.
    """

    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        indptr = np.ascontiguousarray(self.indptr, dtype=np.int64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        if indptr.shape != (self.rows + 1,) or indptr[0] != 0 or indptr[-1] != len(data):
            raise DimensionMismatch("malformed indptr")
        if len(indices) != len(data):
            raise DimensionMismatch("indices/data length mismatch")
        if len(indices) and (indices.min() < 0 or indices.max() >= self.cols):
            raise DimensionMismatch("column index out of range")
        if np.any(np.diff(indptr) < 0):
            raise DimensionMismatch("indptr must be non-decreasing")
        if len(indices) > 1:
            # Strictly increasing column indices within each row; mask out
            # the diffs that straddle row boundaries.
            inner = np.diff(indices)
            boundary = indptr[1:-1]
            boundary = boundary[(boundary > 0) & (boundary < len(indices))]
            inner[boundary - 1] = 1
            if np.any(inner <= 0):
                raise DimensionMismatch("column indices must be strictly increasing per row")
        if np.isnan(data).any():
            raise NonFiniteData("matrix values contain NaN")

    @classmethod
    def from_scipy(cls, mat) -> "SparseMatrix":
        csr = sp.csr_matrix(mat, dtype=np.float64, copy=True)
        csr.sum_duplicates()
        csr.sort_indices()
        return cls(csr.shape[0], csr.shape[1], csr.indptr, csr.indices, csr.data)

    @classmethod
    def from_coo(cls, rows, cols, row_ids, col_ids, values) -> "SparseMatrix":
        coo = sp.coo_matrix((values, (row_ids, col_ids)), shape=(rows, cols), dtype=np.float64)
        return cls.from_scipy(coo)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=np.float64)))

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.data.copy(), self.indices.copy(), self.indptr.copy()),
            shape=(self.rows, self.cols),
        )

    @property
    def nnz(self) -> int:
        return len(self.data)

    @property
    def shape(self):
        return (self.rows, self.cols)

    def matvec(self, x) -> np.ndarray:
        x = _as_float_vec(x, self.cols, "matvec input")
        return kern.csr_matvec(self.indptr, self.indices, self.data, x, self.rows)

    def matvec_t(self, y) -> np.ndarray:
        y = _as_float_vec(y, self.rows, "matvec_t input")
        return kern.csr_matvec_t(self.indptr, self.indices, self.data, y, self.cols)

    def row_abs_sums(self) -> np.ndarray:
        row_ids = np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))
        return np.bincount(row_ids, weights=np.abs(self.data), minlength=self.rows)

    def col_abs_sums(self) -> np.ndarray:
        return np.bincount(self.indices, weights=np.abs(self.data), minlength=self.cols)


def matvec(a: SparseMatrix, x) -> np.ndarray:
    """A @ x."""
    return a.matvec(x)


def matvec_t(a: SparseMatrix, y) -> np.ndarray:
    """A.T @ y."""
    return a.matvec_t(y)


class QuadOperator:
    """Base for the matrix-free quadratic operator variants."""

    n: int
    kind: str

    def apply(self, x) -> np.ndarray:
        raise NotImplementedError

    def diag_bound(self) -> float:
        """Max diagonal entry; cheap scale estimate for first inner steps."""
        raise NotImplementedError

    def inf_norm_bound(self) -> float:
        """Upper bound on the max absolute row sum of Q."""
        raise NotImplementedError

    def value_arrays(self):
        """Raw value arrays, for data-validation sweeps."""
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class DiagonalQuad(QuadOperator):
    """Q = diag(values) with values >= 0."""

    values: np.ndarray
    kind = "diagonal"

    def __post_init__(self):
        v = _as_float_vec(self.values, what="diagonal")
        if np.any(v < 0):
            raise ValueError("diagonal quadratic entries must be nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    def apply(self, x) -> np.ndarray:
        return self.values * _as_float_vec(x, self.n, "quad_apply input")

    def diag_bound(self) -> float:
        return float(self.values.max(initial=0.0))

    def inf_norm_bound(self) -> float:
        return self.diag_bound()

    def value_arrays(self):
        return [self.values]


@dataclasses.dataclass(frozen=True)
class SparseQuad(QuadOperator):
    """Symmetric sparse Q; only the upper triangle is stored and the
    mirrored half is applied on the fly."""

    upper: SparseMatrix
    diag: np.ndarray = None

    kind = "sparse"

    def __post_init__(self):
        if self.upper.rows != self.upper.cols:
            raise DimensionMismatch("quadratic matrix must be square")
        if self.diag is None:
            object.__setattr__(self, "diag", _extract_diag(self.upper))
        lower_mask = _lower_entry_mask(self.upper)
        if lower_mask.any():
            raise DimensionMismatch("SparseQuad stores the upper triangle only")

    @classmethod
    def from_symmetric(cls, mat) -> "SparseQuad":
        """Build from a full symmetric matrix (scipy/dense), keeping sp.triu."""
        csr = sp.csr_matrix(mat, dtype=np.float64)
        asym = (csr - csr.T).tocsr()
        scale = max(1.0, float(np.abs(csr.data).max()) if csr.nnz else 1.0)
        if asym.nnz and float(np.abs(asym.data).max()) > 1e-10 * scale:
            raise ValueError("quadratic matrix is not symmetric")
        return cls(SparseMatrix.from_scipy(sp.triu(csr)))

    @property
    def n(self) -> int:
        return self.upper.rows

    def apply(self, x) -> np.ndarray:
        x = _as_float_vec(x, self.n, "quad_apply input")
        u = self.upper
        return kern.sym_matvec(u.indptr, u.indices, u.data, self.diag, x)

    def diag_bound(self) -> float:
        return float(self.diag.max(initial=0.0))

    def inf_norm_bound(self) -> float:
        acc = self.upper.row_abs_sums() + self.upper.col_abs_sums() - np.abs(self.diag)
        return float(acc.max(initial=0.0))

    def value_arrays(self):
        return [self.upper.data]

    def to_scipy(self) -> sp.csr_matrix:
        u = self.upper.to_scipy()
        return u + u.T - sp.diags(self.diag, format="csr")


@dataclasses.dataclass(frozen=True)
class SparseLowRankQuad(QuadOperator):
    """Q = P + R'R with symmetric sparse P and a k-by-n factor R, k << n.

    apply() computes Px + R'(Rx) with a single k-length temporary; R'R is
    never formed.
    """

    p: SparseQuad
    r: SparseMatrix

    kind = "sparse_low_rank"

    def __post_init__(self):
        if self.r.cols != self.p.n:
            raise DimensionMismatch("low-rank factor width must match P")

    @property
    def n(self) -> int:
        return self.p.n

    def apply(self, x) -> np.ndarray:
        x = _as_float_vec(x, self.n, "quad_apply input")
        rx = self.r.matvec(x)
        return self.p.apply(x) + self.r.matvec_t(rx)

    def diag_bound(self) -> float:
        rsq = np.bincount(self.r.indices, weights=self.r.data**2, minlength=self.n)
        return float((self.p.diag + rsq).max(initial=0.0))

    def inf_norm_bound(self) -> float:
        r_one = float(self.r.col_abs_sums().max(initial=0.0))
        r_inf = float(self.r.row_abs_sums().max(initial=0.0))
        return self.p.inf_norm_bound() + r_one * r_inf

    def value_arrays(self):
        return [self.p.upper.data, self.r.data]


def _extract_diag(upper: SparseMatrix) -> np.ndarray:
    diag = np.zeros(upper.rows)
    row_ids = np.repeat(np.arange(upper.rows, dtype=np.int64), np.diff(upper.indptr))
    on_diag = row_ids == upper.indices
    diag[upper.indices[on_diag]] = upper.data[on_diag]
    return diag


def _lower_entry_mask(upper: SparseMatrix) -> np.ndarray:
    row_ids = np.repeat(np.arange(upper.rows, dtype=np.int64), np.diff(upper.indptr))
    return upper.indices < row_ids


def quad_apply(q: QuadOperator, x) -> np.ndarray:
    """Q @ x for any operator variant, matrix-free."""
    return q.apply(x)


def estimate_norm(a: SparseMatrix, iters: int = 100, seed: int = 0) -> float:
    """Estimate the spectral norm of A by power iteration on A'A.

    Deterministic for a fixed seed; the start vector depends only on the
    column count, so appending zero rows leaves the estimate unchanged.
    The returned value never exceeds the true norm.
    """
    if a.nnz == 0:
        raise ZeroMatrix("cannot estimate the norm of an all-zero matrix")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.cols)
    for _ in range(8):  # all-but-surely one draw suffices
        nv = np.linalg.norm(v)
        if nv > 0 and np.linalg.norm(a.matvec(v / nv)) > 0:
            break
        v = rng.standard_normal(a.cols)
    else:
        raise ZeroMatrix("power iteration start vector annihilated by A")
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = a.matvec_t(a.matvec(v))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    return float(np.linalg.norm(a.matvec(v)))
