"""Problem data model: extended-real boxes, sign cones, and projections.

Bounds use IEEE +/-inf sentinels. The support function follows the
0 * inf = 0 convention so that zero coordinates never poison the sum.
"""

from __future__ import annotations

import dataclasses
import enum
import functools

import numpy as np

from . import _kernels as kern
from .errors import DimensionMismatch, InvertedBound, NonFiniteData
from .linalg import QuadOperator, SparseMatrix, quad_apply


class ConeKind(enum.IntEnum):
    """Per-coordinate sign cone; values match the kernel cone codes."""

    ZERO = kern.ZERO
    NONNEG = kern.NONNEG
    NONPOS = kern.NONPOS
    FREE = kern.FREE


@dataclasses.dataclass(frozen=True)
class Bounds:
    """Componentwise box [lower, upper] over the extended reals.

    -inf is only meaningful in ``lower`` and +inf in ``upper``; that and
    lower <= upper are enforced by :func:`validate`, not the constructor,
    so that malformed data can be diagnosed.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.ascontiguousarray(self.lower, dtype=np.float64)
        upper = np.ascontiguousarray(self.upper, dtype=np.float64)
        if lower.ndim != 1 or upper.ndim != 1 or lower.shape != upper.shape:
            raise DimensionMismatch("bound arrays must be 1-d and of equal length")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def __len__(self) -> int:
        return len(self.lower)

    @classmethod
    def free(cls, n: int) -> "Bounds":
        return cls(np.full(n, -np.inf), np.full(n, np.inf))


def support_p(z, bounds: Bounds) -> float:
    """Support function of the box: sum(upper * z+ - lower * z-).

    Returns +inf when a nonzero component of z points toward an infinite
    bound of matching sign; zero components contribute zero even against
    infinite bounds (0 * inf = 0).
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != bounds.lower.shape:
        raise DimensionMismatch("support_p input length mismatch")
    pos = z > 0
    neg = z < 0
    if np.any(pos & np.isinf(bounds.upper)) or np.any(neg & np.isinf(bounds.lower)):
        return float("inf")
    return float(bounds.upper[pos] @ z[pos] + bounds.lower[neg] @ z[neg])


def project_box(x, bounds: Bounds) -> np.ndarray:
    """Componentwise clamp onto [lower, upper]; idempotent."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != bounds.lower.shape:
        raise DimensionMismatch("project_box input length mismatch")
    return kern.clamp(x, bounds.lower, bounds.upper)


_SIDES = ("dual_y", "dual_r", "recession")


def cone_of(bounds: Bounds, side: str) -> np.ndarray:
    """Sign cones induced by the finiteness pattern of a bound pair.

    ``dual_y``: cone of the row multipliers; ``dual_r``: cone of the dual
    slack on variables; ``recession``: recession cone of the box itself.
    Returns an int8 code vector (see :class:`ConeKind`).
    """
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}")
    lo_fin = np.isfinite(bounds.lower)
    up_fin = np.isfinite(bounds.upper)
    codes = np.empty(len(bounds.lower), dtype=np.int8)
    if side == "dual_y":
        codes[:] = ConeKind.FREE
        codes[~lo_fin & ~up_fin] = ConeKind.ZERO
        codes[~lo_fin & up_fin] = ConeKind.NONNEG
        codes[lo_fin & ~up_fin] = ConeKind.NONPOS
    elif side == "dual_r":
        codes[:] = ConeKind.FREE
        codes[~lo_fin & ~up_fin] = ConeKind.ZERO
        codes[~lo_fin & up_fin] = ConeKind.NONPOS
        codes[lo_fin & ~up_fin] = ConeKind.NONNEG
    else:
        codes[:] = ConeKind.ZERO
        codes[~lo_fin & up_fin] = ConeKind.NONPOS
        codes[lo_fin & ~up_fin] = ConeKind.NONNEG
        codes[~lo_fin & ~up_fin] = ConeKind.FREE
    return codes


def project_cone(z, cones) -> np.ndarray:
    """Componentwise projection onto sign cones; idempotent."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    cones = np.ascontiguousarray(cones, dtype=np.int8)
    if z.shape != cones.shape:
        raise DimensionMismatch("project_cone input length mismatch")
    return kern.cone_project(z, cones)


@dataclasses.dataclass(frozen=True)
class QpProblem:
    """Convex QP instance: min 0.5 x'Qx + c'x s.t. Ax in S, x in X.

    X and S are the variable and constraint boxes. Positive
    semidefiniteness of Q is a caller contract (see
    :func:`psd_spot_check` for a cheap randomized sanity check).
    """

    quad: QuadOperator
    cost: np.ndarray
    constraint_matrix: SparseMatrix
    var_bounds: Bounds
    con_bounds: Bounds
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "cost", np.ascontiguousarray(self.cost, dtype=np.float64))

    @property
    def n(self) -> int:
        return len(self.cost)

    @property
    def m(self) -> int:
        return self.constraint_matrix.rows

    @functools.cached_property
    def cones_dual_y(self) -> np.ndarray:
        return cone_of(self.con_bounds, "dual_y")

    @functools.cached_property
    def cones_dual_r(self) -> np.ndarray:
        return cone_of(self.var_bounds, "dual_r")

    @functools.cached_property
    def recession_x(self) -> np.ndarray:
        return cone_of(self.var_bounds, "recession")

    @functools.cached_property
    def recession_s(self) -> np.ndarray:
        return cone_of(self.con_bounds, "recession")


def _check_bounds(bounds: Bounds, label: str) -> None:
    if np.isnan(bounds.lower).any() or np.isnan(bounds.upper).any():
        raise NonFiniteData(f"{label}: NaN bound")
    if np.any(bounds.lower == np.inf) or np.any(bounds.upper == -np.inf):
        raise NonFiniteData(f"{label}: infinity on the wrong side of a bound pair")
    bad = np.flatnonzero(bounds.lower > bounds.upper)
    if bad.size:
        i = int(bad[0])
        raise InvertedBound(
            f"{label}[{i}]: lower {bounds.lower[i]} exceeds upper {bounds.upper[i]}"
        )


def validate(problem: QpProblem) -> None:
    """Check dimensions, bound ordering, and data finiteness.

    Raises the error for the first violation found; returns None when the
    problem is well formed. PSD-ness of Q is deliberately not checked here.
    """
    n = problem.n
    if problem.quad.n != n:
        raise DimensionMismatch(f"quadratic operator is {problem.quad.n}-dim, cost is {n}-dim")
    if problem.constraint_matrix.cols != n:
        raise DimensionMismatch(
            f"constraint matrix has {problem.constraint_matrix.cols} columns, expected {n}"
        )
    if len(problem.var_bounds) != n:
        raise DimensionMismatch("variable bounds length mismatch")
    if len(problem.con_bounds) != problem.m:
        raise DimensionMismatch("constraint bounds length mismatch")
    _check_bounds(problem.var_bounds, "variable bounds")
    _check_bounds(problem.con_bounds, "constraint bounds")
    if not np.isfinite(problem.cost).all():
        raise NonFiniteData("cost vector contains NaN or infinity")
    if not np.isfinite(problem.constraint_matrix.data).all():
        raise NonFiniteData("constraint matrix contains NaN or infinity")
    for arr in problem.quad.value_arrays():
        if not np.isfinite(arr).all():
            raise NonFiniteData("quadratic operator contains NaN or infinity")


def psd_spot_check(quad: QuadOperator, samples: int = 16, seed: int = 0) -> bool:
    """Randomized PSD sanity check: x'Qx >= -1e-10 * |x|^2 * scale(Q).

    Debug aid only; an exact PSD check would cost O(n^3).
    """
    rng = np.random.default_rng(seed)
    scale = max(quad.inf_norm_bound(), 1e-300)
    for _ in range(samples):
        x = rng.standard_normal(quad.n)
        if x @ quad_apply(quad, x) < -1e-10 * (x @ x) * scale:
            return False
    return True
