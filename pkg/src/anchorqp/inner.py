"""Primal subproblem solvers and the adaptive inexactness rule.

The outer loop repeatedly minimizes, over the variable box X,

    phi(x) = 0.5 x'Qx + linear'x + |x - center|^2 / (2 tau).

For diagonal Q the minimizer has a componentwise closed form; otherwise a
projected gradient method with alternating Barzilai-Borwein steps is run
until the natural residual |x - proj_X(x - grad phi(x))| drops below the
current tolerance.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import _kernels as kern
from .linalg import DiagonalQuad, QuadOperator, quad_apply
from .model import Bounds

BB_STEP_MIN = 1e-10
BB_STEP_MAX = 1e10


@dataclasses.dataclass(frozen=True)
class InnerTolerance:
    """Monotone non-increasing inner-solve tolerance with a hard floor."""

    current: float
    floor: float = 1e-9
    scale: float = 5e-4

    def __post_init__(self):
        if self.current <= 0:
            raise ValueError("tolerance must be positive")


def update_tolerance(tol: InnerTolerance, omega: float, tau: float, primal_move: float) -> InnerTolerance:
    """Tighten the tolerance as the outer primal movement shrinks.

    new = min(current, max(scale * omega * primal_move / tau, floor));
    never increases and never drops below the floor.
    """
    candidate = max(tol.scale * omega * primal_move / tau, tol.floor)
    return dataclasses.replace(tol, current=min(tol.current, candidate))


@dataclasses.dataclass(frozen=True)
class SubproblemSpec:
    """One outer iteration's primal subproblem data."""

    quad: QuadOperator
    linear: np.ndarray
    prox_center: np.ndarray
    tau: float
    box: Bounds

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return quad_apply(self.quad, x) + self.linear + (x - self.prox_center) / self.tau

    def objective_from_gradient(self, x: np.ndarray, g: np.ndarray) -> float:
        # phi(x) rewritten so the already-computed gradient supplies Qx.
        return 0.5 * float(x @ g + self.linear @ x - ((x - self.prox_center) @ self.prox_center) / self.tau)


def solve_diagonal(spec: SubproblemSpec) -> np.ndarray:
    """Exact minimizer for diagonal Q.

    Stationarity gives (q + 1/tau) x = center/tau - linear; clamping the
    unconstrained solution onto the box is exact because the objective is
    separable.
    """
    if not isinstance(spec.quad, DiagonalQuad):
        raise TypeError("solve_diagonal requires a diagonal quadratic operator")
    return kern.diag_prox_step(
        spec.prox_center, spec.quad.values, spec.linear, spec.tau,
        spec.box.lower, spec.box.upper,
    )


def solve_bb(spec: SubproblemSpec, tol, max_inner: int = 200):
    """Projected gradient with alternating BB1/BB2 steps.

    Starts from the prox center (the previous outer iterate). Returns
    ``(x, residual, iters)`` where ``x`` is always box-feasible and never
    worse in phi than the starting point: if the final iterate is not the
    best one seen, the best is returned instead.
    """
    target = tol.current if isinstance(tol, InnerTolerance) else float(tol)
    lo, hi = spec.box.lower, spec.box.upper
    x = kern.clamp(np.ascontiguousarray(spec.prox_center, dtype=np.float64), lo, hi)
    g = spec.gradient(x)
    res = math.sqrt(kern.natural_res_sq(x, g, lo, hi))
    phi = spec.objective_from_gradient(x, g)
    best_phi, best_x, best_res = phi, x, res
    if res <= target:
        return x, res, 0

    alpha0 = spec.tau / (1.0 + spec.tau * spec.quad.diag_bound())
    alpha = alpha0
    iters = 0
    for t in range(1, max_inner + 1):
        x_new = kern.clamp(x - alpha * g, lo, hi)
        g_new = spec.gradient(x_new)
        res = math.sqrt(kern.natural_res_sq(x_new, g_new, lo, hi))
        phi = spec.objective_from_gradient(x_new, g_new)
        iters = t
        if phi < best_phi:
            best_phi, best_x, best_res = phi, x_new, res
        s = x_new - x
        v = g_new - g
        sv = float(s @ v)
        if sv > 0.0:
            alpha = float(s @ s) / sv if t % 2 == 1 else sv / float(v @ v)
            alpha = min(max(alpha, BB_STEP_MIN), BB_STEP_MAX)
        else:
            # Nonconvex-looking curvature from rounding; restart the step.
            alpha = alpha0
        x, g = x_new, g_new
        if res <= target:
            break
    # Return the final iterate when it converged, unless an earlier point was
    # better in phi beyond evaluation noise (possible under loose targets);
    # on a non-converged exit fall back to the best point seen, which keeps
    # the output never worse than the starting point.
    noise = 64.0 * np.finfo(np.float64).eps * (1.0 + abs(best_phi))
    if res <= target and phi <= best_phi + noise:
        return x, res, iters
    if phi <= best_phi:
        return x, res, iters
    return best_x, best_res, iters
