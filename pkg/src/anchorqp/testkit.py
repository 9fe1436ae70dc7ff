"""Independent small-scale reference solvers used by the test suite.

``active_set_solve`` is a dense active-set method for box/row-bounded convex
QPs (feasibility and unboundedness are pre-checked with LPs solved by HiGHS
via scipy). It returns machine-accurate KKT points together with the row
multipliers, so optimality can be cross-checked through the residual
formulas. Deliberately favors correctness over speed; dimensions are capped.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

from .errors import TooLarge
from .linalg import DiagonalQuad, SparseLowRankQuad, SparseMatrix, SparseQuad
from .model import QpProblem

MAX_N = 30
MAX_M = 15


@dataclasses.dataclass(frozen=True)
class OracleSolution:
    x: np.ndarray
    y: np.ndarray
    objective: float
    active_set: frozenset
    status: str  # "optimal" | "infeasible" | "unbounded"
    ray: np.ndarray = None


@dataclasses.dataclass(frozen=True)
class _Constraint:
    kind: str  # "var" | "row"
    index: int
    normal: np.ndarray
    bound: float
    ctype: str  # "eq" | "lo" | "up"


def dense_quad(quad) -> np.ndarray:
    """Densify a quadratic operator from its raw storage (not via apply)."""
    if isinstance(quad, DiagonalQuad):
        return np.diag(quad.values)
    if isinstance(quad, SparseQuad):
        return quad.to_scipy().toarray()
    if isinstance(quad, SparseLowRankQuad):
        r = quad.r.to_scipy().toarray()
        return quad.p.to_scipy().toarray() + r.T @ r
    raise TypeError(f"unknown quadratic operator {type(quad)!r}")


def _build_constraints(problem, a_dense) -> list:
    cons = []
    lv, uv = problem.var_bounds.lower, problem.var_bounds.upper
    for i in range(problem.n):
        e = np.zeros(problem.n)
        e[i] = 1.0
        if np.isfinite(lv[i]) and lv[i] == uv[i]:
            cons.append(_Constraint("var", i, e, lv[i], "eq"))
            continue
        if np.isfinite(lv[i]):
            cons.append(_Constraint("var", i, e, lv[i], "lo"))
        if np.isfinite(uv[i]):
            cons.append(_Constraint("var", i, e, uv[i], "up"))
    lc, uc = problem.con_bounds.lower, problem.con_bounds.upper
    for j in range(problem.m):
        row = a_dense[j]
        if np.isfinite(lc[j]) and lc[j] == uc[j]:
            cons.append(_Constraint("row", j, row, lc[j], "eq"))
            continue
        if np.isfinite(lc[j]):
            cons.append(_Constraint("row", j, row, lc[j], "lo"))
        if np.isfinite(uc[j]):
            cons.append(_Constraint("row", j, row, uc[j], "up"))
    return cons


def _linprog_bounds(problem):
    lv, uv = problem.var_bounds.lower, problem.var_bounds.upper
    return [
        (None if np.isinf(lv[i]) else lv[i], None if np.isinf(uv[i]) else uv[i])
        for i in range(problem.n)
    ]


def _phase1(problem, a_dense):
    """Feasible point via LP, or None when the instance is infeasible."""
    lc, uc = problem.con_bounds.lower, problem.con_bounds.upper
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for j in range(problem.m):
        if np.isfinite(lc[j]) and lc[j] == uc[j]:
            a_eq.append(a_dense[j])
            b_eq.append(lc[j])
            continue
        if np.isfinite(uc[j]):
            a_ub.append(a_dense[j])
            b_ub.append(uc[j])
        if np.isfinite(lc[j]):
            a_ub.append(-a_dense[j])
            b_ub.append(-lc[j])
    res = scipy.optimize.linprog(
        c=np.zeros(problem.n),
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=_linprog_bounds(problem),
        method="highs",
    )
    if res.status == 2:
        return None
    if res.status != 0:
        raise RuntimeError(f"phase-1 LP failed with status {res.status}: {res.message}")
    return np.asarray(res.x, dtype=np.float64)


def _recession_ray(problem, q_dense, a_dense):
    """A direction proving unboundedness, or None.

    Solves min c'd over the recession directions of the feasible set that
    also lie in the nullspace of Q, with free coordinates clamped to [-1, 1]
    so the LP stays bounded.
    """
    lv, uv = problem.var_bounds.lower, problem.var_bounds.upper
    bounds = []
    for i in range(problem.n):
        lo_f, up_f = np.isfinite(lv[i]), np.isfinite(uv[i])
        if lo_f and up_f:
            bounds.append((0.0, 0.0))
        elif lo_f:
            bounds.append((0.0, 1.0))
        elif up_f:
            bounds.append((-1.0, 0.0))
        else:
            bounds.append((-1.0, 1.0))
    eigvals, eigvecs = np.linalg.eigh(q_dense)
    cut = max(float(eigvals.max(initial=0.0)), 0.0) * 1e-10 + 1e-14
    range_basis = eigvecs[:, eigvals > cut]
    a_eq = [range_basis.T] if range_basis.shape[1] else []
    b_eq_len = range_basis.shape[1]
    a_ub, b_ub = [], []
    lc, uc = problem.con_bounds.lower, problem.con_bounds.upper
    for j in range(problem.m):
        lo_f, up_f = np.isfinite(lc[j]), np.isfinite(uc[j])
        if lo_f and up_f:
            a_eq.append(a_dense[j][None, :])
            b_eq_len += 1
        elif up_f:
            a_ub.append(a_dense[j])
            b_ub.append(0.0)
        elif lo_f:
            a_ub.append(-a_dense[j])
            b_ub.append(0.0)
    res = scipy.optimize.linprog(
        c=problem.cost,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.vstack(a_eq) if a_eq else None,
        b_eq=np.zeros(b_eq_len) if a_eq else None,
        bounds=bounds,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"recession LP failed with status {res.status}: {res.message}")
    if res.fun < -1e-9 * (1.0 + float(np.linalg.norm(problem.cost))):
        d = np.asarray(res.x, dtype=np.float64)
        return d / np.abs(d).max()
    return None


def _max_step(x, p, cons, active, cap=None):
    """Largest step along p before a non-active inequality blocks."""
    best = np.inf if cap is None else cap
    blocker = None
    p_scale = max(float(np.abs(p).max()), 1e-300)
    for k, con in enumerate(cons):
        if k in active or con.ctype == "eq":
            continue
        dn = float(con.normal @ p)
        thresh = 1e-13 * p_scale * (1.0 + float(np.abs(con.normal).max()))
        if con.ctype == "up" and dn > thresh:
            slack = max(con.bound - float(con.normal @ x), 0.0)
            ratio = slack / dn
        elif con.ctype == "lo" and dn < -thresh:
            slack = max(float(con.normal @ x) - con.bound, 0.0)
            ratio = slack / (-dn)
        else:
            continue
        if ratio < best:
            best = ratio
            blocker = k
    return best, blocker


def _eqp_direction(q_dense, g, c_active):
    """Step of the equality-constrained QP min .5 p'Qp + g'p, Cp = 0.

    Returns (p, descent) where exactly one is set: ``descent`` is an
    unbounded descent direction in null(C) inter null(Q) when one exists.
    """
    n = len(g)
    if c_active.shape[0] == 0:
        z = np.eye(n)
    else:
        z = scipy.linalg.null_space(c_active)
    if z.shape[1] == 0:
        return np.zeros(n), None
    h = z.T @ q_dense @ z
    b_r = z.T @ g
    eigvals, eigvecs = np.linalg.eigh(0.5 * (h + h.T))
    cut = max(float(eigvals.max(initial=0.0)), 0.0) * 1e-12 + 1e-14
    null_mask = eigvals <= cut
    beta = eigvecs.T @ b_r
    strict = 1e-10 * (1.0 + float(np.abs(g).max()))
    if null_mask.any():
        beta_null = np.where(null_mask, beta, 0.0)
        j = int(np.argmax(np.abs(beta_null)))
        if abs(beta_null[j]) > strict:
            direction = z @ eigvecs[:, j]
            return None, -np.sign(beta_null[j]) * direction
    coef = np.where(null_mask, 0.0, beta / np.where(null_mask, 1.0, eigvals))
    return -z @ (eigvecs @ coef), None


def _multipliers(c_active, g):
    if c_active.shape[0] == 0:
        return np.zeros(0)
    lam, *_ = np.linalg.lstsq(c_active.T, -g, rcond=None)
    return lam


def _wrong_sign(cons, active, lam, tol):
    worst, worst_k = 0.0, None
    for pos, k in enumerate(active):
        con = cons[k]
        if con.ctype == "up" and lam[pos] < -tol and -lam[pos] > worst:
            worst, worst_k = -lam[pos], k
        elif con.ctype == "lo" and lam[pos] > tol and lam[pos] > worst:
            worst, worst_k = lam[pos], k
    return worst_k


def _polish(q_dense, cost, cons, active, x_iter, lam_iter):
    """Re-solve the KKT system of the final active set for full accuracy."""
    n = len(cost)
    c_active = np.array([cons[k].normal for k in active]).reshape(len(active), n)
    b_active = np.array([cons[k].bound for k in active])
    k_mat = np.block(
        [[q_dense, c_active.T], [c_active, np.zeros((len(active), len(active)))]]
    )
    rhs = np.concatenate([-cost, b_active])
    sol, *_ = np.linalg.lstsq(k_mat, rhs, rcond=None)
    x_p, lam_p = sol[:n], sol[n:]
    scale = 1.0 + float(np.abs(x_p).max(initial=0.0))
    if np.abs(c_active @ x_p - b_active).max(initial=0.0) > 1e-8 * scale:
        return x_iter, lam_iter
    for k, con in enumerate(cons):
        value = float(con.normal @ x_p)
        tol = 1e-8 * (1.0 + abs(con.bound))
        if con.ctype in ("up", "eq") and value > con.bound + tol:
            return x_iter, lam_iter
        if con.ctype in ("lo", "eq") and value < con.bound - tol:
            return x_iter, lam_iter
    for pos, k in enumerate(active):
        con = cons[k]
        if con.ctype == "up" and lam_p[pos] < -1e-8:
            return x_iter, lam_iter
        if con.ctype == "lo" and lam_p[pos] > 1e-8:
            return x_iter, lam_iter
    return x_p, lam_p


def active_set_solve(problem: QpProblem, max_iter: int = 500) -> OracleSolution:
    """Reference solve by dense active-set iteration.

    Enumerates working sets starting from an LP-feasible vertex, solving each
    equality-constrained subproblem by dense factorizations; detects
    infeasibility (phase-1 LP) and unboundedness (recession LP over the
    nullspace of Q) up front.
    """
    if problem.n > MAX_N or problem.m > MAX_M:
        raise TooLarge(f"oracle caps are n <= {MAX_N}, m <= {MAX_M}")
    q_dense = dense_quad(problem.quad)
    a_dense = problem.constraint_matrix.to_scipy().toarray()
    empty = np.zeros(0)

    x0 = _phase1(problem, a_dense)
    if x0 is None:
        return OracleSolution(empty, empty, np.nan, frozenset(), "infeasible")
    ray = _recession_ray(problem, q_dense, a_dense)
    if ray is not None:
        return OracleSolution(empty, empty, -np.inf, frozenset(), "unbounded", ray=ray)

    cons = _build_constraints(problem, a_dense)
    x = np.minimum(np.maximum(x0, problem.var_bounds.lower), problem.var_bounds.upper)
    active = [
        k
        for k, con in enumerate(cons)
        if con.ctype == "eq"
        or abs(float(con.normal @ x) - con.bound) <= 1e-8 * (1.0 + abs(con.bound))
    ]

    lam = np.zeros(len(active))
    for _ in range(max_iter):
        g = q_dense @ x + problem.cost
        c_active = np.array([cons[k].normal for k in active]).reshape(len(active), problem.n)
        p, descent = _eqp_direction(q_dense, g, c_active)
        if descent is not None:
            step, blocker = _max_step(x, descent, cons, active)
            if blocker is None:
                d = descent / np.abs(descent).max()
                return OracleSolution(empty, empty, -np.inf, frozenset(), "unbounded", ray=d)
            x = x + step * descent
            active.append(blocker)
            continue
        if np.abs(p).max(initial=0.0) <= 1e-11 * (1.0 + float(np.abs(x).max())):
            lam = _multipliers(c_active, g)
            worst = _wrong_sign(cons, active, lam, 1e-9 * (1.0 + float(np.abs(g).max())))
            if worst is None:
                break
            active.remove(worst)
            continue
        step, blocker = _max_step(x, p, cons, active, cap=1.0)
        x = x + step * p
        if blocker is not None and step < 1.0:
            con = cons[blocker]
            if con.kind == "var":  # snap exactly onto the bound
                x[con.index] = con.bound
            active.append(blocker)
    else:
        raise RuntimeError("active-set oracle failed to converge")

    x, lam = _polish(q_dense, problem.cost, cons, active, x, lam)
    y = np.zeros(problem.m)
    for pos, k in enumerate(active):
        if cons[k].kind == "row":
            y[cons[k].index] += lam[pos]
    objective = 0.5 * float(x @ q_dense @ x) + float(problem.cost @ x)
    active_ids = frozenset((cons[k].kind, cons[k].index, cons[k].ctype) for k in active)
    return OracleSolution(x, y, objective, active_ids, "optimal")


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def ista_lasso(a, b, lam: float, iters: int = 100_000, tol: float = 1e-12) -> np.ndarray:
    """Proximal-gradient reference for min |Ax - b|^2 + lam |x|_1.

    Note the unsquared-half convention: the smooth part is |Ax - b|^2, so the
    gradient is 2 A'(Ax - b) and the step is 1 / (2 |A|^2).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    if isinstance(a, SparseMatrix):
        a = a.to_scipy()
    if sp.issparse(a):
        a = a.toarray()
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    norm2 = float(np.linalg.norm(a, 2)) if a.size else 0.0
    x = np.zeros(a.shape[1])
    if norm2 == 0.0:
        return x
    step = 1.0 / (2.0 * norm2**2)
    for _ in range(iters):
        g = 2.0 * (a.T @ (a @ x - b))
        x_new = _soft_threshold(x - step * g, step * lam)
        if np.linalg.norm(x_new - x) <= tol:
            return x_new
        x = x_new
    return x
