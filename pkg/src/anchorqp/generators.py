"""Problem generators: seeded random QPs and the Lasso-dual QP form."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch
from .linalg import DiagonalQuad, SparseLowRankQuad, SparseMatrix, SparseQuad
from .model import Bounds, QpProblem

STRUCTURES = ("diagonal", "sparse", "low_rank")


def _sparse_uniform(rng, rows, cols, density):
    return sp.random(
        rows, cols, density=density, random_state=rng,
        data_rvs=lambda size: rng.uniform(-1.0, 1.0, size),
    )


def random_qp(
    n: int,
    m: int,
    structure: str = "sparse",
    density: float = 0.3,
    seed: int = 0,
    rank: int = None,
) -> QpProblem:
    """Random solvable instance with a feasible point embedded by construction.

    Q is PSD by construction for every structure; the non-diagonal variants
    carry a small diagonal ridge so the objective is coercive under any bound
    pattern. Deterministic for a fixed seed.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    if structure not in STRUCTURES:
        raise ValueError(f"structure must be one of {STRUCTURES}")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)

    must_box = np.zeros(n, dtype=bool)
    if structure == "diagonal":
        q = rng.uniform(0.05, 2.0, n)
        must_box = rng.random(n) < 0.2  # zero-curvature coordinates stay boxed
        q[must_box] = 0.0
        quad = DiagonalQuad(q)
    elif structure == "sparse":
        factor = _sparse_uniform(rng, n, n, density)
        q_mat = (factor @ factor.T).tocsr() + sp.diags(rng.uniform(0.05, 0.5, n))
        quad = SparseQuad.from_symmetric(q_mat)
    else:
        k = rank if rank is not None else max(1, min(5, n // 2))
        factor = _sparse_uniform(rng, n, n, density)
        p_mat = (factor @ factor.T).tocsr() + sp.diags(rng.uniform(0.05, 0.5, n))
        r_mat = _sparse_uniform(rng, k, n, density)
        quad = SparseLowRankQuad(SparseQuad.from_symmetric(p_mat), SparseMatrix.from_scipy(r_mat))

    center = rng.normal(0.0, 1.0, n)
    lower = center - rng.uniform(0.2, 2.0, n)
    upper = center + rng.uniform(0.2, 2.0, n)
    pattern = rng.random(n)
    lower_only = ~must_box & (pattern < 0.15)
    upper_only = ~must_box & (pattern >= 0.15) & (pattern < 0.30)
    free = ~must_box & (pattern >= 0.30) & (pattern < 0.40)
    lower[upper_only | free] = -np.inf
    upper[lower_only | free] = np.inf
    var_bounds = Bounds(lower, upper)

    x0 = np.minimum(np.maximum(rng.normal(center, 0.5), lower), upper)
    a_mat = _sparse_uniform(rng, m, n, density)
    a = SparseMatrix.from_scipy(a_mat)
    s0 = a.matvec(x0)
    kind = rng.random(m)
    slack_lo = rng.uniform(0.1, 1.5, m)
    slack_hi = rng.uniform(0.1, 1.5, m)
    con_lower = np.where(kind < 0.2, s0, np.where(kind < 0.45, -np.inf, s0 - slack_lo))
    con_upper = np.where(kind < 0.2, s0, np.where((kind >= 0.45) & (kind < 0.70), np.inf, s0 + slack_hi))
    con_bounds = Bounds(con_lower, con_upper)

    cost = rng.normal(0.0, 1.0, n)
    return QpProblem(
        quad=quad,
        cost=cost,
        constraint_matrix=a,
        var_bounds=var_bounds,
        con_bounds=con_bounds,
        name=f"random-{structure}-n{n}-m{m}-s{seed}",
    )


def make_lasso_qp(a, b, lam: float = 0.0) -> QpProblem:
    """QP form of min |Ax - b|^2 + lam |x|_1 over variables (x, t, y).

    The objective is y'y + lam 1't; constraints are y = Ax - b plus
    x - t <= 0 and -x - t <= 0, with t >= 0 through its variable bound.
    Passing lam = 0 selects the default rule lam = 0.01 |A'b|_inf.
    """
    if isinstance(a, SparseMatrix):
        a_sp = a.to_scipy()
    else:
        a_sp = sp.csr_matrix(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = a_sp.shape
    if b.shape != (m,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({m},)")
    if lam == 0.0:
        lam = 0.01 * float(np.abs(a_sp.T @ b).max(initial=0.0))
        if lam <= 0.0:
            raise ValueError("default lambda rule degenerates; pass lam explicitly")
    if lam < 0.0:
        raise ValueError("lam must be positive")

    eye_n = sp.eye(n, format="csr")
    eye_m = sp.eye(m, format="csr")
    a_qp = sp.bmat(
        [
            [a_sp, None, -eye_m],
            [eye_n, -eye_n, None],
            [-eye_n, -eye_n, None],
        ],
        format="csr",
    )
    quad = DiagonalQuad(np.concatenate([np.zeros(2 * n), 2.0 * np.ones(m)]))
    cost = np.concatenate([np.zeros(n), lam * np.ones(n), np.zeros(m)])
    var_bounds = Bounds(
        np.concatenate([np.full(n, -np.inf), np.zeros(n), np.full(m, -np.inf)]),
        np.full(2 * n + m, np.inf),
    )
    con_bounds = Bounds(
        np.concatenate([b, np.full(2 * n, -np.inf)]),
        np.concatenate([b, np.zeros(2 * n)]),
    )
    return QpProblem(
        quad=quad,
        cost=cost,
        constraint_matrix=SparseMatrix.from_scipy(a_qp),
        var_bounds=var_bounds,
        con_bounds=con_bounds,
        name="lasso",
    )


def random_lasso_data(m: int, n: int, density: float = 0.5, seed: int = 0):
    """Random (A, b) pair for Lasso benchmarks: b = A x_sparse + noise."""
    rng = np.random.default_rng(seed)
    a_mat = _sparse_uniform(rng, m, n, density).tocsr()
    x_true = np.where(rng.random(n) < 0.2, rng.normal(0.0, 2.0, n), 0.0)
    b = a_mat @ x_true + 0.01 * rng.normal(0.0, 1.0, m)
    return SparseMatrix.from_scipy(a_mat), b
