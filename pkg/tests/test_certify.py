import numpy as np
import pytest
from numpy.testing import assert_allclose

from anchorqp import (
    Bounds,
    CertificateKind,
    DiagonalQuad,
    QpProblem,
    SparseMatrix,
    check_dual_infeasible,
    check_optimal,
    check_primal_infeasible,
    random_qp,
    residuals,
    support_p,
)
from anchorqp.certify import default_gamma_sys
from anchorqp.testkit import active_set_solve

INF = np.inf


def problem_1d_unconstrained():
    # min 0.5 x^2 - x, free variable, no rows
    return QpProblem(
        quad=DiagonalQuad(np.array([1.0])),
        cost=np.array([-1.0]),
        constraint_matrix=SparseMatrix.from_coo(0, 1, [], [], []),
        var_bounds=Bounds.free(1),
        con_bounds=Bounds(np.zeros(0), np.zeros(0)),
    )


def problem_box_vs_row():
    # x in [0,1], row x in [2,3]
    return QpProblem(
        quad=DiagonalQuad(np.zeros(1)),
        cost=np.zeros(1),
        constraint_matrix=SparseMatrix.from_dense([[1.0]]),
        var_bounds=Bounds(np.array([0.0]), np.array([1.0])),
        con_bounds=Bounds(np.array([2.0]), np.array([3.0])),
    )


class TestResiduals:
    def test_zero_at_optimum(self):
        rep = residuals(problem_1d_unconstrained(), np.array([1.0]), np.zeros(0))
        assert rep.r_primal == 0.0
        assert rep.r_dual == 0.0
        assert rep.r_gap == 0.0
        assert_allclose(rep.dual_slack, [0.0])

    def test_dual_residual_formula(self):
        rep = residuals(problem_1d_unconstrained(), np.array([0.0]), np.zeros(0))
        # r = c = -1 against R = {0}; denominator 1 + max(0, 0, 1) = 2
        assert rep.r_dual == pytest.approx(0.5)

    def test_primal_residual_formula(self):
        rep = residuals(problem_box_vs_row(), np.array([1.0]), np.zeros(1))
        assert rep.r_primal == pytest.approx(abs(1.0 - 2.0) / (1.0 + 3.0))

    def test_gap_numerator_is_objective_difference(self, rng):
        # On all-finite-bound instances the projections are no-ops, so the
        # gap numerator must equal primal_obj - dual_obj algebraically.
        for seed in range(30):
            p = random_qp(int(rng.integers(1, 12)), int(rng.integers(1, 8)), "diagonal", seed=seed)
            lv = np.where(np.isinf(p.var_bounds.lower), -5.0, p.var_bounds.lower)
            uv = np.where(np.isinf(p.var_bounds.upper), 5.0, p.var_bounds.upper)
            lc = np.where(np.isinf(p.con_bounds.lower), -5.0, p.con_bounds.lower)
            uc = np.where(np.isinf(p.con_bounds.upper), 5.0, p.con_bounds.upper)
            p = QpProblem(p.quad, p.cost, p.constraint_matrix, Bounds(lv, uv), Bounds(lc, uc))
            x = rng.uniform(lv, uv)
            y = rng.normal(size=p.m)
            rep = residuals(p, x, y)
            qx = p.quad.apply(x)
            gap_num = rep.r_gap * (
                1.0
                + max(
                    abs(0.5 * x @ qx + p.cost @ x),
                    abs(0.5 * x @ qx + support_p(-rep.dual_slack, p.var_bounds) + support_p(y, p.con_bounds)),
                )
            )
            diff = abs(rep.primal_objective - rep.dual_objective)
            assert gap_num == pytest.approx(diff, abs=1e-10 * (1 + diff))

    def test_small_at_oracle_optima(self, rng):
        for seed in range(25):
            p = random_qp(
                int(rng.integers(2, 15)),
                int(rng.integers(1, 8)),
                ("diagonal", "sparse", "low_rank")[seed % 3],
                seed=100 + seed,
            )
            sol = active_set_solve(p)
            assert sol.status == "optimal"
            rep = residuals(p, sol.x, sol.y)
            assert rep.kkt_max <= 1e-7


class TestCheckOptimal:
    def test_trivial(self):
        rep = residuals(problem_1d_unconstrained(), np.array([1.0]), np.zeros(0))
        assert check_optimal(rep, 1e-12)

    def test_max_comparison(self):
        import dataclasses

        rep = residuals(problem_1d_unconstrained(), np.array([1.0]), np.zeros(0))
        almost = dataclasses.replace(rep, r_primal=1e-7, r_dual=1e-7, r_gap=1e-7)
        assert check_optimal(almost, 1e-6)
        over = dataclasses.replace(rep, r_primal=2e-6)
        assert not check_optimal(over, 1e-6)


def infeasible_box_vs_row():
    # x >= 0 with row constraint x <= -1
    return QpProblem(
        quad=DiagonalQuad(np.zeros(1)),
        cost=np.zeros(1),
        constraint_matrix=SparseMatrix.from_dense([[1.0]]),
        var_bounds=Bounds(np.array([0.0]), np.array([INF])),
        con_bounds=Bounds(np.array([-INF]), np.array([-1.0])),
    )


class TestPrimalInfeasible:
    def test_hand_example_fires(self):
        cert = check_primal_infeasible(infeasible_box_vs_row(), np.array([1.0]), 1e-12)
        assert cert is not None
        assert cert.kind is CertificateKind.PRIMAL_RAY
        assert cert.improvement == pytest.approx(1.0)
        assert cert.violation == 0.0

    def test_zero_ray_gives_none(self):
        assert check_primal_infeasible(infeasible_box_vs_row(), np.zeros(1), 1e-12) is None

    def test_feasible_problem_small_deltas_give_none(self, rng):
        for seed in range(20):
            p = random_qp(6, 4, "diagonal", seed=seed)
            for _ in range(5):
                assert check_primal_infeasible(p, rng.normal(size=4) * 1e-3, 1e-12) is None

    def test_scaling_invariance(self, rng):
        p = infeasible_box_vs_row()
        for _ in range(20):
            delta = rng.normal(size=1)
            alpha = float(rng.uniform(1e-6, 1e6))
            a = check_primal_infeasible(p, delta, 1e-12) is not None
            b = check_primal_infeasible(p, alpha * delta, 1e-12) is not None
            assert a == b

    def test_certificate_satisfies_alternative_system(self):
        # y in Y, A'y in R, p(-A'y) + p(y) < 0, re-validated from scratch
        p = infeasible_box_vs_row()
        cert = check_primal_infeasible(p, np.array([2.5]), 1e-12)
        y = cert.ray
        assert np.all(y >= -1e-12)  # Y = R^+ here
        aty = p.constraint_matrix.matvec_t(y)
        assert np.abs(aty - np.maximum(aty, 0.0)).max() <= 1e-8  # R = R^+
        assert support_p(-aty, p.var_bounds) + support_p(y, p.con_bounds) < -1e-8


def unbounded_problem():
    # min -x, x >= 0, no rows, Q = 0
    return QpProblem(
        quad=DiagonalQuad(np.zeros(1)),
        cost=np.array([-1.0]),
        constraint_matrix=SparseMatrix.from_coo(0, 1, [], [], []),
        var_bounds=Bounds(np.array([0.0]), np.array([INF])),
        con_bounds=Bounds(np.zeros(0), np.zeros(0)),
    )


class TestDualInfeasible:
    def test_hand_example_fires(self):
        p = unbounded_problem()
        cert = check_dual_infeasible(p, np.array([3.0]), 1e-6, 1e-12, default_gamma_sys(p))
        assert cert is not None
        assert cert.kind is CertificateKind.DUAL_RAY
        assert np.abs(cert.ray).max() == pytest.approx(1.0)
        assert cert.improvement == pytest.approx(-1.0)

    def test_bounded_box_gives_none(self):
        p = QpProblem(
            quad=DiagonalQuad(np.zeros(1)),
            cost=np.array([-1.0]),
            constraint_matrix=SparseMatrix.from_coo(0, 1, [], [], []),
            var_bounds=Bounds(np.array([0.0]), np.array([1.0])),
            con_bounds=Bounds(np.zeros(0), np.zeros(0)),
        )
        assert check_dual_infeasible(p, np.array([3.0]), 1e-6, 1e-12, 1.0) is None

    def test_zero_cost_gives_none(self):
        p = unbounded_problem()
        zero_cost = QpProblem(p.quad, np.zeros(1), p.constraint_matrix, p.var_bounds, p.con_bounds)
        assert check_dual_infeasible(zero_cost, np.array([3.0]), 1e-6, 1e-12, 1.0) is None

    def test_marching_along_ray_decreases_objective(self):
        p = unbounded_problem()
        cert = check_dual_infeasible(p, np.array([5.0]), 1e-6, 1e-12, default_gamma_sys(p))
        x0 = np.array([1.0])
        obj = lambda x: 0.5 * x @ p.quad.apply(x) + p.cost @ x
        values = [obj(x0 + lam * cert.ray) for lam in (1.0, 10.0, 100.0)]
        assert values[0] < obj(x0) and values[1] < values[0] and values[2] < values[1]
