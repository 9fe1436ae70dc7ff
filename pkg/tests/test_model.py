import numpy as np
import pytest
from numpy.testing import assert_allclose

from anchorqp import (
    Bounds,
    ConeKind,
    DiagonalQuad,
    QpProblem,
    SparseMatrix,
    cone_of,
    project_box,
    project_cone,
    support_p,
    validate,
)
from anchorqp.errors import DimensionMismatch, InvertedBound, NonFiniteData
from anchorqp.model import psd_spot_check

INF = np.inf


def bounds(lo, hi):
    return Bounds(np.asarray(lo, float), np.asarray(hi, float))


class TestSupportP:
    def test_finite_example(self):
        # u'z+ - l'z- = 2*1 - 1*1
        assert support_p([1.0, -1.0], bounds([0, 1], [2, 3])) == 1.0

    def test_zero_input(self):
        assert support_p([0.0, 0.0], bounds([-1, -2], [3, 4])) == 0.0

    def test_infinite_bound_with_positive_part(self):
        assert support_p([1.0], bounds([0], [INF])) == INF

    def test_zero_times_infinity_is_zero(self):
        assert support_p([0.0], bounds([-INF], [INF])) == 0.0

    def test_negative_part_against_infinite_lower(self):
        assert support_p([-1.0], bounds([-INF], [0])) == INF

    def test_positive_homogeneity(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 8))
            b = bounds(rng.normal(size=n) - 1, rng.normal(size=n) + 1)
            z = rng.normal(size=n)
            alpha = float(rng.uniform(0, 5))
            assert_allclose(support_p(alpha * z, b), alpha * support_p(z, b), atol=1e-12)

    def test_dominates_inner_products(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 8))
            lo = rng.normal(size=n) - 1
            hi = lo + rng.uniform(0, 2, size=n)
            b = bounds(lo, hi)
            z = rng.normal(size=n)
            s = rng.uniform(lo, hi)
            assert support_p(z, b) >= float(z @ s) - 1e-12


class TestProjections:
    def test_clamp(self):
        assert_allclose(project_box([5.0], bounds([0], [3])), [3.0])

    def test_identity_inside(self):
        x = np.array([0.5, -0.5])
        assert_allclose(project_box(x, bounds([-1, -1], [1, 1])), x)

    def test_infinite_sides_left_alone(self):
        out = project_box([-2.0, 7.0], bounds([-INF, 0], [0, INF]))
        assert_allclose(out, [-2.0, 7.0])

    def test_cone_examples(self):
        assert_allclose(project_cone([-3.0], [ConeKind.NONNEG]), [0.0])
        assert_allclose(project_cone([4.0], [ConeKind.FREE]), [4.0])
        assert_allclose(project_cone([2.0, -2.0], [ConeKind.ZERO, ConeKind.NONPOS]), [0.0, -2.0])

    def test_idempotent_and_nonexpansive(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 10))
            lo = np.where(rng.random(n) < 0.3, -INF, rng.normal(size=n) - 1)
            hi = np.where(rng.random(n) < 0.3, INF, rng.normal(size=n) + 1)
            hi = np.maximum(lo, hi)
            b = bounds(lo, hi)
            u, v = rng.normal(size=(2, n)) * 3
            pu, pv = project_box(u, b), project_box(v, b)
            assert_allclose(project_box(pu, b), pu, atol=1e-15)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12

            codes = rng.integers(0, 4, size=n).astype(np.int8)
            cu, cv = project_cone(u, codes), project_cone(v, codes)
            assert_allclose(project_cone(cu, codes), cu, atol=1e-15)
            assert np.linalg.norm(cu - cv) <= np.linalg.norm(u - v) + 1e-12


class TestConeOf:
    # Row-for-row against the four finiteness patterns.
    PATTERNS = [
        ((-INF, INF), ConeKind.ZERO, ConeKind.ZERO, ConeKind.FREE),
        ((-INF, 5.0), ConeKind.NONNEG, ConeKind.NONPOS, ConeKind.NONPOS),
        ((1.0, INF), ConeKind.NONPOS, ConeKind.NONNEG, ConeKind.NONNEG),
        ((1.0, 5.0), ConeKind.FREE, ConeKind.FREE, ConeKind.ZERO),
    ]

    @pytest.mark.parametrize("pattern,dual_y,dual_r,recession", PATTERNS)
    def test_tables(self, pattern, dual_y, dual_r, recession):
        b = bounds([pattern[0]], [pattern[1]])
        assert cone_of(b, "dual_y")[0] == dual_y
        assert cone_of(b, "dual_r")[0] == dual_r
        assert cone_of(b, "recession")[0] == recession

    def test_examples(self):
        assert cone_of(bounds([-INF], [5]), "dual_y")[0] == ConeKind.NONNEG
        assert cone_of(bounds([0], [3]), "recession")[0] == ConeKind.ZERO
        assert cone_of(bounds([0], [INF]), "dual_r")[0] == ConeKind.NONNEG

    def test_bad_side(self):
        with pytest.raises(ValueError):
            cone_of(bounds([0], [1]), "nope")


def _toy_problem(n=2, m=1):
    return QpProblem(
        quad=DiagonalQuad(np.ones(n)),
        cost=np.zeros(n),
        constraint_matrix=SparseMatrix.from_dense(np.ones((m, n))),
        var_bounds=Bounds(np.zeros(n), np.ones(n)),
        con_bounds=Bounds(np.zeros(m), np.ones(m)),
    )


class TestValidate:
    def test_ok(self):
        validate(_toy_problem())

    def test_inverted_bound(self):
        p = _toy_problem()
        bad = QpProblem(p.quad, p.cost, p.constraint_matrix, Bounds(np.array([1.0, 0.0]), np.array([0.0, 1.0])), p.con_bounds)
        with pytest.raises(InvertedBound):
            validate(bad)

    def test_dimension_mismatch(self):
        p = _toy_problem(n=2)
        bad = QpProblem(p.quad, p.cost, SparseMatrix.from_dense(np.ones((2, 3))), p.var_bounds, p.con_bounds)
        with pytest.raises(DimensionMismatch):
            validate(bad)

    def test_nan_cost(self):
        p = _toy_problem()
        bad = QpProblem(p.quad, np.array([np.nan, 0.0]), p.constraint_matrix, p.var_bounds, p.con_bounds)
        with pytest.raises(NonFiniteData):
            validate(bad)

    def test_wrong_side_infinity(self):
        p = _toy_problem()
        bad = QpProblem(p.quad, p.cost, p.constraint_matrix, Bounds(np.array([np.inf, 0.0]), np.array([np.inf, 1.0])), p.con_bounds)
        with pytest.raises(NonFiniteData):
            validate(bad)


def test_psd_spot_check(rng):
    assert psd_spot_check(DiagonalQuad(rng.uniform(0, 1, 5)))
    from anchorqp import SparseQuad

    base = rng.standard_normal((6, 6))
    psd = SparseQuad.from_symmetric(base @ base.T)
    assert psd_spot_check(psd)
    indefinite = SparseQuad.from_symmetric(base + base.T)
    assert not psd_spot_check(indefinite, samples=32)
