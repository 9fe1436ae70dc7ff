import numpy as np
import pytest
from numpy.testing import assert_allclose

from anchorqp import DiagonalQuad, SparseQuad, parse_qps, random_qp, write_qps
from anchorqp.errors import ParseError, UnsupportedSection
from anchorqp.testkit import dense_quad

MINIMAL = """\
NAME          TINY
ROWS
 N  COST
COLUMNS
    X1  COST  1.0
RHS
BOUNDS
 FR BND  X1
QUADOBJ
    X1  X1  2.0
ENDATA
"""

SMALL_LP = """\
* a comment line
NAME          SMALL
ROWS
 N  obj
 L  c1
 G  c2
 E  c3
COLUMNS
    x1  obj  1.0  c1  2.0
    x1  c2  1.0
    x2  obj  -1.0  c1  1.0
    x2  c3  1.0
RHS
    RHS  c1  10.0  c2  -5.0
    RHS  c3  2.5
    RHS  obj  -7.0
RANGES
    RNG  c1  4.0
BOUNDS
 UP BND  x1  8.0
 MI BND  x2
 UP BND  x2  3.0
ENDATA
"""


class TestParse:
    def test_minimal_document(self):
        doc = parse_qps(MINIMAL)
        p = doc.problem
        assert p.n == 1 and p.m == 0
        assert isinstance(p.quad, DiagonalQuad)
        assert_allclose(p.quad.values, [2.0])
        assert_allclose(p.cost, [1.0])
        assert np.isneginf(p.var_bounds.lower[0]) and np.isposinf(p.var_bounds.upper[0])
        assert p.name == "TINY"

    def test_small_lp_sections(self):
        doc = parse_qps(SMALL_LP)
        p = doc.problem
        assert p.n == 2 and p.m == 3
        assert doc.objective_constant == 7.0
        # L row with range 4: [10-4, 10]; G row: [-5, inf); E row: {2.5}
        assert_allclose(p.con_bounds.lower, [6.0, -5.0, 2.5])
        assert_allclose(p.con_bounds.upper, [10.0, np.inf, 2.5])
        # x1: default lower 0, UP 8; x2: MI then UP 3
        assert_allclose(p.var_bounds.lower, [0.0, -np.inf])
        assert_allclose(p.var_bounds.upper, [8.0, 3.0])
        assert_allclose(p.constraint_matrix.to_scipy().toarray(), [[2, 1], [1, 0], [0, 1]])

    def test_negative_up_drops_default_lower(self):
        text = "ROWS\n N obj\nCOLUMNS\n x obj 1.0\nBOUNDS\n UP BND x -2.0\nENDATA\n"
        p = parse_qps(text).problem
        assert np.isneginf(p.var_bounds.lower[0])
        assert p.var_bounds.upper[0] == -2.0

    def test_intorg_marker_rejected(self):
        text = "ROWS\n N obj\nCOLUMNS\n M1 'MARKER' 'INTORG'\n x obj 1.0\nENDATA\n"
        with pytest.raises(UnsupportedSection):
            parse_qps(text)

    def test_unknown_section_rejected(self):
        with pytest.raises(UnsupportedSection):
            parse_qps("ROWS\n N obj\nSOS\n s1 x 1\nENDATA\n")

    def test_integer_bound_rejected(self):
        text = "ROWS\n N obj\nCOLUMNS\n x obj 1.0\nBOUNDS\n BV BND x\nENDATA\n"
        with pytest.raises(UnsupportedSection):
            parse_qps(text)

    def test_parse_error_carries_line(self):
        text = "ROWS\n N obj\nCOLUMNS\n x obj notanumber\n"
        with pytest.raises(ParseError) as err:
            parse_qps(text)
        assert "line 4" in str(err.value)

    def test_unknown_row_rejected(self):
        with pytest.raises(ParseError):
            parse_qps("ROWS\n N obj\nCOLUMNS\n x nosuchrow 1.0\n")

    def test_missing_objective_rejected(self):
        with pytest.raises(ParseError):
            parse_qps("ROWS\n L c1\nCOLUMNS\n x c1 1.0\n")

    def test_qmatrix_alias_both_triangles(self):
        common = "ROWS\n N obj\nCOLUMNS\n x obj 1.0\n y obj 1.0\n"
        via_quadobj = parse_qps(common + "QUADOBJ\n x x 2.0\n x y 0.5\n y y 1.0\nENDATA\n")
        via_qmatrix = parse_qps(
            common + "QMATRIX\n x x 2.0\n x y 0.5\n y x 0.5\n y y 1.0\nENDATA\n"
        )
        assert_allclose(
            dense_quad(via_quadobj.problem.quad), dense_quad(via_qmatrix.problem.quad)
        )
        assert_allclose(dense_quad(via_quadobj.problem.quad), [[2.0, 0.5], [0.5, 1.0]])


def _equivalent(p, q):
    assert p.n == q.n and p.m == q.m
    assert_allclose(p.cost, q.cost, atol=0)
    assert_allclose(p.var_bounds.lower, q.var_bounds.lower)
    assert_allclose(p.var_bounds.upper, q.var_bounds.upper)
    assert_allclose(p.con_bounds.lower, q.con_bounds.lower)
    assert_allclose(p.con_bounds.upper, q.con_bounds.upper)
    assert_allclose(
        p.constraint_matrix.to_scipy().toarray(), q.constraint_matrix.to_scipy().toarray(), atol=0
    )
    assert_allclose(dense_quad(p.quad), dense_quad(q.quad), atol=0)


class TestRoundTrip:
    def test_write_then_parse_identity(self):
        doc = parse_qps(SMALL_LP)
        text = write_qps(doc.problem, doc.objective_constant)
        doc2 = parse_qps(text)
        _equivalent(doc.problem, doc2.problem)
        assert doc2.objective_constant == doc.objective_constant

    def test_random_instances_round_trip(self):
        for seed in range(50):
            structure = "diagonal" if seed % 2 else "sparse"
            p = random_qp(1 + seed % 9, 1 + seed % 5, structure, seed=seed)
            q = parse_qps(write_qps(p)).problem
            _equivalent(p, q)

    def test_low_rank_refused(self):
        p = random_qp(6, 3, "low_rank", seed=1)
        with pytest.raises(ValueError):
            write_qps(p)

    def test_free_row_round_trips(self):
        import anchorqp as aq

        p = aq.QpProblem(
            quad=DiagonalQuad(np.zeros(2)),
            cost=np.array([1.0, 2.0]),
            constraint_matrix=aq.SparseMatrix.from_dense([[1.0, 1.0]]),
            var_bounds=aq.Bounds(np.zeros(2), np.ones(2)),
            con_bounds=aq.Bounds(np.array([-np.inf]), np.array([np.inf])),
        )
        q = parse_qps(write_qps(p)).problem
        _equivalent(p, q)
