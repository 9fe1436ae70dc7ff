import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from anchorqp import random_qp
from anchorqp.errors import ParseError
from anchorqp.serialize import (
    problem_from_dict,
    problem_to_dict,
    result_to_dict,
)
from anchorqp.testkit import dense_quad


@pytest.mark.parametrize("structure", ["diagonal", "sparse", "low_rank"])
def test_json_round_trip(structure):
    p = random_qp(7, 4, structure, seed=13)
    doc = json.loads(json.dumps(problem_to_dict(p)))  # force strict JSON
    q = problem_from_dict(doc)
    assert_allclose(q.cost, p.cost, atol=0)
    assert_allclose(dense_quad(q.quad), dense_quad(p.quad), atol=0)
    assert_allclose(
        q.constraint_matrix.to_scipy().toarray(),
        p.constraint_matrix.to_scipy().toarray(),
        atol=0,
    )
    assert_allclose(q.var_bounds.lower, p.var_bounds.lower)
    assert_allclose(q.con_bounds.upper, p.con_bounds.upper)


def test_infinite_bounds_become_nulls():
    p = random_qp(6, 3, "diagonal", seed=21)
    doc = problem_to_dict(p)
    text = json.dumps(doc)
    assert "Infinity" not in text
    has_inf = np.isinf(p.var_bounds.lower).any() or np.isinf(p.con_bounds.upper).any()
    assert has_inf == ("null" in text)


def test_malformed_document_raises():
    with pytest.raises(ParseError):
        problem_from_dict({"quad": {"kind": "diagonal"}})


def test_result_schema_fields():
    from anchorqp import SolverParams, solve

    p = random_qp(5, 3, "diagonal", seed=2)
    result = solve(p, SolverParams(eps_tol=1e-6))
    doc = result_to_dict(result, instance="x")
    assert doc["instance"] == "x"
    assert doc["status"] == "optimal"
    assert set(doc) >= {
        "primal_objective",
        "dual_objective",
        "r_primal",
        "r_dual",
        "r_gap",
        "outer_iterations",
        "inner_iterations",
        "restarts",
        "seconds",
    }
    json.dumps(doc)  # must be strictly serializable
