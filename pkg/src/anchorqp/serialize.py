"""JSON serialization for problems and solve results.

Infinite bounds are encoded as JSON nulls (null lower = -inf, null upper =
+inf) since strict JSON has no infinity literal. Sparse data travels as COO
triplet lists.
"""

from __future__ import annotations

import json

import numpy as np

from .certify import Certificate
from .engine import SolveResult
from .errors import ParseError
from .linalg import DiagonalQuad, SparseLowRankQuad, SparseMatrix, SparseQuad
from .model import Bounds, QpProblem


def _matrix_to_coo(mat: SparseMatrix):
    row_ids = np.repeat(np.arange(mat.rows), np.diff(mat.indptr))
    return {
        "rows": mat.rows,
        "cols": mat.cols,
        "entries": [[int(i), int(j), float(v)] for i, j, v in zip(row_ids, mat.indices, mat.data)],
    }


def _matrix_from_coo(doc) -> SparseMatrix:
    entries = doc.get("entries", [])
    return SparseMatrix.from_coo(
        doc["rows"],
        doc["cols"],
        [e[0] for e in entries],
        [e[1] for e in entries],
        [e[2] for e in entries],
    )


def _bounds_to_lists(b: Bounds):
    lower = [None if np.isneginf(v) else float(v) for v in b.lower]
    upper = [None if np.isposinf(v) else float(v) for v in b.upper]
    return lower, upper


def _bounds_from_lists(lower, upper) -> Bounds:
    lo = np.array([-np.inf if v is None else float(v) for v in lower])
    up = np.array([np.inf if v is None else float(v) for v in upper])
    return Bounds(lo, up)


def problem_to_dict(problem: QpProblem) -> dict:
    quad = problem.quad
    if isinstance(quad, DiagonalQuad):
        quad_doc = {"kind": "diagonal", "values": [float(v) for v in quad.values]}
    elif isinstance(quad, SparseQuad):
        quad_doc = {"kind": "sparse", "upper": _matrix_to_coo(quad.upper)}
    elif isinstance(quad, SparseLowRankQuad):
        quad_doc = {
            "kind": "sparse_low_rank",
            "upper": _matrix_to_coo(quad.p.upper),
            "factor": _matrix_to_coo(quad.r),
        }
    else:
        raise TypeError(f"unknown quadratic operator {type(quad)!r}")
    var_lower, var_upper = _bounds_to_lists(problem.var_bounds)
    con_lower, con_upper = _bounds_to_lists(problem.con_bounds)
    return {
        "name": problem.name,
        "quad": quad_doc,
        "cost": [float(v) for v in problem.cost],
        "constraint_matrix": _matrix_to_coo(problem.constraint_matrix),
        "var_lower": var_lower,
        "var_upper": var_upper,
        "con_lower": con_lower,
        "con_upper": con_upper,
    }


def problem_from_dict(doc: dict) -> QpProblem:
    try:
        quad_doc = doc["quad"]
        kind = quad_doc["kind"]
        if kind == "diagonal":
            quad = DiagonalQuad(np.asarray(quad_doc["values"], dtype=np.float64))
        elif kind == "sparse":
            quad = SparseQuad(_matrix_from_coo(quad_doc["upper"]))
        elif kind == "sparse_low_rank":
            quad = SparseLowRankQuad(
                SparseQuad(_matrix_from_coo(quad_doc["upper"])),
                _matrix_from_coo(quad_doc["factor"]),
            )
        else:
            raise ParseError(f"unknown quadratic kind {kind!r}")
        return QpProblem(
            quad=quad,
            cost=np.asarray(doc["cost"], dtype=np.float64),
            constraint_matrix=_matrix_from_coo(doc["constraint_matrix"]),
            var_bounds=_bounds_from_lists(doc["var_lower"], doc["var_upper"]),
            con_bounds=_bounds_from_lists(doc["con_lower"], doc["con_upper"]),
            name=doc.get("name", ""),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ParseError(f"malformed problem document: {exc}") from exc


def dump_problem(problem: QpProblem, path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem), fh)
        fh.write("\n")


def load_problem_json(path) -> QpProblem:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    return problem_from_dict(doc)


def certificate_to_dict(cert: Certificate) -> dict:
    return {
        "kind": cert.kind.value,
        "ray": [float(v) for v in cert.ray],
        "violation": float(cert.violation),
        "improvement": float(cert.improvement),
    }


def result_to_dict(result: SolveResult, instance: str = "") -> dict:
    doc = {
        "instance": instance,
        "status": result.status.value,
        "primal_objective": float(result.report.primal_objective),
        "dual_objective": float(result.report.dual_objective),
        "r_primal": float(result.report.r_primal),
        "r_dual": float(result.report.r_dual),
        "r_gap": float(result.report.r_gap),
        "outer_iterations": result.outer_iterations,
        "inner_iterations": result.inner_iterations,
        "restarts": result.restarts,
        "seconds": float(result.seconds),
    }
    if result.certificate is not None:
        doc["certificate"] = certificate_to_dict(result.certificate)
    return doc
