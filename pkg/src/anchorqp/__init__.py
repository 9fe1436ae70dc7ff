"""First-order convex QP solver with anchored restarts.

Solves min 0.5 x'Qx + c'x subject to Ax in S and x in X, where X and S are
boxes over the extended reals, by a primal-dual hybrid gradient loop with
reflected anchored acceleration, adaptive restarts, a PID-controlled
primal-dual weight, and inexact subproblem solves. Detects and certifies
primal/dual infeasibility.
"""

from ._kernels import active_backend, available_backends, select_backend
from .certify import (
    Certificate,
    CertificateKind,
    ResidualReport,
    check_dual_infeasible,
    check_optimal,
    check_primal_infeasible,
    residuals,
)
from .engine import (
    InnerParams,
    RestartParams,
    SolveResult,
    SolverParams,
    SolveStatus,
    solve,
)
from .generators import make_lasso_qp, random_lasso_data, random_qp
from .linalg import (
    DiagonalQuad,
    QuadOperator,
    SparseLowRankQuad,
    SparseMatrix,
    SparseQuad,
    estimate_norm,
    quad_apply,
)
from .model import (
    Bounds,
    ConeKind,
    QpProblem,
    cone_of,
    project_box,
    project_cone,
    support_p,
    validate,
)
from .qps import QpsDocument, parse_qps, write_qps

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "Certificate",
    "CertificateKind",
    "ConeKind",
    "DiagonalQuad",
    "InnerParams",
    "QpProblem",
    "QpsDocument",
    "QuadOperator",
    "ResidualReport",
    "RestartParams",
    "SolveResult",
    "SolverParams",
    "SolveStatus",
    "SparseLowRankQuad",
    "SparseMatrix",
    "SparseQuad",
    "active_backend",
    "available_backends",
    "check_dual_infeasible",
    "check_optimal",
    "check_primal_infeasible",
    "cone_of",
    "estimate_norm",
    "make_lasso_qp",
    "parse_qps",
    "project_box",
    "project_cone",
    "quad_apply",
    "random_lasso_data",
    "random_qp",
    "residuals",
    "select_backend",
    "solve",
    "support_p",
    "validate",
    "write_qps",
]
