"""The outer solver loop.

Each iteration applies one primal-dual step to the current iterate, then an
anchored (reflected Halpern) combination with the round's starting point.
Rounds end when the KKT residual has decayed enough or a length cap is hit;
at every round boundary a PID controller rebalances the primal-dual weight
from the log-ratio of primal to dual movement over the round.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import time
from typing import Callable, Optional

import numpy as np

from . import certify, inner
from . import _kernels as kern
from .errors import ZeroMatrix
from .linalg import DiagonalQuad, estimate_norm
from .model import QpProblem, project_box, validate

OMEGA_MIN = 1e-6
OMEGA_MAX = 1e6
PID_INTEGRAL_CLAMP = 10.0
ETA_UNCONSTRAINED = 1e8  # step scale when A has no nonzeros

# Reflection safeguard: the reflected combination can amplify rotational
# components of the primal-dual map on some instances. A round whose KKT
# residual blows up past this factor (or overflows) is rolled back to its
# anchor and the reflection parameter is halved for subsequent rounds.
DIVERGENCE_FACTOR = 100.0
THETA_BACKOFF_FLOOR = 1e-2

# Stall probe: anchored restarts re-excite transients, which keeps windowed
# iterate differences from converging to exact infeasibility rays. After
# STALL_CHECKS consecutive certifications without meaningful progress the
# loop runs plain (un-anchored) steps for up to one round length; their
# differences lock onto rays geometrically, and feasible-but-slow instances
# simply keep converging during the probe.
STALL_CHECKS = 8
STALL_IMPROVEMENT = 0.99
# Certificate accuracy is bounded by inner-solve accuracy, so probe steps
# solve their subproblems far below the adaptive rule's floor. The recorded
# tolerance sequence is not touched.
PROBE_INNER_TOL = 1e-12


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    ITERATION_LIMIT = "iteration_limit"
    TIME_LIMIT = "time_limit"


@dataclasses.dataclass(frozen=True)
class RestartParams:
    """Round-boundary rule: restart on sufficient KKT decay, on necessary
    decay plus stalling, or when the round hits the length cap."""

    beta_sufficient: float = 0.2
    beta_necessary: float = 0.8
    max_round_len: int = 2000
    enabled: bool = True

    def __post_init__(self):
        if self.enabled and not 0.0 < self.beta_sufficient < self.beta_necessary < 1.0:
            raise ValueError("restart betas must satisfy 0 < sufficient < necessary < 1")
        if self.max_round_len < 1:
            raise ValueError("max_round_len must be positive")


@dataclasses.dataclass(frozen=True)
class InnerParams:
    """Inner-solve policy: adaptive tolerance (default) or a fixed one."""

    adaptive: bool = True
    initial: float = 1e-2
    scale: float = 5e-4
    floor: float = 1e-9
    fixed_tol: float = 1e-9
    max_inner: int = 200


@dataclasses.dataclass(frozen=True)
class SolverParams:
    # theta defaults to 0 (no reflection): the reflected combination can
    # sustain oscillation on rotation-heavy instances, and the plain
    # anchored iteration with restarts is uniformly robust. eps_inf is
    # relative to the certified improvement; 1e-9 leaves margin over the
    # inner-solve floor that bounds ray accuracy on non-diagonal problems.
    eps_tol: float = 1e-6
    eps_inf: float = 1e-9
    theta: float = 0.0
    eta_scale: float = 0.998
    pid_gains: tuple = (0.5, 0.02, 0.1)
    omega0: float = 1.0
    restart: RestartParams = dataclasses.field(default_factory=RestartParams)
    inner: InnerParams = dataclasses.field(default_factory=InnerParams)
    iter_limit: int = 1_000_000
    time_limit: Optional[float] = None
    check_every: int = 64
    halpern: bool = True  # anchor weight off reduces the loop to plain PDHG
    gamma_sys: Optional[float] = None
    norm_iters: int = 100
    norm_seed: int = 0

    def __post_init__(self):
        if self.eps_tol <= 0 or self.eps_inf <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        if self.iter_limit < 1 or self.check_every < 1:
            raise ValueError("iter_limit and check_every must be positive")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclasses.dataclass
class SolverState:
    """Mutable loop state; owned by a single solve call."""

    x: np.ndarray
    y: np.ndarray
    x_prev_outer: np.ndarray  # previous anchored output z^{k-1}
    y_prev_outer: np.ndarray
    anchor_x: np.ndarray  # z^0 of the current round
    anchor_y: np.ndarray
    round_start_x: np.ndarray
    round_start_y: np.ndarray
    k_inner_halpern: int
    round: int
    omega: float
    eta: float
    theta: float  # active reflection; backed off when a round diverges
    pid_integral: float
    pid_last_error: float
    inner_tol: inner.InnerTolerance
    best_residual_round_start: float
    last_check_kkt: float

    @property
    def tau(self) -> float:
        return self.eta / self.omega

    @property
    def sigma(self) -> float:
        return self.eta * self.omega


@dataclasses.dataclass(frozen=True)
class SolveResult:
    status: SolveStatus
    x: np.ndarray
    y: np.ndarray
    report: certify.ResidualReport
    certificate: Optional[certify.Certificate]
    outer_iterations: int
    inner_iterations: int
    restarts: int
    seconds: float

    @property
    def rounds(self) -> int:
        return self.restarts + 1


def initialize(problem: QpProblem, params: SolverParams) -> SolverState:
    """Deterministic start: x0 = proj_X(0), y0 = 0, eta = scale / |A|."""
    x0 = project_box(np.zeros(problem.n), problem.var_bounds)
    y0 = np.zeros(problem.m)
    try:
        eta = params.eta_scale / estimate_norm(
            problem.constraint_matrix, params.norm_iters, params.norm_seed
        )
    except ZeroMatrix:
        eta = ETA_UNCONSTRAINED
    tol0 = params.inner.initial if params.inner.adaptive else params.inner.fixed_tol
    return SolverState(
        x=x0,
        y=y0,
        x_prev_outer=x0.copy(),
        y_prev_outer=y0.copy(),
        anchor_x=x0.copy(),
        anchor_y=y0.copy(),
        round_start_x=x0.copy(),
        round_start_y=y0.copy(),
        k_inner_halpern=0,
        round=0,
        omega=params.omega0,
        eta=eta,
        theta=params.theta,
        pid_integral=0.0,
        pid_last_error=0.0,
        inner_tol=inner.InnerTolerance(tol0, params.inner.floor, params.inner.scale),
        best_residual_round_start=math.inf,
        last_check_kkt=math.inf,
    )


def pdhg_step(state: SolverState, problem: QpProblem, params: SolverParams, inner_target=None):
    """One primal-dual step from the current iterate; does not mutate state.

    Returns ``((x_plus, y_plus), inner_iterations)``. ``inner_target``
    overrides the recorded inner tolerance for this step only.
    """
    tau, sigma = state.tau, state.sigma
    linear = problem.cost + problem.constraint_matrix.matvec_t(state.y)
    spec = inner.SubproblemSpec(problem.quad, linear, state.x, tau, problem.var_bounds)
    if isinstance(problem.quad, DiagonalQuad):
        x_plus = inner.solve_diagonal(spec)
        iters = 0
    else:
        target = state.inner_tol if inner_target is None else min(state.inner_tol.current, inner_target)
        x_plus, _, iters = inner.solve_bb(spec, target, params.inner.max_inner)
    x_bar = kern.axpby(2.0, x_plus, -1.0, state.x)
    ax_bar = problem.constraint_matrix.matvec(x_bar)
    y_plus = kern.dual_step(
        state.y, ax_bar, sigma, problem.con_bounds.lower, problem.con_bounds.upper
    )
    return (x_plus, y_plus), iters


def halpern_combine(pdhg_out, state: SolverState, params: SolverParams):
    """Reflected anchored combination of the step output with the round anchor.

    z_new = (1+theta) * ((k+1)/(k+2) * w + 1/(k+2) * anchor) - theta * z_prev.
    The coefficients always sum to one (affine combination).
    """
    wx, wy = pdhg_out
    if not params.halpern:
        return wx, wy
    k = state.k_inner_halpern
    theta = state.theta
    a = (1.0 + theta) * ((k + 1.0) / (k + 2.0))
    b = (1.0 + theta) * (1.0 / (k + 2.0))
    zx = kern.lincomb3(a, wx, b, state.anchor_x, -theta, state.x_prev_outer)
    zy = kern.lincomb3(a, wy, b, state.anchor_y, -theta, state.y_prev_outer)
    return zx, zy


def restart_decision(state: SolverState, current_kkt: float, params: SolverParams) -> bool:
    """Restart on sufficient decay, length cap, or necessary decay + stall."""
    if state.k_inner_halpern >= params.restart.max_round_len:
        return True
    baseline = state.best_residual_round_start
    if current_kkt <= params.restart.beta_sufficient * baseline:
        return True
    if current_kkt <= params.restart.beta_necessary * baseline and current_kkt > state.last_check_kkt:
        return True
    return False


def pid_update(state: SolverState, params: SolverParams) -> float:
    """New primal-dual weight from the round's movement imbalance.

    e = log(sqrt(w)|dx| / (|dy|/sqrt(w))); log w decreases by the PID law
    K_P e + K_I sum(e) + K_D (e - e_prev). Degenerate rounds (no primal or
    no dual movement) leave the weight and the accumulators unchanged.
    """
    dx = float(np.linalg.norm(state.x - state.round_start_x))
    dy = float(np.linalg.norm(state.y - state.round_start_y))
    if dx <= 0.0 or dy <= 0.0 or not (math.isfinite(dx) and math.isfinite(dy)):
        return state.omega
    error = math.log(state.omega * dx / dy)
    if not math.isfinite(error):
        return state.omega
    kp, ki, kd = params.pid_gains
    integral = min(max(state.pid_integral + error, -PID_INTEGRAL_CLAMP), PID_INTEGRAL_CLAMP)
    log_omega = math.log(state.omega) - (
        kp * error + ki * integral + kd * (error - state.pid_last_error)
    )
    state.pid_integral = integral
    state.pid_last_error = error
    return min(max(math.exp(log_omega), OMEGA_MIN), OMEGA_MAX)


def _do_restart(state: SolverState, params: SolverParams, kkt: float, made_progress: bool = True) -> None:
    # Anti-windup: a round that hit the length cap without improving the KKT
    # residual (stall or divergence, e.g. on infeasible instances) carries a
    # meaningless movement ratio; feeding it to the controller slams omega
    # into its clamp and freezes one side of the iteration.
    if made_progress:
        state.omega = pid_update(state, params)
    state.anchor_x = state.x.copy()
    state.anchor_y = state.y.copy()
    state.round_start_x = state.x.copy()
    state.round_start_y = state.y.copy()
    state.x_prev_outer = state.x.copy()
    state.y_prev_outer = state.y.copy()
    state.k_inner_halpern = 0
    state.round += 1
    state.best_residual_round_start = kkt
    state.last_check_kkt = kkt


def _rollback_round(state: SolverState) -> None:
    """Divergence safeguard: drop the round, back off the reflection.

    The iterate returns to the round anchor (the last certified point) and
    the reflection parameter is halved; at zero reflection the loop is a
    plain anchored iteration, which cannot amplify.
    """
    state.x = state.anchor_x.copy()
    state.y = state.anchor_y.copy()
    state.x_prev_outer = state.anchor_x.copy()
    state.y_prev_outer = state.anchor_y.copy()
    state.round_start_x = state.anchor_x.copy()
    state.round_start_y = state.anchor_y.copy()
    state.k_inner_halpern = 0
    state.round += 1
    state.theta = state.theta / 2.0 if state.theta >= THETA_BACKOFF_FLOOR else 0.0
    state.last_check_kkt = state.best_residual_round_start


def _reanchor(state: SolverState, kkt: float) -> None:
    """Start a fresh anchored round at the current point (no PID update)."""
    state.anchor_x = state.x.copy()
    state.anchor_y = state.y.copy()
    state.round_start_x = state.x.copy()
    state.round_start_y = state.y.copy()
    state.x_prev_outer = state.x.copy()
    state.y_prev_outer = state.y.copy()
    state.k_inner_halpern = 0
    state.round += 1
    state.best_residual_round_start = kkt
    state.last_check_kkt = kkt


ProgressCallback = Callable[[int, certify.ResidualReport, float, int], None]


def solve(
    problem: QpProblem,
    params: Optional[SolverParams] = None,
    progress: Optional[ProgressCallback] = None,
) -> SolveResult:
    """Run the solver until optimality, an infeasibility certificate fires,
    or an iteration/time limit is hit.

    ``progress``, when given, is invoked as ``progress(iteration, report,
    omega, round)`` at every certification point.
    """
    params = params or SolverParams()
    validate(problem)
    start = time.monotonic()
    state = initialize(problem, params)
    gamma_sys = params.gamma_sys if params.gamma_sys is not None else certify.default_gamma_sys(problem)

    n_outer = 0
    n_inner = 0
    restarts = 0

    def finish(status, report, cert, x_out, y_out):
        return SolveResult(
            status=status,
            x=x_out,
            y=y_out,
            report=report,
            certificate=cert,
            outer_iterations=n_outer,
            inner_iterations=n_inner,
            restarts=restarts,
            seconds=time.monotonic() - start,
        )

    x_eval = project_box(state.x, problem.var_bounds)
    report = certify.residuals(problem, x_eval, state.y)
    state.best_residual_round_start = report.kkt_max
    state.last_check_kkt = report.kkt_max
    if progress is not None:
        progress(0, report, state.omega, state.round)
    if certify.check_optimal(report, params.eps_tol):
        return finish(SolveStatus.OPTIMAL, report, None, x_eval, state.y)
    x_last_cert = state.x.copy()
    y_last_cert = state.y.copy()
    best_kkt_seen = report.kkt_max
    stall_checks = 0
    probe_until = 0
    # Window-averaged iterates give much cleaner ray candidates than raw
    # endpoints: averaging cancels the sustained oscillation of the
    # primal-dual map around its infimal displacement.
    x_block = np.zeros(problem.n)
    y_block = np.zeros(problem.m)
    block_len = 0
    x_avg_prev = None
    y_avg_prev = None

    while n_outer < params.iter_limit:
        probing = n_outer < probe_until
        (px, py), step_inner = pdhg_step(
            state, problem, params, inner_target=PROBE_INNER_TOL if probing else None
        )
        if probing:
            zx, zy = px, py
        else:
            zx, zy = halpern_combine((px, py), state, params)
        move = float(np.linalg.norm(zx - state.x))
        n_outer += 1
        n_inner += step_inner
        if not math.isfinite(move):
            # Overflow inside the round; roll back before residuals degrade.
            _rollback_round(state)
            x_last_cert = state.x.copy()
            y_last_cert = state.y.copy()
            probe_until = 0
            x_avg_prev = y_avg_prev = None
            x_block[:] = 0.0
            y_block[:] = 0.0
            block_len = 0
            continue
        if params.inner.adaptive:
            state.inner_tol = inner.update_tolerance(state.inner_tol, state.omega, state.tau, move)
        state.x_prev_outer = state.x
        state.y_prev_outer = state.y
        state.x = zx
        state.y = zy
        if not probing:
            state.k_inner_halpern += 1
        x_block += zx
        y_block += zy
        block_len += 1

        at_cap = (
            not probing
            and params.restart.enabled
            and state.k_inner_halpern >= params.restart.max_round_len
        )
        if n_outer % params.check_every == 0 or at_cap or n_outer == params.iter_limit:
            x_eval = project_box(state.x, problem.var_bounds)
            report = certify.residuals(problem, x_eval, state.y)
            kkt = report.kkt_max
            if progress is not None:
                progress(n_outer, report, state.omega, state.round)
            if certify.check_optimal(report, params.eps_tol):
                return finish(SolveStatus.OPTIMAL, report, None, x_eval, state.y)
            x_avg = x_block / block_len
            y_avg = y_block / block_len
            x_block = np.zeros(problem.n)
            y_block = np.zeros(problem.m)
            block_len = 0
            dy_candidates = [state.y - y_last_cert]
            dx_candidates = [state.x - x_last_cert]
            if y_avg_prev is not None:
                dy_candidates.insert(0, y_avg - y_avg_prev)
                dx_candidates.insert(0, x_avg - x_avg_prev)
            x_avg_prev, y_avg_prev = x_avg, y_avg
            for delta_y in dy_candidates:
                cert = certify.check_primal_infeasible(problem, delta_y, params.eps_inf)
                if cert is not None:
                    return finish(SolveStatus.PRIMAL_INFEASIBLE, report, cert, x_eval, state.y)
            for delta_x in dx_candidates:
                cert = certify.check_dual_infeasible(
                    problem, delta_x, params.eps_tol, params.eps_inf, gamma_sys
                )
                if cert is not None:
                    return finish(SolveStatus.DUAL_INFEASIBLE, report, cert, x_eval, state.y)
            x_last_cert = state.x.copy()
            y_last_cert = state.y.copy()

            if math.isfinite(kkt) and kkt < STALL_IMPROVEMENT * best_kkt_seen:
                best_kkt_seen = min(best_kkt_seen, kkt)
                stall_checks = 0
            else:
                stall_checks += 1
            if probing:
                if n_outer >= probe_until:
                    if stall_checks == 0:
                        # Progress resumed: back to anchored rounds from here.
                        _reanchor(state, kkt)
                    else:
                        # Still stalled (hard geometry or an infeasible
                        # instance): stay in plain mode so the iterate
                        # differences keep sharpening into rays.
                        probe_until = n_outer + params.restart.max_round_len
            elif stall_checks >= STALL_CHECKS:
                probe_until = n_outer + params.restart.max_round_len
            elif not math.isfinite(kkt) or kkt > DIVERGENCE_FACTOR * state.best_residual_round_start:
                _rollback_round(state)
                x_last_cert = state.x.copy()
                y_last_cert = state.y.copy()
            elif params.restart.enabled and restart_decision(state, kkt, params):
                _do_restart(state, params, kkt, made_progress=kkt < state.best_residual_round_start)
                restarts += 1
            else:
                state.last_check_kkt = kkt
            if params.time_limit is not None and time.monotonic() - start >= params.time_limit:
                return finish(SolveStatus.TIME_LIMIT, report, None, x_eval, state.y)

    x_eval = project_box(state.x, problem.var_bounds)
    report = certify.residuals(problem, x_eval, state.y)
    return finish(SolveStatus.ITERATION_LIMIT, report, None, x_eval, state.y)
