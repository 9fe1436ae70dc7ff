"""Benchmark harness: per-instance run records and the SGM10 metric."""

from __future__ import annotations

import concurrent.futures
import dataclasses
import os

import numpy as np

from . import engine
from .errors import EmptyInput, ParseError
from .model import QpProblem
from .qps import parse_qps
from .serialize import load_problem_json


@dataclasses.dataclass(frozen=True)
class RunRecord:
    instance: str
    status: str
    outer_iterations: int
    inner_iterations: int
    seconds: float
    r_primal: float
    r_dual: float
    r_gap: float
    objective: float

    @property
    def solved(self) -> bool:
        return self.status == engine.SolveStatus.OPTIMAL.value

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def sgm10(times, limit: float, solved_mask) -> float:
    """Shifted geometric mean with shift 10.

    Unsolved entries are charged the full time limit before averaging:
    exp(mean(log(t + 10))) - 10.
    """
    times = np.asarray(times, dtype=np.float64)
    solved_mask = np.asarray(solved_mask, dtype=bool)
    if times.size == 0:
        raise EmptyInput("sgm10 needs at least one time")
    charged = np.where(solved_mask, times, limit)
    return float(np.exp(np.mean(np.log(charged + 10.0))) - 10.0)


def load_problem(path, fmt: str = None) -> QpProblem:
    """Read an instance file; format inferred from the extension by default."""
    path = os.fspath(path)
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "qps"
    if fmt == "json":
        return load_problem_json(path)
    if fmt == "qps":
        with open(path) as fh:
            return parse_qps(fh.read(), name=os.path.basename(path)).problem
    raise ValueError(f"unknown format {fmt!r}")


def run_instance(problem: QpProblem, params: engine.SolverParams, name: str = "") -> RunRecord:
    result = engine.solve(problem, params)
    return RunRecord(
        instance=name or problem.name,
        status=result.status.value,
        outer_iterations=result.outer_iterations,
        inner_iterations=result.inner_iterations,
        seconds=result.seconds,
        r_primal=result.report.r_primal,
        r_dual=result.report.r_dual,
        r_gap=result.report.r_gap,
        objective=result.report.primal_objective,
    )


def _run_path(path, params):
    name = os.path.basename(os.fspath(path))
    try:
        problem = load_problem(path)
    except (ParseError, OSError) as exc:
        return RunRecord(name, f"error: {exc}", 0, 0, 0.0, np.nan, np.nan, np.nan, np.nan)
    return run_instance(problem, params, name=name)


def run_benchmark(paths, params: engine.SolverParams, jobs: int = 1):
    """Solve every instance; records are merged in instance-name order."""
    paths = list(paths)
    if jobs <= 1:
        records = [_run_path(p, params) for p in paths]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_path, paths, [params] * len(paths)))
    records.sort(key=lambda r: r.instance)
    return records


def summarize(records, time_limit: float) -> dict:
    if not records:
        raise EmptyInput("no run records to summarize")
    times = [r.seconds for r in records]
    solved = [r.solved for r in records]
    return {
        "instances": len(records),
        "solved": int(sum(solved)),
        "failed": len(records) - int(sum(solved)),
        "sgm10_seconds": sgm10(times, time_limit, solved),
        "mean_seconds": float(np.mean([t if s else time_limit for t, s in zip(times, solved)])),
        "time_limit": time_limit,
    }


def ablation_inner_tolerance(problems, eps_tol: float, iter_limit: int = 200_000) -> dict:
    """Compare the adaptive inner-tolerance rule against a fixed tight one.

    Returns per-configuration outer/inner iteration totals and statuses for
    the same instances.
    """
    configs = {
        "fixed": engine.InnerParams(adaptive=False),
        "adaptive": engine.InnerParams(adaptive=True),
    }
    out = {}
    for label, inner_params in configs.items():
        params = engine.SolverParams(eps_tol=eps_tol, inner=inner_params, iter_limit=iter_limit)
        records = [run_instance(p, params) for p in problems]
        out[label] = {
            "records": records,
            "outer_iterations": int(sum(r.outer_iterations for r in records)),
            "inner_iterations": int(sum(r.inner_iterations for r in records)),
            "solved": int(sum(r.solved for r in records)),
        }
    return out
