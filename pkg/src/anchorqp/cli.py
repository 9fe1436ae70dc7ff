"""Command-line interface: solve, bench, and gen subcommands.

Exit codes: 0 optimal, 2 primal infeasible, 3 dual infeasible, 4 iteration
limit, 5 time limit, 64 usage error, 65 parse/input error.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

from . import bench, engine, generators, qps, serialize
from .errors import ParseError, SolverError

EXIT_BY_STATUS = {
    engine.SolveStatus.OPTIMAL: 0,
    engine.SolveStatus.PRIMAL_INFEASIBLE: 2,
    engine.SolveStatus.DUAL_INFEASIBLE: 3,
    engine.SolveStatus.ITERATION_LIMIT: 4,
    engine.SolveStatus.TIME_LIMIT: 5,
}
EXIT_USAGE = 64
EXIT_PARSE = 65

TRACE_HEADER = "iteration,r_primal,r_dual,r_gap,omega,round"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_solver_flags(parser):
    parser.add_argument("--tol", type=float, default=1e-6, help="termination tolerance")
    parser.add_argument("--inf-tol", type=float, default=1e-12, help="infeasibility tolerance")
    parser.add_argument("--time-limit", type=float, default=None, help="wall-clock limit in seconds")
    parser.add_argument("--iter-limit", type=int, default=1_000_000, help="outer iteration limit")
    parser.add_argument("--theta", type=float, default=0.0, help="reflection parameter")
    parser.add_argument("--pid", type=str, default="0.5,0.02,0.1", help="PID gains KP,KI,KD")
    parser.add_argument("--omega0", type=float, default=1.0, help="initial primal-dual weight")
    parser.add_argument("--restart-len", type=int, default=2000, help="max iterations per round")


def _build_parser():
    parser = _Parser(prog="anchorqp", description="First-order convex QP solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance")
    p_solve.add_argument("--input", required=True, help="instance file")
    p_solve.add_argument("--format", choices=("qps", "json"), default=None)
    p_solve.add_argument("--trace", default=None, help="per-certification trace file")
    p_solve.add_argument("--output", default=None, help="result document path (default stdout)")
    _add_solver_flags(p_solve)

    p_bench = sub.add_parser("bench", help="solve a directory of instances")
    p_bench.add_argument("--dir", required=True, help="instance directory")
    p_bench.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_bench.add_argument("--output", default=None, help="JSON summary path")
    _add_solver_flags(p_bench)

    p_gen = sub.add_parser("gen", help="generate an instance file")
    p_gen.add_argument("--kind", choices=("random", "lasso"), default="random")
    p_gen.add_argument("--n", type=int, default=50)
    p_gen.add_argument("--m", type=int, default=20)
    p_gen.add_argument("--structure", choices=generators.STRUCTURES, default="sparse")
    p_gen.add_argument("--density", type=float, default=0.3)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--format", choices=("qps", "json"), default=None)
    p_gen.add_argument("--output", required=True, help="instance file to write")
    return parser


def _params_from_args(args) -> engine.SolverParams:
    try:
        gains = tuple(float(v) for v in args.pid.split(","))
    except ValueError:
        raise _UsageError(f"--pid expects KP,KI,KD, got {args.pid!r}") from None
    if len(gains) != 3:
        raise _UsageError(f"--pid expects exactly three gains, got {args.pid!r}")
    if args.tol <= 0:
        raise _UsageError("--tol must be positive")
    if args.inf_tol <= 0:
        raise _UsageError("--inf-tol must be positive")
    try:
        return engine.SolverParams(
            eps_tol=args.tol,
            eps_inf=args.inf_tol,
            theta=args.theta,
            pid_gains=gains,
            omega0=args.omega0,
            restart=engine.RestartParams(max_round_len=args.restart_len),
            iter_limit=args.iter_limit,
            time_limit=args.time_limit,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _cmd_solve(args) -> int:
    params = _params_from_args(args)
    problem = bench.load_problem(args.input, args.format)
    trace_fh = open(args.trace, "w") if args.trace else None

    def progress(iteration, report, omega, round_idx):
        if trace_fh is not None:
            trace_fh.write(
                f"{iteration},{report.r_primal:.9e},{report.r_dual:.9e},"
                f"{report.r_gap:.9e},{omega:.9e},{round_idx}\n"
            )

    try:
        if trace_fh is not None:
            trace_fh.write(TRACE_HEADER + "\n")
        result = engine.solve(problem, params, progress=progress)
    finally:
        if trace_fh is not None:
            trace_fh.close()

    doc = serialize.result_to_dict(result, instance=os.path.basename(args.input))
    text = json.dumps(doc, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_BY_STATUS[result.status]


def _cmd_bench(args) -> int:
    params = _params_from_args(args)
    patterns = ("*.qps", "*.mps", "*.json")
    paths = sorted(
        p for pat in patterns for p in glob.glob(os.path.join(args.dir, pat))
    )
    if not paths:
        raise _UsageError(f"no instances found under {args.dir!r}")
    records = bench.run_benchmark(paths, params, jobs=args.jobs)
    limit = args.time_limit if args.time_limit is not None else 1000.0
    summary = bench.summarize(records, limit)
    header = f"{'instance':<28} {'status':<18} {'iters':>8} {'seconds':>10} {'objective':>14}"
    print(header)
    print("-" * len(header))
    for rec in records:
        print(
            f"{rec.instance:<28} {rec.status:<18} {rec.outer_iterations:>8}"
            f" {rec.seconds:>10.3f} {rec.objective:>14.6e}"
        )
    print(
        f"solved {summary['solved']}/{summary['instances']}"
        f"  SGM10 {summary['sgm10_seconds']:.3f}s  mean {summary['mean_seconds']:.3f}s"
    )
    if args.output:
        doc = {"records": [r.to_dict() for r in records], "summary": summary}
        with open(args.output, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return 0


def _cmd_gen(args) -> int:
    if args.kind == "random":
        problem = generators.random_qp(
            args.n, args.m, structure=args.structure, density=args.density, seed=args.seed
        )
    else:
        a, b = generators.random_lasso_data(args.m, args.n, density=args.density, seed=args.seed)
        problem = generators.make_lasso_qp(a, b)
    fmt = args.format
    if fmt is None:
        fmt = "json" if args.output.endswith(".json") else "qps"
    if fmt == "qps":
        text = qps.write_qps(problem)
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        serialize.dump_problem(problem, args.output)
    print(f"wrote {problem.name or args.kind} ({problem.n} vars, {problem.m} rows) to {args.output}")
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_gen(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(cli_main())
