import json
import math

import numpy as np
import pytest

from anchorqp import SolverParams, random_qp
from anchorqp.bench import (
    RunRecord,
    ablation_inner_tolerance,
    load_problem,
    run_benchmark,
    run_instance,
    sgm10,
    summarize,
)
from anchorqp.errors import EmptyInput
from anchorqp.qps import write_qps
from anchorqp.serialize import dump_problem


class TestSgm10:
    def test_zero_time(self):
        assert sgm10([0.0], 1000.0, [True]) == pytest.approx(0.0)

    def test_two_identical(self):
        assert sgm10([90.0, 90.0], 1000.0, [True, True]) == pytest.approx(90.0)

    def test_failure_substitution(self):
        assert sgm10([5.0], 1000.0, [False]) == pytest.approx(1000.0)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            sgm10([], 100.0, [])

    def test_monotone_and_permutation_invariant(self, rng):
        times = rng.uniform(0, 50, 8)
        solved = np.ones(8, bool)
        base = sgm10(times, 100.0, solved)
        bumped = times.copy()
        bumped[3] += 5.0
        assert sgm10(bumped, 100.0, solved) > base
        perm = rng.permutation(8)
        assert sgm10(times[perm], 100.0, solved[perm]) == pytest.approx(base)

    def test_matches_formula(self, rng):
        times = rng.uniform(0, 20, 5)
        expected = math.exp(np.mean(np.log(times + 10.0))) - 10.0
        assert sgm10(times, 50.0, [True] * 5) == pytest.approx(expected)


class TestHarness:
    def test_run_instance_record(self):
        p = random_qp(6, 3, "diagonal", seed=0)
        rec = run_instance(p, SolverParams(eps_tol=1e-6))
        assert rec.solved
        assert rec.seconds >= 0.0
        assert rec.outer_iterations > 0

    def test_benchmark_over_files(self, tmp_path):
        params = SolverParams(eps_tol=1e-6)
        for seed in range(3):
            p = random_qp(5, 3, "diagonal", seed=seed)
            write_path = tmp_path / f"inst{seed}.qps"
            write_path.write_text(write_qps(p))
        dump_problem(random_qp(5, 3, "low_rank", seed=9), tmp_path / "inst3.json")
        paths = sorted(tmp_path.iterdir())
        records = run_benchmark(paths, params)
        assert [r.instance for r in records] == sorted(r.instance for r in records)
        summary = summarize(records, time_limit=100.0)
        assert summary["solved"] + summary["failed"] == summary["instances"] == 4

    def test_parallel_matches_serial(self, tmp_path):
        params = SolverParams(eps_tol=1e-6)
        for seed in range(4):
            dump_problem(random_qp(6, 3, "sparse", seed=seed), tmp_path / f"i{seed}.json")
        paths = sorted(tmp_path.iterdir())
        serial = run_benchmark(paths, params, jobs=1)
        parallel = run_benchmark(paths, params, jobs=2)
        assert [r.instance for r in serial] == [r.instance for r in parallel]
        assert [r.outer_iterations for r in serial] == [r.outer_iterations for r in parallel]
        assert [r.objective for r in serial] == [r.objective for r in parallel]

    def test_unreadable_instance_becomes_error_record(self, tmp_path):
        bad = tmp_path / "bad.qps"
        bad.write_text("COLUMNS\n x obj 1.0\n")
        records = run_benchmark([bad], SolverParams())
        assert len(records) == 1
        assert records[0].status.startswith("error")
        assert not records[0].solved

    def test_load_problem_roundtrip(self, tmp_path):
        p = random_qp(4, 2, "diagonal", seed=5)
        dump_problem(p, tmp_path / "a.json")
        (tmp_path / "a.qps").write_text(write_qps(p))
        from_json = load_problem(tmp_path / "a.json")
        from_qps = load_problem(tmp_path / "a.qps")
        np.testing.assert_allclose(from_json.cost, from_qps.cost)
        np.testing.assert_allclose(
            from_json.constraint_matrix.to_scipy().toarray(),
            from_qps.constraint_matrix.to_scipy().toarray(),
        )


def test_ablation_shapes():
    problems = [random_qp(6, 3, "sparse", seed=s) for s in range(2)]
    out = ablation_inner_tolerance(problems, eps_tol=1e-5)
    assert set(out) == {"fixed", "adaptive"}
    for cfg in out.values():
        assert cfg["solved"] == 2
        assert cfg["inner_iterations"] > 0
