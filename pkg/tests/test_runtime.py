import csv
import io
import random
import time
from fractions import Fraction
from itertools import accumulate

import pytest

from scanforge.kernels import BRENT_KUNG, SERIAL, scan_then_fan_kernel
from scanforge.runtime import (
    CSV_HEADER,
    Cluster,
    CycleError,
    Future,
    TaskGraph,
    TaskNode,
    bench,
    bench_csv,
    build_task_graph,
    critical_path,
    lift_remote,
    run_parallel,
    run_parallel_detailed,
    run_virtual,
    speedup_model,
)
from scanforge.tracing import max_depth, run_traced


def add(a, b):
    return a + b


def test_lift_remote_basic():
    with Cluster(2) as cluster:
        f1 = Future.resolved(3, owner=1)
        f2 = Future.resolved(4, owner=2)
        out = lift_remote(add, cluster)(f1, f2)
        assert out.owner == 2
        assert out.fetch() == 7


def test_lift_remote_chained_identity():
    with Cluster(2) as cluster:
        combine = lift_remote(add, cluster)
        f = Future.resolved(0, owner=1)
        for _ in range(5):
            f = combine(f, Future.resolved(0, owner=2))
        assert f.fetch() == 0


def test_future_resolves_exactly_once():
    f = Future(owner=1)
    f.resolve(1)
    with pytest.raises(RuntimeError):
        f.resolve(2)


def test_poisoned_future_reports_error():
    def boom(a, b):
        raise ZeroDivisionError("bad op")

    with Cluster(1) as cluster:
        out = lift_remote(boom, cluster)(
            Future.resolved(1, owner=1), Future.resolved(2, owner=1)
        )
        with pytest.raises(ZeroDivisionError):
            out.fetch()


def test_run_parallel_matches_oracle():
    got = run_parallel(BRENT_KUNG, list(range(1, 9)), add, 8)
    assert got == [1, 3, 6, 10, 15, 21, 28, 36]


def test_run_parallel_single_worker():
    got = run_parallel(BRENT_KUNG, list(range(1, 9)), add, 1)
    assert got == [1, 3, 6, 10, 15, 21, 28, 36]


def test_run_parallel_all_kernels_worker_counts():
    rng = random.Random(5)
    for kernel in (SERIAL, BRENT_KUNG, scan_then_fan_kernel(3)):
        for n in (0, 1, 2, 13, 32):
            vals = [rng.randrange(100) for _ in range(n)]
            want = list(accumulate(vals))
            for workers in (1, 2, 4, max(n, 1)):
                assert run_parallel(kernel, vals, add, workers) == want


def test_run_parallel_noncommutative_with_jitter():
    rng = random.Random(9)

    def jittery_concat(a, b):
        time.sleep(rng.random() * 0.002)
        return a + b

    vals = [chr(97 + i) for i in range(16)]
    want = list(accumulate(vals))
    assert run_parallel(BRENT_KUNG, vals, jittery_concat, 4) == want


def test_run_parallel_propagates_operator_errors():
    def boom(a, b):
        raise ValueError("poisoned")

    with pytest.raises(ValueError):
        run_parallel(BRENT_KUNG, list(range(1, 9)), boom, 4)


def test_owner_placement_rule():
    # every lifted op's output future lives on its right operand's owner
    _, graph = run_parallel_detailed(BRENT_KUNG, list(range(1, 17)), add, 16)
    assert len(graph.nodes) > 0
    run = run_virtual(BRENT_KUNG, list(range(1, 17)), add, 16)
    by_out = {node.out_id: node for node in run.graph.nodes}
    for node in run.graph.nodes:
        right_owner = by_out[node.right_id].owner if node.right_id in by_out else (
            (node.right_id - 1) % 16 + 1
        )
        assert node.owner == right_owner


def test_virtual_ticks_equal_critical_path():
    for kernel in (SERIAL, BRENT_KUNG, scan_then_fan_kernel(4)):
        for n in (2, 4, 8, 16, 32, 64):
            run = run_virtual(kernel, list(range(n)), add, n)
            assert run.ticks == critical_path(run.graph, 1)


def test_virtual_ticks_equal_stage_depth():
    for n in (2, 4, 8, 16, 32, 64):
        run = run_virtual(BRENT_KUNG, list(range(n)), add, n)
        assert run.ticks == max_depth(run_traced(BRENT_KUNG, n))


def test_critical_path_examples():
    assert critical_path(build_task_graph(BRENT_KUNG, 8), 1) == 5
    assert critical_path(build_task_graph(SERIAL, 8), 1) == 7
    assert critical_path(build_task_graph(BRENT_KUNG, 2), 1) == 1
    assert critical_path(build_task_graph(SERIAL, 8), 3) == 21


def test_critical_path_rejects_cycles():
    graph = TaskGraph([TaskNode(1, 1, 2, 3, 1, deps=(1,))])
    with pytest.raises(CycleError):
        critical_path(graph)


def test_speedup_model_values():
    assert speedup_model(2) == Fraction(1)
    assert speedup_model(8) == Fraction(7, 5)
    assert speedup_model(80) == Fraction(79, 11)
    with pytest.raises(ValueError):
        speedup_model(1)


def test_speedup_model_floor_log_third_exact():
    import math

    for p in range(2, 400):
        want = math.floor(math.log2(p / 3))
        denom = math.floor(math.log2(p)) + 1 + want
        assert speedup_model(p) == Fraction(p - 1, denom)


def test_virtual_bench_ratio_matches_model():
    rows = bench(SERIAL, BRENT_KUNG, [4, 8, 16, 32], op_cost=1, trials=1,
                 virtual=True)
    for row in rows:
        assert Fraction(row.t_serial, row.t_parallel) == speedup_model(row.p)


def test_bench_trials_take_minimum():
    rows = bench(SERIAL, BRENT_KUNG, [4], op_cost=0.001, trials=3)
    assert len(rows) == 1
    assert rows[0].t_serial > 0 and rows[0].t_parallel > 0


def test_bench_csv_parses():
    rows = bench(SERIAL, BRENT_KUNG, [4, 8], op_cost=1, trials=1, virtual=True)
    text = bench_csv(rows)
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert text.splitlines()[0] == CSV_HEADER
    assert [int(r["p"]) for r in parsed] == [4, 8]
    assert float(parsed[1]["model_ratio"]) == pytest.approx(1.4)


def test_workers_env_override(monkeypatch):
    monkeypatch.setenv("SCANFORGE_WORKERS", "2")
    rows = bench(SERIAL, BRENT_KUNG, [8], op_cost=1, trials=1, virtual=True)
    # with 2 workers the parallel tree serializes further but stays correct
    assert rows[0].t_parallel >= 5


def test_determinism_repeated_runs():
    vals = [chr(97 + i % 26) for i in range(32)]
    outputs = {
        tuple(run_parallel(BRENT_KUNG, vals, add, 8)) for _ in range(25)
    }
    assert len(outputs) == 1
