import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twinforge.bench import catalog_spec, generate
from twinforge.model import DistSpec, Edge, EdgeKind, GraphBuilder, Node, NodeKind
from twinforge.sim import (
    ConfigError,
    PreconditionFailed,
    SimConfig,
    check_trace,
    little_check,
    sample,
    simulate,
    simulate_many,
    stream,
    trace_csv,
)

from conftest import line_graph


def saturated(delay=2.0):
    return line_graph(1, "sat", delays=[delay], arrival=0.0)


def test_saturated_line_hand_trace():
    rep = simulate(saturated(), SimConfig(100.0, 0.0, seed=1, trace=True))
    assert rep.completed == 50
    assert rep.utilization["M1"] == pytest.approx(1.0, abs=1e-9)
    exits = [r.time for r in rep.trace if r.entity == "SINK" and r.event == "exit"]
    assert exits == [2.0 * k for k in range(1, 51)]


def test_bottleneck_two_machines():
    g = line_graph(2, delays=[1.0, 2.0], arrival=0.0)
    rep = simulate(g, SimConfig(2000.0, 100.0, seed=0))
    assert rep.total_throughput == pytest.approx(0.5, rel=0.01)


def test_nothing_finishes_before_first_delay():
    rep = simulate(saturated(), SimConfig(1.5, 0.0, seed=0))
    assert rep.total_throughput == 0 and rep.completed == 0
    warm = simulate(saturated(), SimConfig(101.5, 101.0, seed=0))
    assert warm.total_throughput == 0


def test_cold_start_window():
    rep = simulate(saturated(), SimConfig(1.0, 0.0, seed=0))
    assert rep.completed == 0 and little_check(rep, 0.5)["defined"] is False


def test_precondition_and_config():
    b = GraphBuilder.from_graph(saturated())
    b.add_node(Node("X", NodeKind.MACHINE, {"delay": 1.0}))
    with pytest.raises(PreconditionFailed):
        simulate(b.build(), SimConfig(10.0))
    for bad in (dict(horizon=0), dict(horizon=10, warmup=10), dict(horizon=10, seed=-1)):
        with pytest.raises(ConfigError):
            SimConfig(**bad)


def test_sample_examples():
    rng = stream(7, "x")
    assert all(sample(DistSpec.deterministic(2.0), rng) == 2.0 for _ in range(10))
    assert sample(DistSpec.uniform(3, 3), rng) == 3.0
    draws = np.array([sample(DistSpec.exponential(0.5), rng) for _ in range(100_000)])
    assert 1.9 <= draws.mean() <= 2.1


def test_streams_are_keyed_by_element():
    assert stream(5, "M1").random() == stream(5, "M1").random()
    assert stream(5, "M1").random() != stream(5, "M2").random()


def test_adding_a_component_keeps_other_draws():
    base = line_graph(2, delays=[DistSpec.exponential(1.0)] * 2)
    bigger = line_graph(3, delays=[DistSpec.exponential(1.0)] * 3)
    cfg = SimConfig(50.0, 0.0, seed=3, trace=True)
    first = lambda rep: next(r.time for r in rep.trace if r.entity == "M1" and r.event == "finish")
    assert first(simulate(base, cfg)) == first(simulate(bigger, cfg))


def test_mm1_little():
    b = GraphBuilder("mm1")
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": DistSpec.exponential(0.4)}))
    b.add_node(Node("M", NodeKind.MACHINE, {"delay": DistSpec.exponential(1.0)}))
    b.add_node(Node("SINK", NodeKind.SINK))
    b.connect("SRC", Edge("B0", EdgeKind.BUFFER, params={"capacity": 10_000}), "M")
    b.connect("M", Edge("B1", EdgeKind.BUFFER, params={"capacity": 10_000}), "SINK")
    rep = simulate(b.build(), SimConfig(50_000.0, 1000.0, seed=11))
    assert little_check(rep, 0.4)["rel_err"] <= 0.05


def test_saturated_little():
    g = line_graph(3, delays=[1.0, 2.0, 1.5], arrival=0.0)
    rep = simulate(g, SimConfig(5000.0, 500.0, seed=0))
    assert little_check(rep, rep.total_throughput)["rel_err"] <= 0.01


@pytest.mark.parametrize("label", ["S3", "S8", "S12", "S16", "S21", "S27", "S31"])
def test_trace_invariants_and_determinism(label):
    g = generate(catalog_spec(label)).graph
    cfg = SimConfig(300.0, 50.0, seed=42, trace=True)
    r1, r2 = simulate(g, cfg), simulate(g, cfg)
    assert check_trace(g, r1.trace) == []
    assert trace_csv(r1.trace) == trace_csv(r2.trace)
    assert 0 <= min(r1.utilization.values(), default=0) and max(r1.utilization.values(), default=0) <= 1


def test_simulate_many_matches_single_runs():
    g = generate(catalog_spec("S9")).graph
    cfg = SimConfig(200.0, 20.0)
    many = simulate_many(g, cfg, [1, 2, 3], workers=3)
    assert [r.completed for r in many] == [simulate(g, SimConfig(200.0, 20.0, s)).completed for s in (1, 2, 3)]


@settings(max_examples=15, deadline=None)
@given(st.floats(10, 200), st.floats(1, 200), st.integers(0, 2**32))
def test_monotone_horizon(h, extra, seed):
    g = generate(catalog_spec("S13")).graph
    a = simulate(g, SimConfig(h, 0.0, seed)).completed
    b = simulate(g, SimConfig(h + extra, 0.0, seed)).completed
    assert b >= a
