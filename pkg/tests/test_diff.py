from collections import Counter
from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from twinforge.bench import (
    BenchFamily,
    BenchmarkSpec,
    Infeasible,
    Injection,
    InjectionSpec,
    catalog,
    catalog_spec,
    generate,
    inject,
    random_injection,
)
from twinforge.diff import ErrorType, MatchConfig, diff, diff_text, match_nodes, report_csv, shift_id
from twinforge.model import Edge, EdgeKind, GraphBuilder, ModelGraph, Node, NodeKind, graph_from
from twinforge.netlist import write_netlist

from conftest import line_graph
from strategies import graphs
from twinforge.validate import validate


def counts(rep):
    return {t.value: c for t, c in rep.counts.items() if c}


def rename(g: ModelGraph, f) -> ModelGraph:
    nodes = [replace(n, id=f(n.id)) for n in g.nodes.values()]
    edges = [replace(e, id=f(e.id), src=f(e.src), dst=f(e.dst)) for e in g.edges.values()]
    return graph_from(g.name, nodes, edges)


def test_identity(s5):
    rep = diff(s5, s5)
    assert rep.total == 0 and len(rep.matched_nodes) == 7 and len(rep.matched_edges) == 6


def test_case_only_difference():
    truth = rename(line_graph(1), lambda i: "Machine_50_50" if i == "M1" else i)
    cand = rename(truth, lambda i: i.lower() if i.startswith("Machine") else i)
    rep = diff(truth, cand)
    assert counts(rep) == {"T1": 1} and rep.records[0].subkind == "T1.case"
    strict = diff(truth, cand, MatchConfig(normalize_case=False))
    assert [r.subkind for r in strict.records] == ["T1.rename"]


def test_systematic_off_by_one():
    truth = rename(line_graph(10), lambda i: f"m_{i[1:]}" if i.startswith("M") else i)
    cand = rename(truth, lambda i: shift_id(i, -1) if i.startswith("m_") else i)
    assert sorted(n for n in cand.nodes if n.startswith("m_")) == sorted(f"m_{k}" for k in range(10))
    rep = diff(truth, cand)
    assert counts(rep) == {"T1": 10}
    assert all(r.subkind == "T1.shift" and r.systematic for r in rep.records)
    assert rep.systematic_shift == -1
    assert len(rep.matched_nodes) == 12
    off = diff(truth, cand, MatchConfig(shift_detection=False))
    assert off.counts[ErrorType.T1] != 10 or any(r.subkind != "T1.shift" for r in off.records)


def test_removed_node_plus_spurious_edges():
    truth = line_graph(5)
    b = GraphBuilder.from_graph(truth)
    del b.nodes["M3"], b.edges["B2"], b.edges["B3"]
    b.connect("M2", Edge("X1", EdgeKind.BUFFER, params={"capacity": 1}), "M4")
    b.connect("M4", Edge("X2", EdgeKind.BUFFER, params={"capacity": 1}), "M2")
    rep = diff(truth, b.build())
    assert counts(rep) == {"T3": 1, "T4": 4}
    assert Counter(r.subkind for r in rep.records) == {"T3.omitted": 1, "T4.omitted": 2, "T4.added": 2}


def test_param_boundaries(s5):
    b = GraphBuilder.from_graph(s5)
    b.nodes["M1"] = replace(s5.nodes["M1"], params={"delay": 9.0})
    b.nodes["M2"] = replace(s5.nodes["M2"], params={"delay": 1.0, "work_capacity": 2})
    b.nodes["M3"] = replace(s5.nodes["M3"], params={"delay": None})
    rep = diff(s5, b.build())
    sub = Counter(r.subkind for r in rep.records)
    assert sub["T2.value"] == 1 and sub["T5"] == 1 and sub["T2.default"] == 1


def test_flattened_hierarchy():
    truth = generate(BenchmarkSpec(BenchFamily.HIERARCHICAL, {"depth": 2, "width": 3})).graph
    scoped = [n for n in truth.nodes.values() if n.scope]
    assert len(scoped) == 18
    flat = graph_from(truth.name, [replace(n, scope=()) for n in truth.nodes.values()], truth.edges.values())
    rep = diff(truth, flat)
    assert counts(rep) == {"T6": 18}
    assert {r.subkind for r in rep.records} == {"T6.flattened"}
    res = inject(truth, InjectionSpec((Injection("T6.flattened", 18),), seed=0))
    assert res.expected_counts["T6"] == 18 and counts(diff(truth, res.graph)) == {"T6": 18}


def test_misplaced_scope():
    truth = generate(catalog_spec("S19")).graph
    nid = next(n for n in truth.nodes.values() if n.scope)
    other = next(s for s in truth.scopes if s and s != nid.scope)
    b = GraphBuilder.from_graph(truth)
    b.nodes[nid.id] = replace(nid, scope=other)
    assert [r.subkind for r in diff(truth, b.build()).records] == ["T6.misplaced"]


@pytest.mark.parametrize("k", [1, 3, 5])
def test_added_isolated_nodes(k):
    truth = line_graph(4)
    b = GraphBuilder.from_graph(truth)
    for i in range(k):
        b.add_node(Node(f"ghost{i}", NodeKind.MACHINE, {"delay": 1.0}))
    rep = diff(truth, b.build())
    assert counts(rep) == {"T3": k, "T8": k}


@pytest.mark.parametrize("label", ["S8", "S22", "S33"])
def test_removed_leaf_machines(label):
    truth = generate(catalog_spec(label)).graph
    machines = sorted(n for n, v in truth.nodes.items() if v.kind is NodeKind.MACHINE)[:3]
    incident = {e.id for e in truth.edges.values() if e.src in machines or e.dst in machines}
    b = GraphBuilder.from_graph(truth)
    for m in machines:
        del b.nodes[m]
    for e in incident:
        del b.edges[e]
    rep = diff(truth, b.build())
    assert rep.counts[ErrorType.T3] == 3 and rep.counts[ErrorType.T4] == len(incident)


def test_s35_hallucination_scenario():
    truth = generate(catalog_spec("S35")).graph
    spec = InjectionSpec((Injection("T3.added", 10), Injection("T4.added", 7)), seed=1)
    res = inject(truth, spec)
    rep = diff(truth, res.graph)
    assert rep.counts[ErrorType.T3] == 10 and rep.counts[ErrorType.T4] == 7
    assert counts(rep) == {k: v for k, v in res.expected_counts.items() if v}


def test_case_injection_on_serial5():
    truth = generate(catalog_spec("S5")).graph
    res = inject(truth, InjectionSpec((Injection("T1.case", 1),), seed=4))
    assert res.expected_counts["T1"] == 1 and counts(diff(truth, res.graph)) == {"T1": 1}


def test_syntax_failure_is_single_t7(s5):
    text = write_netlist(s5)[:-3]
    rep = diff_text(s5, text)
    assert counts(rep) == {"T7": 1} and len(rep.records) == 1
    assert counts(diff_text(s5, "machine M1 { delay = }", "dsl")) == {"T7": 1}


def test_csv_layout(s5):
    reps = [diff(s5, s5), diff(s5, s5)]
    lines = report_csv(reps, ["a", "b"]).splitlines()
    assert lines[0] == "label,mode,T1,T2,T3,T4,T5,T6,T7,T8,total"
    assert lines[1:] == ["a,Detailed,0,0,0,0,0,0,0,0,0", "b,Detailed,0,0,0,0,0,0,0,0,0"]


def test_match_nodes_is_partial_bijection():
    truth = generate(catalog_spec("S27")).graph
    res = inject(truth, InjectionSpec((Injection("T3.omitted", 2), Injection("T3.added", 2)), seed=9))
    corr = match_nodes(truth, res.graph)
    assert len(set(corr.nodes.values())) == len(corr.nodes)


GRAPHS = {s.label: generate(s).graph for s in catalog() if s.label in ("S4", "S9", "S13", "S17", "S20", "S26", "S31")}


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(sorted(GRAPHS)), st.integers(0, 10_000))
def test_scale_robustness(label, seed):
    truth = GRAPHS[label]
    try:
        res = inject(truth, random_injection(truth, seed))
    except Infeasible:
        return
    if res.graph is None or any(d.rule == "V-EDGE-REUSE" for d in res.graph.defects):
        return
    f = lambda i: "plant_" + i
    assert counts(diff(truth, res.graph)) == counts(diff(rename(truth, f), rename(res.graph, f)))


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_identity_on_arbitrary_graphs(g):
    rep = diff(g, g)
    errors = sum(d.severity.value == "error" for d in validate(g))
    assert {t: c for t, c in rep.counts.items() if t is not ErrorType.T8 and c} == {}
    assert rep.counts[ErrorType.T8] == errors
