import json

import pytest

from twinforge.bench import (
    BenchFamily,
    BenchmarkSpec,
    Infeasible,
    Injection,
    InjectionSpec,
    SpecError,
    catalog,
    catalog_spec,
    generate,
    inject,
    load_suite,
    serial,
    suite_json,
)
from twinforge.diff import diff, diff_text
from twinforge.dsl import load
from twinforge.model import NodeKind, stats
from twinforge.netlist import entry_count, read_netlist
from twinforge.validate import validate


def test_catalog_labels():
    labels = [s.label for s in catalog()]
    assert labels == [f"S{i}" for i in range(1, 36)]


def test_serial_100():
    b = generate(serial(100))
    st = stats(b.graph)
    assert (st.node_count, st.edge_count) == (102, 101)
    assert entry_count(b.netlist_text) >= 201
    assert b.manifest["expected"]["nodes"] == 102


def test_grid_10x10():
    g = generate(BenchmarkSpec(BenchFamily.GRID, {"rows": 10, "cols": 10})).graph
    assert len(g.nodes) == 120
    assert sum(n.kind is NodeKind.MACHINE for n in g.nodes.values()) == 100


def test_serial_1_minimal():
    g = generate(serial(1)).graph
    assert sorted(g.nodes) == ["M1", "SINK", "SRC"] and len(g.edges) == 2
    assert validate(g) == []


def test_grid_with_absent_cells():
    g = generate(catalog_spec("S31")).graph
    assert "m_1_1" not in g.nodes and "m_3_3" not in g.nodes
    assert validate(g) == []


@pytest.mark.parametrize("spec", catalog(), ids=lambda s: s.label)
def test_manifest_counts(spec):
    b = generate(spec)
    st = stats(b.graph)
    measured = {
        "nodes": st.node_count,
        "edges": st.edge_count,
        "params": st.param_count,
        "machines": sum(n.kind is NodeKind.MACHINE for n in b.graph.nodes.values()),
        "parallel_blocks": sum(n.kind is NodeKind.SPLITTER for n in b.graph.nodes.values()),
    }
    exp = b.manifest["expected"]
    assert "nodes" in exp
    assert {k: measured[k] for k in exp} == exp


@pytest.mark.parametrize("bad", [
    lambda: serial(0),
    lambda: BenchmarkSpec("spiral", {}),
    lambda: BenchmarkSpec(BenchFamily.GRID, {"rows": 2, "cols": 2, "absent": [(5, 5)]}),
    lambda: BenchmarkSpec(BenchFamily.GRID, {"rows": 1, "cols": 2, "absent": [(0, 0), (0, 1)]}),
    lambda: BenchmarkSpec(BenchFamily.SERIAL, {"n": 3, "k": 1}),
    lambda: BenchmarkSpec(BenchFamily.HIERARCHICAL, {"depth": 9, "width": 2}),
])
def test_spec_errors(bad):
    with pytest.raises(SpecError):
        bad()


def test_suite_round_trip():
    specs = catalog()
    assert [s.to_dict() for s in load_suite(suite_json(specs))] == [s.to_dict() for s in specs]


def test_injection_determinism_and_feasibility():
    g = generate(serial(3)).graph
    spec = InjectionSpec((Injection("T3.omitted", 1), Injection("T2", 2)), seed=7)
    assert inject(g, spec).netlist_text == inject(g, spec).netlist_text
    with pytest.raises(Infeasible):
        inject(g, InjectionSpec((Injection("T3.omitted", 50),), seed=0))
    with pytest.raises(Infeasible):
        inject(g, InjectionSpec((Injection("T6.flattened", 1),), seed=0))


@pytest.mark.parametrize("items", [
    (("T7", 1), ("T2", 1)),
    (("T1.shift", 3),),
    (("T1.shift", 1), ("T3.added", 1)),
    (("T2", -1),),
    (("T9", 1),),
])
def test_injection_spec_rules(items):
    with pytest.raises(SpecError):
        InjectionSpec(items)


def test_t7_corrupts_text():
    g = generate(serial(3)).graph
    res = inject(g, InjectionSpec((Injection("T7", 1),), seed=0))
    assert res.graph is None and res.expected_counts["T7"] == 1
    rep = diff_text(g, res.netlist_text)
    assert rep.counts == {t: (1 if t.value == "T7" else 0) for t in rep.counts}


@pytest.mark.parametrize("subkind,rule", [("T8.dangling", "V-DANGLING-OUT"), ("T8.edge_reuse", "V-EDGE-REUSE")])
def test_t8_injections_trip_their_rule(subkind, rule):
    g = generate(catalog_spec("S12")).graph
    res = inject(g, InjectionSpec(((subkind, 1),), seed=3))
    cand = read_netlist(res.netlist_text)
    assert rule in {d.rule for d in validate(cand)}
    got = {t.value: c for t, c in diff(g, cand).counts.items()}
    assert got == res.expected_counts


def test_manifest_is_json():
    g = generate(catalog_spec("S20")).graph
    res = inject(g, InjectionSpec((Injection("T6.flattened", 2), Injection("T5", 1)), seed=2))
    doc = json.loads(json.dumps(res.manifest))
    assert doc["expected_total"] == sum(doc["expected_counts"].values())
    assert len(doc["mutations"]) == 3
