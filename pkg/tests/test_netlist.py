import json

import pytest
from hypothesis import given, settings

from twinforge.bench import catalog_spec, generate, mesh_dsl, serial
from twinforge.dsl import load
from twinforge.model import GraphStats, canonical_form, stats
from twinforge.netlist import (
    IRKind,
    ParseError,
    SchemaError,
    density,
    entry_count,
    read_netlist,
    write_netlist,
)

from strategies import graphs


def test_s5_netlist(s5):
    text = write_netlist(s5)
    assert entry_count(text) == 13
    assert stats(read_netlist(text)) == GraphStats(7, 6, 12, 0)


def test_empty_doc():
    g = read_netlist('{"name":"x","nodes":[],"edges":[]}')
    assert (g.name, len(g.nodes), len(g.edges)) == ("x", 0, 0)


def test_unknown_endpoint():
    doc = {"nodes": [{"id": "A", "kind": "machine", "params": {"delay": 1}}],
           "edges": [{"id": "B", "kind": "buffer", "from": "A", "to": "GHOST", "params": {"capacity": 1}}]}
    with pytest.raises(SchemaError):
        read_netlist(json.dumps(doc))


@pytest.mark.parametrize("text", ['{"nodes": [', "[]", '{"schema": "other/2"}',
                                  '{"nodes": [{"id": "A", "kind": "robot"}]}'])
def test_bad_documents(text):
    with pytest.raises((ParseError, SchemaError)):
        read_netlist(text)


def test_reused_edge_becomes_a_defect():
    doc = {"nodes": [{"id": n, "kind": "machine", "params": {"delay": 1}} for n in "ABC"],
           "edges": [{"id": "X", "kind": "buffer", "from": "A", "to": "B", "params": {"capacity": 1}},
                     {"id": "X", "kind": "buffer", "from": "A", "to": "C", "params": {"capacity": 1}}]}
    g = read_netlist(json.dumps(doc))
    assert len(g.edges) == 1 and [d.rule for d in g.defects] == ["V-EDGE-REUSE"]


def test_serial_100_entries():
    text = generate(serial(100)).netlist_text
    assert entry_count(text) == 203 >= 201


def test_s35_entries():
    b = generate(catalog_spec("S35"))
    assert (len(b.graph.nodes), len(b.graph.edges)) == (112, 165)
    assert entry_count(b.netlist_text) == 277


def test_density_reports():
    b = generate(serial(100))
    d_dsl = density(b.dsl_text, IRKind.DSL, b.graph)
    d_net = density(b.netlist_text, IRKind.NETLIST, b.graph)
    assert d_dsl.entry_count <= 15
    assert d_dsl.expansion_ratio >= 13 * d_net.expansion_ratio
    empty = density('{"nodes": [], "edges": []}', "netlist", read_netlist('{"nodes": [], "edges": []}'))
    assert empty.expansion_ratio == 0


def test_grid_density():
    text = mesh_dsl(100)
    rep = density(text, IRKind.DSL, load(text))
    assert (rep.flat_nodes, rep.flat_edges) == (10_000, 19_800)


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_round_trip(g):
    back = read_netlist(write_netlist(g))
    assert canonical_form(back) == canonical_form(g)
