import random

import pytest

from twinforge.model import (
    DistSpec,
    DuplicateId,
    Edge,
    EdgeKind,
    EdgeReuse,
    GraphStats,
    ModelGraph,
    Node,
    NodeKind,
    UnknownEndpoint,
    add_node,
    canonical_form,
    connect,
    graph_from,
    stats,
)
from twinforge.netlist import write_netlist

from conftest import line_graph


def two_nodes():
    g = add_node(ModelGraph(), Node("SRC", NodeKind.SOURCE, {"inter_arrival": 1.0}))
    return add_node(g, Node("M1", NodeKind.MACHINE, {"delay": 1.0}))


def test_add_node_singleton():
    g = add_node(ModelGraph(), Node("M1", NodeKind.MACHINE, {"delay": 2.0}))
    assert (len(g.nodes), len(g.edges)) == (1, 0)


def test_add_node_duplicate():
    g = add_node(ModelGraph(), Node("M1", NodeKind.MACHINE))
    with pytest.raises(DuplicateId):
        add_node(g, Node("M1", NodeKind.MACHINE))


def test_edge_kind_is_not_a_node_kind():
    with pytest.raises((TypeError, ValueError)):
        Node("B1", EdgeKind.BUFFER)
    with pytest.raises(TypeError):
        add_node(ModelGraph(), Edge("B1", EdgeKind.BUFFER))


def test_connect_basic():
    g = connect(two_nodes(), "SRC", Edge("B1", EdgeKind.BUFFER, params={"capacity": 1}), "M1")
    assert (len(g.nodes), len(g.edges)) == (2, 1)
    assert (g.edges["B1"].src, g.edges["B1"].dst) == ("SRC", "M1")


def test_connect_reuse_and_unknown():
    g = add_node(two_nodes(), Node("M2", NodeKind.MACHINE, {"delay": 1.0}))
    edge = Edge("B1", EdgeKind.BUFFER, params={"capacity": 1})
    g = connect(g, "SRC", edge, "M1")
    with pytest.raises(EdgeReuse):
        connect(g, "SRC", edge, "M2")
    with pytest.raises(UnknownEndpoint):
        connect(two_nodes(), "SRC", edge, "GHOST")


def test_graph_is_unchanged_by_failed_ops():
    g = two_nodes()
    with pytest.raises(UnknownEndpoint):
        connect(g, "SRC", Edge("B1", EdgeKind.BUFFER), "GHOST")
    assert g.edges == {}


def test_stats_examples(s5):
    assert stats(s5) == GraphStats(7, 6, 12, 0)
    assert stats(ModelGraph()) == GraphStats(0, 0, 0, 0)


def test_canonical_form_order_independent_and_idempotent(s5):
    nodes = list(s5.nodes.values())
    edges = list(s5.edges.values())
    rng = random.Random(3)
    for _ in range(5):
        rng.shuffle(nodes)
        rng.shuffle(edges)
        g = graph_from("S5", nodes, edges)
        assert write_netlist(canonical_form(g)) == write_netlist(canonical_form(s5))
    c = canonical_form(s5)
    assert canonical_form(c) == c
    assert stats(c) == stats(s5)


def test_names_are_semantic():
    a = line_graph(2, "x")
    b = graph_from("x", [Node("P" + n.id, n.kind, n.params) for n in a.nodes.values()],
                   [Edge(e.id, e.kind, "P" + e.src, "P" + e.dst, e.params) for e in a.edges.values()])
    assert write_netlist(canonical_form(a)) != write_netlist(canonical_form(b))


@pytest.mark.parametrize("bad", [
    lambda: DistSpec.exponential(0),
    lambda: DistSpec.normal(1, -1),
    lambda: DistSpec.uniform(3, 2),
    lambda: DistSpec.gamma(0, 1),
    lambda: DistSpec.deterministic(float("nan")),
])
def test_distspec_invariants(bad):
    with pytest.raises(ValueError):
        bad()
