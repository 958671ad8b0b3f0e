"""Hypothesis strategies for arbitrary (not necessarily valid) model graphs."""

from hypothesis import strategies as st

from twinforge.model import DistSpec, Edge, EdgeKind, GraphBuilder, Node, NodeKind

ident = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,6}", fullmatch=True)
positive = st.floats(0.05, 50, allow_nan=False)

dists = st.one_of(
    positive.map(DistSpec.deterministic),
    positive.map(DistSpec.exponential),
    st.tuples(positive, positive).map(lambda p: DistSpec.normal(*p)),
    st.tuples(positive, positive).map(lambda p: DistSpec.uniform(min(p), max(p))),
    st.tuples(positive, positive).map(lambda p: DistSpec.gamma(*p)),
)
scopes = st.lists(st.sampled_from(["Cell_0", "Cell_1", "Area"]), max_size=2).map(tuple)


@st.composite
def graphs(draw, max_nodes=12):
    ids = draw(st.lists(ident, min_size=0, max_size=max_nodes, unique=True))
    b = GraphBuilder(draw(ident))
    for nid in ids:
        kind = draw(st.sampled_from(list(NodeKind)))
        params = {}
        if kind is NodeKind.MACHINE:
            params["delay"] = draw(st.one_of(positive, dists))
        elif kind is NodeKind.SOURCE:
            params["inter_arrival"] = draw(dists)
        elif kind in (NodeKind.SPLITTER, NodeKind.MERGER):
            params["policy"] = draw(st.sampled_from(["RoundRobin", "FirstAvailable"]))
        b.add_node(Node(nid, kind, params, draw(scopes)))
    if ids:
        for k in range(draw(st.integers(0, 2 * len(ids)))):
            kind = draw(st.sampled_from(list(EdgeKind)))
            params = {"capacity": draw(st.integers(1, 20))}
            if kind is EdgeKind.CONVEYOR:
                params["transit_delay"] = draw(positive)
            b.connect(draw(st.sampled_from(ids)), Edge(f"e{k}", kind, params=params), draw(st.sampled_from(ids)))
    return b.build()
