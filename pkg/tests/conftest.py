from pathlib import Path

import pytest

from twinforge.model import DistSpec, Edge, EdgeKind, GraphBuilder, Node, NodeKind

FIXTURES = Path(__file__).parent / "fixtures"
REPLAY = FIXTURES / "replay"


def line_graph(n: int = 5, name: str = "line", delays=None, cap: int = 10, arrival=None):
    """SRC -> M1..Mn -> SINK with one buffer between neighbours."""
    b = GraphBuilder(name)
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": DistSpec.exponential(0.5) if arrival is None else arrival}))
    chain = ["SRC"]
    for i in range(1, n + 1):
        d = 1.0 if delays is None else delays[i - 1]
        b.add_node(Node(f"M{i}", NodeKind.MACHINE, {"delay": d}))
        chain.append(f"M{i}")
    b.add_node(Node("SINK", NodeKind.SINK))
    chain.append("SINK")
    for i, (u, v) in enumerate(zip(chain, chain[1:])):
        b.connect(u, Edge(f"B{i}", EdgeKind.BUFFER, params={"capacity": cap}), v)
    return b.build()


@pytest.fixture
def s5():
    return line_graph(5, "S5")


# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
