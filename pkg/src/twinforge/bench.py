"""Benchmark model families and the error-injection oracle.

Every generated benchmark comes in three forms that must agree: a graph built
directly in Python, a ``.fdl`` program and a netlist. Injection mutates a
ground-truth graph in controlled ways and predicts, without running the
classifier, exactly which error records a correct diff must report.
"""

from __future__ import annotations

import json
import random
import re
import string
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

from .diff import shift_id
from .dsl import DIST_NAMES, KEYWORDS
from .model import (
    ROOT,
    DistSpec,
    Edge,
    EdgeKind,
    Family,
    GraphBuilder,
    ModelGraph,
    Node,
    NodeKind,
    RoutingPolicy,
    stats,
)
from .netlist import netlist_doc, write_netlist


class SpecError(ValueError):
    pass


class Infeasible(ValueError):
    pass


class BenchFamily(str, Enum):
    SERIAL = "serial"
    PARALLEL = "parallel"
    FEEDBACK = "feedback"
    MULTI_EDGE_ROUTING = "multi_edge_routing"
    GRID = "grid"
    HIERARCHICAL = "hierarchical"
    IRREGULAR = "irregular"


# family -> (parameter name, default, minimum); None default means required
_FAMILY_PARAMS: dict[BenchFamily, tuple[tuple[str, Any, int], ...]] = {
    BenchFamily.SERIAL: (("n", None, 1),),
    BenchFamily.PARALLEL: (("k", None, 2), ("n", None, 1)),
    BenchFamily.FEEDBACK: (("n", None, 1),),
    BenchFamily.MULTI_EDGE_ROUTING: (("k", None, 2),),
    BenchFamily.GRID: (("rows", None, 1), ("cols", None, 1), ("absent", (), 0), ("down_cols", None, 0)),
    BenchFamily.HIERARCHICAL: (("depth", None, 1), ("width", None, 1)),
    BenchFamily.IRREGULAR: (("seed", None, 0), ("size", None, 1)),
}

_LEVEL_NAMES = ("Cell", "Stage", "Area", "Plant")

ARRIVAL = DistSpec.exponential(0.5)


@dataclass(frozen=True)
class BenchmarkSpec:
    family: BenchFamily
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        try:
            fam = BenchFamily(self.family)
        except ValueError:
            raise SpecError(f"unknown benchmark family {self.family!r}") from None
        object.__setattr__(self, "family", fam)
        known = {name for name, _, _ in _FAMILY_PARAMS[fam]}
        extra = set(self.params) - known
        if extra:
            raise SpecError(f"{fam.value} does not take {sorted(extra)}")
        full = {}
        for name, default, low in _FAMILY_PARAMS[fam]:
            v = self.params.get(name, default)
            if name in ("absent", "down_cols"):
                full[name] = None if v is None else tuple(tuple(c) if isinstance(c, (list, tuple)) else c for c in v)
                continue
            if v is None:
                raise SpecError(f"{fam.value} requires parameter {name!r}")
            if not isinstance(v, int) or isinstance(v, bool) or v < low:
                raise SpecError(f"{fam.value}.{name} must be an integer >= {low}, got {v!r}")
            full[name] = v
        if fam is BenchFamily.HIERARCHICAL and full["depth"] > len(_LEVEL_NAMES):
            raise SpecError(f"hierarchy depth is limited to {len(_LEVEL_NAMES)}")
        if fam is BenchFamily.GRID:
            r, c = full["rows"], full["cols"]
            for cell in full["absent"]:
                if len(cell) != 2 or not (0 <= cell[0] < r and 0 <= cell[1] < c):
                    raise SpecError(f"absent cell {cell!r} outside the {r}x{c} grid")
            missing = Counter(i for i, _ in set(full["absent"]))
            if any(missing[i] == c for i in range(r)):
                raise SpecError("a grid row cannot be entirely absent")
            if full["down_cols"] is not None and any(not 0 <= j < c for j in full["down_cols"]):
                raise SpecError("down_cols outside the grid")
        object.__setattr__(self, "params", full)
        if not self.label:
            object.__setattr__(self, "label", f"{fam.value}({', '.join(f'{k}={v}' for k, v in full.items())})")

    def to_dict(self) -> dict:
        params = {k: (list(map(list, v)) if k == "absent" else list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        return {"label": self.label, "family": self.family.value, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkSpec":
        return cls(d["family"], dict(d.get("params", {})), d.get("label", ""))


def serial(n: int, label: str = "") -> BenchmarkSpec:
    return BenchmarkSpec(BenchFamily.SERIAL, {"n": n}, label)


def suite_json(specs: list[BenchmarkSpec]) -> str:
    return json.dumps({"benchmarks": [s.to_dict() for s in specs]}, indent=2)


def load_suite(text: str) -> list[BenchmarkSpec]:
    doc = json.loads(text)
    items = doc["benchmarks"] if isinstance(doc, dict) else doc
    return [BenchmarkSpec.from_dict(d) for d in items]


@dataclass
class Benchmark:
    spec: BenchmarkSpec
    graph: ModelGraph
    dsl_text: str
    netlist_text: str
    manifest: dict


# ---------------------------------------------------------------- DSL emission

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_KW_NODE = {
    NodeKind.SOURCE: "source",
    NodeKind.SINK: "sink",
    NodeKind.MACHINE: "machine",
    NodeKind.SPLITTER: "split",
    NodeKind.MERGER: "merge",
}


def _name(text: str) -> str:
    if _IDENT.match(text) and text not in KEYWORDS and text not in DIST_NAMES:
        return text
    return json.dumps(text)


def _value(v) -> str:
    if isinstance(v, DistSpec):
        return f"{v.family.value}({', '.join(repr(p) for p in v.params)})"
    if isinstance(v, str):
        return v
    return repr(v)


def _params(params: dict) -> str:
    items = [f"{k} = {_value(v)}" for k, v in params.items() if v is not None]
    return " { " + ", ".join(items) + " }" if items else ""


def flat_dsl(graph: ModelGraph) -> str:
    """Enumerate a root-scoped graph as a flat ``.fdl`` program."""
    if any(n.scope for n in graph.nodes.values()):
        raise SpecError("flat_dsl cannot express subsystem scopes")
    lines = [f"{_KW_NODE[n.kind]} {_name(n.id)}{_params(n.params)}" for n in graph.nodes.values()]
    for e in graph.edges.values():
        lines.append(f"connect {_name(e.src)} -> {_name(e.dst)} via {e.kind.value} {_name(e.id)}{_params(e.params)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- families


def _gen_serial(p, b: GraphBuilder):
    n = p["n"]
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
    for i in range(1, n + 1):
        b.add_node(Node(f"M{i}", NodeKind.MACHINE, {"delay": 1.0}))
    b.add_node(Node("SINK", NodeKind.SINK))
    chain = ["SRC"] + [f"M{i}" for i in range(1, n + 1)] + ["SINK"]
    for i, (u, v) in enumerate(zip(chain, chain[1:])):
        b.connect(u, Edge(f"B{i}", EdgeKind.BUFFER, params={"capacity": 5}), v)
    dsl = f"""\
# {n} machines in series
source SRC {{ inter_arrival = exp(0.5) }}
sink SINK
for i in 1..{n + 1} {{ machine "M{{i}}" {{ delay = 1.0 }} }}
for i in 0..{n + 1} {{ buffer "B{{i}}" {{ capacity = 5 }} }}
connect SRC -> M1 via B0
for i in 1..{n} {{ connect "M{{i}}" -> "M{{i + 1}}" via "B{{i}}" }}
connect M{n} -> SINK via B{n}
"""
    return dsl, {"nodes": n + 2, "edges": n + 1, "params": 2 * n + 2}


def _gen_parallel(p, b: GraphBuilder):
    k, n = p["k"], p["n"]
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
    b.add_node(Node("SPLIT", NodeKind.SPLITTER, {"policy": "RoundRobin"}))
    b.add_node(Node("MERGE", NodeKind.MERGER, {"policy": "RoundRobin"}))
    b.add_node(Node("SINK", NodeKind.SINK))
    buf = {"capacity": 2}
    b.connect("SRC", Edge("B_src", EdgeKind.BUFFER, params={"capacity": 5}), "SPLIT")
    b.connect("MERGE", Edge("B_snk", EdgeKind.BUFFER, params={"capacity": 5}), "SINK")
    for j in range(1, k + 1):
        for i in range(1, n + 1):
            b.add_node(Node(f"L{j}_M{i}", NodeKind.MACHINE, {"delay": 2.0}))
        chain = ["SPLIT"] + [f"L{j}_M{i}" for i in range(1, n + 1)] + ["MERGE"]
        for i, (u, v) in enumerate(zip(chain, chain[1:])):
            b.connect(u, Edge(f"L{j}_B{i}", EdgeKind.BUFFER, params=dict(buf)), v)
    dsl = f"""\
# {k} parallel lines of {n} machines between a splitter and a merger
source SRC {{ inter_arrival = exp(0.5) }}
split SPLIT {{ policy = RoundRobin }}
merge MERGE {{ policy = RoundRobin }}
sink SINK
connect SRC -> SPLIT via buffer B_src {{ capacity = 5 }}
connect MERGE -> SINK via buffer B_snk {{ capacity = 5 }}
for j in 1..{k + 1} {{
  for i in 1..{n + 1} {{ machine "L{{j}}_M{{i}}" {{ delay = 2.0 }} }}
  connect SPLIT -> "L{{j}}_M1" via buffer "L{{j}}_B0" {{ capacity = 2 }}
  for i in 1..{n} {{ connect "L{{j}}_M{{i}}" -> "L{{j}}_M{{i + 1}}" via buffer "L{{j}}_B{{i}}" {{ capacity = 2 }} }}
  connect "L{{j}}_M{n}" -> MERGE via buffer "L{{j}}_B{n}" {{ capacity = 2 }}
}}
"""
    return dsl, {"nodes": k * n + 4, "edges": k * (n + 1) + 2, "params": k * n + k * (n + 1) + 5}


def _gen_feedback(p, b: GraphBuilder):
    n = p["n"]
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
    b.add_node(Node("MERGE", NodeKind.MERGER, {"policy": "FirstAvailable"}))
    for i in range(1, n + 1):
        b.add_node(Node(f"M{i}", NodeKind.MACHINE, {"delay": 0.5}))
    b.add_node(Node("SPLIT", NodeKind.SPLITTER, {"policy": "RoundRobin"}))
    b.add_node(Node("SINK", NodeKind.SINK))
    cap = {"capacity": 4}
    b.connect("SRC", Edge("B_in", EdgeKind.BUFFER, params=dict(cap)), "MERGE")
    chain = ["MERGE"] + [f"M{i}" for i in range(1, n + 1)] + ["SPLIT"]
    for i, (u, v) in enumerate(zip(chain, chain[1:])):
        b.connect(u, Edge(f"B{i}", EdgeKind.BUFFER, params=dict(cap)), v)
    b.connect("SPLIT", Edge("B_out", EdgeKind.BUFFER, params=dict(cap)), "SINK")
    b.connect("SPLIT", Edge("B_fb", EdgeKind.BUFFER, params=dict(cap)), "MERGE")
    dsl = f"""\
# rework loop: half of the output returns to the head of the line
source SRC {{ inter_arrival = exp(0.5) }}
merge MERGE {{ policy = FirstAvailable }}
split SPLIT {{ policy = RoundRobin }}
sink SINK
for i in 1..{n + 1} {{ machine "M{{i}}" {{ delay = 0.5 }} }}
connect SRC -> MERGE via buffer B_in {{ capacity = 4 }}
connect MERGE -> M1 via buffer B0 {{ capacity = 4 }}
for i in 1..{n} {{ connect "M{{i}}" -> "M{{i + 1}}" via buffer "B{{i}}" {{ capacity = 4 }} }}
connect M{n} -> SPLIT via buffer B{n} {{ capacity = 4 }}
connect SPLIT -> SINK via buffer B_out {{ capacity = 4 }}
connect SPLIT -> MERGE via buffer B_fb {{ capacity = 4 }}
"""
    return dsl, {"nodes": n + 4, "edges": n + 4, "params": 2 * n + 7}


def _gen_multi_edge(p, b: GraphBuilder):
    k = p["k"]
    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
    b.add_node(Node("SPLIT", NodeKind.SPLITTER, {"policy": "FirstAvailable"}))
    b.add_node(Node("MERGE", NodeKind.MERGER, {"policy": "FirstAvailable"}))
    b.add_node(Node("SINK", NodeKind.SINK))
    b.connect("SRC", Edge("B_src", EdgeKind.BUFFER, params={"capacity": 5}), "SPLIT")
    b.connect("MERGE", Edge("B_snk", EdgeKind.BUFFER, params={"capacity": 5}), "SINK")
    for i in range(1, k + 1):
        b.add_node(Node(f"M{i}", NodeKind.MACHINE, {"delay": DistSpec.uniform(1.0, 3.0)}))
        b.connect("SPLIT", Edge(f"C{i}", EdgeKind.CONVEYOR, params={"capacity": 3, "transit_delay": 0.5}), f"M{i}")
        b.connect(f"M{i}", Edge(f"B{i}", EdgeKind.BUFFER, params={"capacity": 2}), "MERGE")
    dsl = f"""\
# first-available routing over {k} conveyor-fed stations
source SRC {{ inter_arrival = exp(0.5) }}
split SPLIT {{ policy = FirstAvailable }}
merge MERGE {{ policy = FirstAvailable }}
sink SINK
connect SRC -> SPLIT via buffer B_src {{ capacity = 5 }}
connect MERGE -> SINK via buffer B_snk {{ capacity = 5 }}
for i in 1..{k + 1} {{
  machine "M{{i}}" {{ delay = uniform(1.0, 3.0) }}
  connect SPLIT -> "M{{i}}" via conveyor "C{{i}}" {{ capacity = 3, transit_delay = 0.5 }}
  connect "M{{i}}" -> MERGE via buffer "B{{i}}" {{ capacity = 2 }}
}}
"""
    return dsl, {"nodes": k + 4, "edges": 2 * k + 2, "params": 4 * k + 5}


def _runs(values: list[int]) -> list[tuple[int, int]]:
    """Contiguous half-open runs of a sorted integer list."""
    runs: list[list[int]] = []
    for v in values:
        if runs and runs[-1][1] == v:
            runs[-1][1] = v + 1
        else:
            runs.append([v, v + 1])
    return [(a, z) for a, z in runs]


def _gen_grid(p, b: GraphBuilder):
    R, C = p["rows"], p["cols"]
    absent = set(p["absent"])
    down = sorted(set(range(C) if p["down_cols"] is None else p["down_cols"]))
    buf = {"capacity": 2}
    present = lambda i, j: (i, j) not in absent  # noqa: E731
    n_edges = 0
    for i in range(R):
        b.add_node(Node(f"SRC_{i}", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
        b.add_node(Node(f"SINK_{i}", NodeKind.SINK))
        cols = [j for j in range(C) if present(i, j)]
        for j in cols:
            b.add_node(Node(f"m_{i}_{j}", NodeKind.MACHINE, {"delay": 1.0}))
        b.connect(f"SRC_{i}", Edge(f"s_{i}", EdgeKind.BUFFER, params=dict(buf)), f"m_{i}_{cols[0]}")
        for j, nxt in zip(cols, cols[1:]):
            b.connect(f"m_{i}_{j}", Edge(f"r_{i}_{j}", EdgeKind.BUFFER, params=dict(buf)), f"m_{i}_{nxt}")
        b.connect(f"m_{i}_{cols[-1]}", Edge(f"k_{i}", EdgeKind.BUFFER, params=dict(buf)), f"SINK_{i}")
        n_edges += len(cols) + 1
    for i in range(R - 1):
        for j in down:
            if present(i, j) and present(i + 1, j):
                b.connect(f"m_{i}_{j}", Edge(f"d_{i}_{j}", EdgeKind.BUFFER, params=dict(buf)), f"m_{i + 1}_{j}")
                n_edges += 1
    n_machines = R * C - len(absent)
    expect = {"nodes": n_machines + 2 * R, "edges": n_edges, "params": n_machines + R + n_edges}
    if absent:
        return None, expect
    down_loops = "\n".join(
        f'for i in 0..{R - 1} {{ for j in {a}..{z} {{ connect "m_{{i}}_{{j}}" -> "m_{{i + 1}}_{{j}}" '
        f'via buffer "d_{{i}}_{{j}}" {{ capacity = 2 }} }} }}'
        for a, z in _runs(down)
    )
    dsl = f"""\
# {R}x{C} machine grid, one source and one sink per row
for i in 0..{R} {{
  source "SRC_{{i}}" {{ inter_arrival = exp(0.5) }}
  sink "SINK_{{i}}"
  for j in 0..{C} {{ machine "m_{{i}}_{{j}}" {{ delay = 1.0 }} }}
  connect "SRC_{{i}}" -> "m_{{i}}_0" via buffer "s_{{i}}" {{ capacity = 2 }}
  for j in 0..{C - 1} {{ connect "m_{{i}}_{{j}}" -> "m_{{i}}_{{j + 1}}" via buffer "r_{{i}}_{{j}}" {{ capacity = 2 }} }}
  connect "m_{{i}}_{C - 1}" -> "SINK_{{i}}" via buffer "k_{{i}}" {{ capacity = 2 }}
}}
{down_loops}
"""
    return dsl, expect


def _gen_hierarchical(p, b: GraphBuilder):
    depth, w = p["depth"], p["width"]
    buf = {"capacity": 2}

    def build(scope: tuple, level: int) -> tuple[str, str]:
        def full(rel):
            return "/".join(scope + (rel,))

        if level == 0:
            b.add_node(Node(full("M1"), NodeKind.MACHINE, {"delay": 1.0}, scope))
            b.add_node(Node(full("M2"), NodeKind.MACHINE, {"delay": 1.0}, scope))
            b.connect(full("M1"), Edge(full("B"), EdgeKind.BUFFER, params=dict(buf)), full("M2"))
            return full("M1"), full("M2")
        ends = [build(scope + (f"{_LEVEL_NAMES[level - 1]}_{k}",), level - 1) for k in range(w)]
        b.add_scope(scope)
        for k in range(w - 1):
            b.connect(ends[k][1], Edge(full(f"L{k}"), EdgeKind.BUFFER, params=dict(buf)), ends[k + 1][0])
        return ends[0][0], ends[-1][1]

    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
    b.add_node(Node("SINK", NodeKind.SINK))
    head, tail = build((), depth)
    b.connect("SRC", Edge("B_in", EdgeKind.BUFFER, params=dict(buf)), head)
    b.connect(tail, Edge("B_out", EdgeKind.BUFFER, params=dict(buf)), "SINK")

    defs = [
        """\
subsystem Cell() {
  machine M1 { delay = 1.0 }
  machine M2 { delay = 1.0 }
  connect M1 -> M2 via buffer B { capacity = 2 }
  expose in M1
  expose out M2
}"""
    ]

    def body(child: str, indent: str) -> str:
        return (
            f'{indent}for k in 0..{w} {{ inst "{child}_{{k}}" = {child}() }}\n'
            f'{indent}for k in 0..{w - 1} {{ connect "{child}_{{k}}.out" -> "{child}_{{k + 1}}.in" '
            f'via buffer "L{{k}}" {{ capacity = 2 }} }}\n'
        )

    for level in range(2, depth + 1):
        child = _LEVEL_NAMES[level - 2]
        defs.append(
            f"subsystem {_LEVEL_NAMES[level - 1]}() {{\n{body(child, '  ')}"
            f"  expose in {child}_0.in\n  expose out {child}_{w - 1}.out\n}}"
        )
    top = _LEVEL_NAMES[depth - 1]
    dsl = (
        f"# {depth} levels of nesting, {w} instances per level\n"
        + "\n".join(defs)
        + "\nsource SRC { inter_arrival = exp(0.5) }\nsink SINK\n"
        + body(top, "")
        + f"connect SRC -> {top}_0.in via buffer B_in {{ capacity = 2 }}\n"
        + f"connect {top}_{w - 1}.out -> SINK via buffer B_out {{ capacity = 2 }}\n"
    )
    cells = w**depth
    links = sum(w**lvl * (w - 1) for lvl in range(depth))  # inter-instance links at every level
    edges = cells + links + 2
    return dsl, {"nodes": 2 * cells + 2, "edges": edges, "params": 2 * cells + 1 + edges}


_DELAYS = (
    lambda r: round(r.uniform(0.5, 3.0), 2),
    lambda r: DistSpec.exponential(round(r.uniform(0.5, 2.0), 2)),
    lambda r: DistSpec.uniform(round(r.uniform(0.1, 1.0), 2), round(r.uniform(1.5, 3.0), 2)),
    lambda r: DistSpec.gamma(round(r.uniform(1.5, 4.0), 2), round(r.uniform(0.2, 0.8), 2)),
    lambda r: DistSpec.lognormal(round(r.uniform(-0.5, 0.5), 2), round(r.uniform(0.1, 0.5), 2)),
    lambda r: DistSpec.normal(round(r.uniform(2.0, 3.0), 2), round(r.uniform(0.1, 0.4), 2)),
)


def _gen_irregular(p, b: GraphBuilder):
    rng = random.Random(p["seed"])
    counter = Counter()
    policies = [pol.value for pol in RoutingPolicy]

    def new(prefix: str) -> str:
        counter[prefix] += 1
        return f"{prefix}{counter[prefix]}"

    def link(u: str, v: str):
        if rng.random() < 0.2:
            e = Edge(new("E"), EdgeKind.CONVEYOR, params={"capacity": rng.randint(1, 4), "transit_delay": round(rng.uniform(0.1, 1.0), 2)})
        else:
            e = Edge(new("E"), EdgeKind.BUFFER, params={"capacity": rng.randint(1, 5)})
        b.connect(u, e, v)

    def series(budget: int) -> tuple[str, str]:
        parts = []
        while budget > 0:
            if budget >= 2 and rng.random() < 0.35:
                take = rng.randint(2, min(budget, 6))
                parts.append(parallel(take))
            else:
                take = 1
                m = new("M")
                b.add_node(Node(m, NodeKind.MACHINE, {"delay": rng.choice(_DELAYS)(rng)}))
                parts.append((m, m))
            budget -= take
        for (_, t), (h, _) in zip(parts, parts[1:]):
            link(t, h)
        return parts[0][0], parts[-1][1]

    def parallel(budget: int) -> tuple[str, str]:
        branches = rng.randint(2, min(3, budget))
        cuts = sorted(rng.sample(range(1, budget), branches - 1))
        sizes = [z - a for a, z in zip([0] + cuts, cuts + [budget])]
        s, j = new("S"), new("J")
        b.add_node(Node(s, NodeKind.SPLITTER, {"policy": rng.choice(policies)}))
        b.add_node(Node(j, NodeKind.MERGER, {"policy": rng.choice(policies)}))
        for size in sizes:
            h, t = series(size)
            link(s, h)
            link(t, j)
        return s, j

    b.add_node(Node("SRC", NodeKind.SOURCE, {"inter_arrival": ARRIVAL}))
    b.add_node(Node("SINK", NodeKind.SINK))
    h, t = series(p["size"])
    link("SRC", h)
    link(t, "SINK")
    blocks = counter["S"]
    n_nodes = p["size"] + 2 + 2 * blocks
    return None, {"nodes": n_nodes, "machines": p["size"], "parallel_blocks": blocks}


_GENERATORS = {
    BenchFamily.SERIAL: _gen_serial,
    BenchFamily.PARALLEL: _gen_parallel,
    BenchFamily.FEEDBACK: _gen_feedback,
    BenchFamily.MULTI_EDGE_ROUTING: _gen_multi_edge,
    BenchFamily.GRID: _gen_grid,
    BenchFamily.HIERARCHICAL: _gen_hierarchical,
    BenchFamily.IRREGULAR: _gen_irregular,
}


def generate(spec: BenchmarkSpec) -> Benchmark:
    name = spec.label or spec.family.value
    b = GraphBuilder(name)
    dsl, expected = _GENERATORS[spec.family](spec.params, b)
    graph = b.build()
    if dsl is None:
        dsl = flat_dsl(graph)
    netlist = write_netlist(graph)
    st = stats(graph)
    manifest = {
        "label": spec.label,
        "spec": spec.to_dict(),
        "expected": expected,
        "stats": {
            "nodes": st.node_count,
            "edges": st.edge_count,
            "params": st.param_count,
            "max_scope_depth": st.max_scope_depth,
        },
        "netlist_entries": st.node_count + st.edge_count,
    }
    return Benchmark(spec, graph, dsl, netlist, manifest)


# S-style labels for the 35-model catalog; every entry stays at or below 200 nodes
_CATALOG: list[tuple[str, BenchFamily, dict]] = (
    [(f"S{n}", BenchFamily.SERIAL, {"n": n}) for n in range(1, 6)]
    + [
        ("S6", BenchFamily.PARALLEL, {"k": 2, "n": 1}),
        ("S7", BenchFamily.PARALLEL, {"k": 2, "n": 2}),
        ("S8", BenchFamily.PARALLEL, {"k": 3, "n": 2}),
        ("S9", BenchFamily.PARALLEL, {"k": 2, "n": 3}),
        ("S10", BenchFamily.PARALLEL, {"k": 4, "n": 2}),
    ]
    + [(f"S{10 + n}", BenchFamily.FEEDBACK, {"n": n}) for n in range(1, 5)]
    + [(f"S{13 + k}", BenchFamily.MULTI_EDGE_ROUTING, {"k": k}) for k in range(2, 6)]
    + [
        ("S19", BenchFamily.HIERARCHICAL, {"depth": 1, "width": 2}),
        ("S20", BenchFamily.HIERARCHICAL, {"depth": 1, "width": 3}),
        ("S21", BenchFamily.HIERARCHICAL, {"depth": 2, "width": 2}),
        ("S22", BenchFamily.HIERARCHICAL, {"depth": 2, "width": 3}),
        ("S23", BenchFamily.HIERARCHICAL, {"depth": 3, "width": 2}),
        ("S24", BenchFamily.GRID, {"rows": 10, "cols": 10}),
    ]
    + [(f"S{n}", BenchFamily.IRREGULAR, {"seed": n, "size": 2 * n - 44}) for n in range(25, 31)]
    + [
        ("S31", BenchFamily.GRID, {"rows": 5, "cols": 5, "absent": [(1, 1), (3, 3)]}),
        ("S32", BenchFamily.GRID, {"rows": 8, "cols": 8}),
        ("S33", BenchFamily.PARALLEL, {"k": 5, "n": 10}),
        ("S34", BenchFamily.SERIAL, {"n": 100}),
        ("S35", BenchFamily.GRID, {"rows": 7, "cols": 14, "down_cols": list(range(10))}),
    ]
)


def mesh_dsl(n: int) -> str:
    """Bare n x n machine mesh with directed right and down links, no sources or sinks."""
    if n < 1:
        raise SpecError("mesh size must be >= 1")
    return f"""\
for i in 0..{n} {{ for j in 0..{n} {{ machine "m_{{i}}_{{j}}" {{ delay = 1.0 }} }} }}
for i in 0..{n} {{ for j in 0..{n - 1} {{ connect "m_{{i}}_{{j}}" -> "m_{{i}}_{{j + 1}}" via buffer "r_{{i}}_{{j}}" {{ capacity = 2 }} }} }}
for i in 0..{n - 1} {{ for j in 0..{n} {{ connect "m_{{i}}_{{j}}" -> "m_{{i + 1}}_{{j}}" via buffer "d_{{i}}_{{j}}" {{ capacity = 2 }} }} }}
"""


def catalog() -> list[BenchmarkSpec]:
    return [BenchmarkSpec(fam, dict(params), label) for label, fam, params in _CATALOG]


def catalog_spec(label: str) -> BenchmarkSpec:
    for spec in catalog():
        if spec.label == label:
            return spec
    raise SpecError(f"no catalog entry {label!r}")


# ---------------------------------------------------------------- injection

SUBKINDS = (
    "T1.case",
    "T1.shift",
    "T2",
    "T3.added",
    "T3.omitted",
    "T4.added",
    "T4.omitted",
    "T5",
    "T6.flattened",
    "T7",
    "T8.dangling",
    "T8.edge_reuse",
)
# what may accompany an index shift without disturbing its detection
_SHIFT_COMPATIBLE = {"T1.case", "T1.shift", "T2", "T5", "T6.flattened", "T8.edge_reuse"}


@dataclass(frozen=True)
class Injection:
    subkind: str
    count: int = 1


@dataclass(frozen=True)
class InjectionSpec:
    """Requested mutations; ``T1.shift`` takes its count as the shift magnitude (1 or 2)."""

    items: tuple[Injection, ...]
    seed: int = 0

    def __post_init__(self):
        items = tuple(i if isinstance(i, Injection) else Injection(*i) for i in self.items)
        object.__setattr__(self, "items", items)
        for it in items:
            if it.subkind not in SUBKINDS:
                raise SpecError(f"unknown injection subkind {it.subkind!r}")
            if not isinstance(it.count, int) or it.count < 0:
                raise SpecError(f"{it.subkind}: count must be a non-negative integer")
        c = self.counts()
        if c["T1.shift"] > 2:
            raise SpecError("T1.shift magnitude must be at most 2")
        active = {k for k, v in c.items() if v}
        if "T7" in active and active != {"T7"}:
            raise SpecError("T7 corrupts the whole artifact and cannot be combined")
        if c["T7"] > 1:
            raise SpecError("T7 is binary per artifact")
        if "T1.shift" in active and not active <= _SHIFT_COMPATIBLE:
            raise SpecError(f"T1.shift cannot be combined with {sorted(active - _SHIFT_COMPATIBLE)}")

    def counts(self) -> Counter:
        c = Counter({k: 0 for k in SUBKINDS})
        for it in self.items:
            c[it.subkind] += it.count
        return c

    def to_dict(self) -> dict:
        return {"seed": self.seed, "items": [{"subkind": i.subkind, "count": i.count} for i in self.items]}

    @classmethod
    def from_dict(cls, d: dict) -> "InjectionSpec":
        return cls(tuple(Injection(i["subkind"], i.get("count", 1)) for i in d["items"]), d.get("seed", 0))


@dataclass
class InjectionResult:
    graph: ModelGraph | None  # None when only a corrupted text exists
    netlist_text: str
    manifest: dict

    @property
    def expected_counts(self) -> dict[str, int]:
        return self.manifest["expected_counts"]


def _letters(i: int) -> str:
    s = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        s = string.ascii_lowercase[r] + s
    return s


def _has_int(text: str) -> bool:
    return bool(re.search(r"\d", text))


def _changed_value(v):
    """A different but still valid value of the same parameter."""
    if isinstance(v, bool):
        raise Infeasible("boolean parameters are not injectable")
    if isinstance(v, int):
        return v + 1
    if isinstance(v, float):
        return round(v * 1.5 + 0.5, 6)
    if isinstance(v, str):
        return "FirstAvailable" if v == "RoundRobin" else "RoundRobin"
    if isinstance(v, DistSpec):
        p = list(v.params)
        if v.family is Family.EXPONENTIAL:
            p[0] *= 2
        elif v.family is Family.GAMMA:
            p[0] *= 2
        elif v.family is Family.UNIFORM:
            p[1] += 1
        elif v.family is Family.LOGNORMAL:
            p[0] += 0.5
        else:
            p[0] += 1
        return DistSpec(v.family, tuple(p))
    raise Infeasible(f"cannot perturb parameter value {v!r}")


def structural_errors(nodes: dict[str, Node], edges: dict[str, Edge]) -> list[tuple[str, str]]:
    """(rule, node) for every degree-based Error finding; the oracle's view of the rules."""
    out, inc = Counter(), Counter()
    for e in edges.values():
        out[e.src] += 1
        inc[e.dst] += 1
    found = []
    for nid, n in nodes.items():
        o, i = out[nid], inc[nid]
        if o + i == 0:
            if n.kind not in (NodeKind.SOURCE, NodeKind.SINK):
                found.append(("V-ISOLATED", nid))
        else:
            if n.kind is not NodeKind.SINK and o == 0:
                found.append(("V-DANGLING-OUT", nid))
            if n.kind is not NodeKind.SOURCE and i == 0:
                found.append(("V-DANGLING-IN", nid))
            if n.kind is NodeKind.SPLITTER and o == 1:
                found.append(("V-SPLIT-ARITY", nid))
            if n.kind is NodeKind.MERGER and i == 1:
                found.append(("V-MERGE-ARITY", nid))
        if n.kind is NodeKind.SOURCE and i:
            found.append(("V-SRC-HAS-IN", nid))
        if n.kind is NodeKind.SINK and o:
            found.append(("V-SINK-HAS-OUT", nid))
    return sorted(found)


def inject(graph: ModelGraph, spec: InjectionSpec) -> InjectionResult:
    """Apply ``spec`` to ``graph`` and predict the diff it must produce.

    Deterministic for a given (graph, spec). Raises :class:`Infeasible` when
    the graph lacks suitable targets.
    """
    rng = random.Random(spec.seed)
    want = spec.counts()
    nodes: dict[str, Node] = dict(graph.nodes)
    edges: dict[str, Edge] = dict(graph.edges)
    mutations: list[dict] = []
    expect = Counter()  # record subkind -> count

    def pick(pool, k: int, what: str) -> list:
        pool = sorted(pool)
        if len(pool) < k:
            raise Infeasible(f"{what}: need {k} targets, graph offers {len(pool)}")
        return rng.sample(pool, k)

    def note(subkind: str, target: str, records: dict[str, int], **extra):
        mutations.append({"subkind": subkind, "target": target, "expected": dict(records), **extra})
        expect.update(records)

    if want["T7"]:
        text = write_netlist(graph)
        cut = text.rstrip().rfind("}")
        text = text[:cut] + text[cut + 1 :]
        note("T7", graph.name, {"T7": 1})
        return InjectionResult(None, text, _manifest(graph, spec, mutations, expect, []))

    # node omissions
    for nid in pick((n for n, v in nodes.items() if v.kind is NodeKind.MACHINE), want["T3.omitted"], "T3.omitted"):
        incident = sorted(e for e, v in edges.items() if nid in (v.src, v.dst))
        for e in incident:
            del edges[e]
        del nodes[nid]
        note("T3.omitted", nid, {"T3.omitted": 1, "T4.omitted": len(incident)} if incident else {"T3.omitted": 1}, removed_edges=incident)

    # a machine loses its only outgoing edge
    outdeg = Counter(v.src for v in edges.values())
    pool = [n for n, v in nodes.items() if v.kind is NodeKind.MACHINE and outdeg[n] == 1]
    for nid in pick(pool, want["T8.dangling"], "T8.dangling"):
        eid = next(e for e, v in sorted(edges.items()) if v.src == nid)
        del edges[eid]
        note("T8.dangling", nid, {"T4.omitted": 1}, removed_edges=[eid])

    for eid in pick(edges, want["T4.omitted"], "T4.omitted"):
        del edges[eid]
        note("T4.omitted", eid, {"T4.omitted": 1})

    # spurious connections between pairs never connected in ground truth
    truth_pairs = {(e.src, e.dst) for e in graph.edges.values()}
    senders = sorted(n for n, v in nodes.items() if v.kind is not NodeKind.SINK)
    receivers = sorted(n for n, v in nodes.items() if v.kind is not NodeKind.SOURCE)
    added_pairs: set[tuple[str, str]] = set()
    for i in range(want["T4.added"]):
        for _ in range(200):
            u, v = rng.choice(senders), rng.choice(receivers)
            if u != v and (u, v) not in truth_pairs and (u, v) not in added_pairs:
                break
        else:
            options = [(u, v) for u in senders for v in receivers if u != v and (u, v) not in truth_pairs | added_pairs]
            if not options:
                raise Infeasible("T4.added: no unconnected node pair left")
            u, v = rng.choice(options)
        added_pairs.add((u, v))
        eid = f"extra_e{_letters(i)}"
        edges[eid] = Edge(eid, EdgeKind.BUFFER, u, v, {"capacity": 1})
        note("T4.added", eid, {"T4.added": 1}, endpoints=[u, v])

    # parameter perturbations on surviving entities
    slots = [("node", n, k) for n, v in nodes.items() for k, x in v.params.items() if x is not None]
    slots += [("edge", e, k) for e, v in edges.items() if e in graph.edges for k, x in v.params.items() if x is not None]
    for where, ent, key in pick(slots, want["T2"], "T2"):
        store = nodes if where == "node" else edges
        old = store[ent].params[key]
        new = _changed_value(old)
        store[ent] = replace(store[ent], params={**store[ent].params, key: new})
        note("T2", ent, {"T2.value": 1}, param=key)

    pool = [n for n, v in nodes.items() if v.kind is NodeKind.MACHINE and v.params.get("work_capacity") is None]
    for nid in pick(pool, want["T5"], "T5"):
        nodes[nid] = replace(nodes[nid], params={**nodes[nid].params, "work_capacity": 2})
        note("T5", nid, {"T5": 1}, param="work_capacity")

    for nid in pick((n for n, v in nodes.items() if v.scope), want["T6.flattened"], "T6.flattened"):
        nodes[nid] = replace(nodes[nid], scope=ROOT)
        note("T6.flattened", nid, {"T6.flattened": 1})

    for i in range(want["T3.added"]):
        nid = f"extra_{_letters(i)}"
        if nid in nodes:
            raise Infeasible(f"T3.added: id {nid!r} already taken")
        nodes[nid] = Node(nid, NodeKind.MACHINE, {"delay": 1.0})
        note("T3.added", nid, {"T3.added": 1})

    renames: dict[str, str] = {}
    shift = want["T1.shift"]
    folded = Counter(n.casefold() for n in nodes)

    def swap_last(nid: str) -> str:
        head, _, last = nid.rpartition("/")
        return (head + "/" if head else "") + last.swapcase()

    pool = [
        n
        for n in nodes
        if n in graph.nodes and swap_last(n) != n and folded[n.casefold()] == 1 and not (shift and _has_int(n))
    ]
    for nid in pick(pool, want["T1.case"], "T1.case"):
        renames[nid] = swap_last(nid)
        note("T1.case", nid, {"T1.case": 1}, new_id=renames[nid])

    s = 0
    if shift:
        ints = [int(m) for text in list(nodes) + list(edges) + [p for n in nodes.values() for p in n.scope] for m in re.findall(r"\d+", text)]
        options = [-shift, shift]
        rng.shuffle(options)
        for cand in options:
            if cand < 0 and ints and min(ints) + cand < 0:
                continue
            s = cand
            break
        if not s:
            raise Infeasible("T1.shift: no sign keeps indices non-negative")
        shifted = [n for n in nodes if _has_int(n)]
        if not shifted:
            raise Infeasible("T1.shift: no indexed ids")
        for n in shifted:
            renames[n] = shift_id(n, s)
        for n in sorted(shifted):
            note("T1.shift", n, {"T1.shift": 1}, new_id=renames[n], shift=s)

    if renames:
        final = [renames.get(n, n) for n in nodes]
        if len(set(final)) != len(final) or len({f.casefold() for f in final}) != len(final):
            raise Infeasible("renaming would collide with an existing id")
        shift_scope = lambda sc: tuple(shift_id(p, s) for p in sc) if s else sc  # noqa: E731
        nodes = {renames.get(n, n): replace(v, id=renames.get(n, n), scope=shift_scope(v.scope)) for n, v in nodes.items()}
        edge_ids = {e: (shift_id(e, s) if s else e) for e in edges}
        if len(set(edge_ids.values())) != len(edge_ids):
            raise Infeasible("edge renaming would collide")
        edges = {
            edge_ids[e]: replace(v, id=edge_ids[e], src=renames.get(v.src, v.src), dst=renames.get(v.dst, v.dst))
            for e, v in edges.items()
        }

    scopes = {n.scope[:i] for n in nodes.values() for i in range(len(n.scope) + 1)}
    cand = ModelGraph(graph.name, nodes, edges, frozenset(scopes))
    # findings already present in ground truth would also surface, so they are expected too
    collateral = structural_errors(nodes, edges)
    for rule, _ in collateral:
        expect[f"T8.{rule}"] += 1

    text = write_netlist(cand)
    reuse = want["T8.edge_reuse"]
    if reuse:
        doc = netlist_doc(cand)
        ids = sorted(nodes)
        targets = pick(range(len(doc["edges"])), reuse, "T8.edge_reuse")
        for idx in targets:
            entry = dict(doc["edges"][idx])
            entry["to"] = rng.choice([n for n in ids if n != entry["to"]])
            doc["edges"].append(entry)
            note("T8.edge_reuse", entry["id"], {"T8.V-EDGE-REUSE": 1}, to=entry["to"])
        text = json.dumps(doc, indent=1) + "\n"
    return InjectionResult(None if reuse else cand, text, _manifest(graph, spec, mutations, expect, collateral))


def _manifest(graph, spec, mutations, expect: Counter, collateral) -> dict:
    counts = Counter()
    for sub, n in expect.items():
        counts[sub.split(".")[0]] += n
    return {
        "benchmark": graph.name,
        "injection": spec.to_dict(),
        "mutations": mutations,
        "collateral": [{"rule": r, "entity": n} for r, n in collateral],
        "expected_subkinds": {k: v for k, v in sorted(expect.items()) if v},
        "expected_counts": {f"T{i}": counts[f"T{i}"] for i in range(1, 9)},
        "expected_total": sum(counts.values()),
    }


def random_injection(graph: ModelGraph, seed: int, max_count: int = 3) -> InjectionSpec:
    """Draw a random feasible-looking mix of subkinds for an oracle campaign."""
    rng = random.Random(seed)
    if rng.random() < 0.15:
        kinds = sorted(_SHIFT_COMPATIBLE - {"T8.edge_reuse"})
        items = [Injection("T1.shift", rng.choice((1, 1, 2)))]
    else:
        kinds = [k for k in SUBKINDS if k not in ("T1.shift", "T7")]
        items = []
    for k in rng.sample(kinds, rng.randint(1, 3)):
        if k == "T1.shift":
            continue
        if k == "T6.flattened" and not any(n.scope for n in graph.nodes.values()):
            continue
        items.append(Injection(k, rng.randint(1, max_count)))
    return InjectionSpec(tuple(items), seed)
