"""Flat component-graph model for manufacturing lines.

Components (sources, sinks, machines, splitters, mergers) are nodes. Buffers
and conveyors are edges, so every edge joins exactly one upstream node to
exactly one downstream node and nodes never touch each other directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Union


class ModelError(Exception):
    """Base class for graph construction errors."""


class DuplicateId(ModelError):
    pass


class UnknownEndpoint(ModelError):
    pass


class DuplicateEdgeId(ModelError):
    pass


class EdgeReuse(DuplicateEdgeId):
    """An edge that is already bound was attached to a second node pair."""


class NodeKind(str, Enum):
    SOURCE = "source"
    SINK = "sink"
    MACHINE = "machine"
    SPLITTER = "splitter"
    MERGER = "merger"


class EdgeKind(str, Enum):
    BUFFER = "buffer"
    CONVEYOR = "conveyor"


class RoutingPolicy(str, Enum):
    ROUND_ROBIN = "RoundRobin"
    FIRST_AVAILABLE = "FirstAvailable"

    @classmethod
    def parse(cls, text: str) -> "RoutingPolicy":
        key = text.replace("_", "").replace("-", "").lower()
        for p in cls:
            if p.value.lower() == key:
                return p
        raise ValueError(f"unknown routing policy {text!r}")


class Family(str, Enum):
    DETERMINISTIC = "det"
    EXPONENTIAL = "exp"
    NORMAL = "normal"
    LOGNORMAL = "lognormal"
    UNIFORM = "uniform"
    GAMMA = "gamma"


PARAM_NAMES: dict[Family, tuple[str, ...]] = {
    Family.DETERMINISTIC: ("value",),
    Family.EXPONENTIAL: ("rate",),
    Family.NORMAL: ("mean", "std"),
    Family.LOGNORMAL: ("mu", "sigma"),
    Family.UNIFORM: ("low", "high"),
    Family.GAMMA: ("shape", "scale"),
}

# canonical family order, used for tie-breaking in model selection
FAMILY_ORDER = tuple(Family)


@dataclass(frozen=True)
class DistSpec:
    """A parametric distribution; parameters are positional per ``PARAM_NAMES``."""

    family: Family
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        names = PARAM_NAMES[self.family]
        if len(self.params) != len(names):
            raise ValueError(f"{self.family.value} takes {len(names)} parameters, got {len(self.params)}")
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError("distribution parameters must be finite")
        p = self.params
        f = self.family
        if f is Family.EXPONENTIAL and p[0] <= 0:
            raise ValueError("exponential rate must be > 0")
        if f in (Family.NORMAL, Family.LOGNORMAL) and p[1] < 0:
            raise ValueError("standard deviation must be >= 0")
        if f is Family.UNIFORM and p[0] > p[1]:
            raise ValueError("uniform requires low <= high")
        if f is Family.GAMMA and (p[0] <= 0 or p[1] <= 0):
            raise ValueError("gamma shape and scale must be > 0")

    @classmethod
    def deterministic(cls, value: float) -> "DistSpec":
        return cls(Family.DETERMINISTIC, (value,))

    @classmethod
    def exponential(cls, rate: float) -> "DistSpec":
        return cls(Family.EXPONENTIAL, (rate,))

    @classmethod
    def normal(cls, mean: float, std: float) -> "DistSpec":
        return cls(Family.NORMAL, (mean, std))

    @classmethod
    def lognormal(cls, mu: float, sigma: float) -> "DistSpec":
        return cls(Family.LOGNORMAL, (mu, sigma))

    @classmethod
    def uniform(cls, low: float, high: float) -> "DistSpec":
        return cls(Family.UNIFORM, (low, high))

    @classmethod
    def gamma(cls, shape: float, scale: float) -> "DistSpec":
        return cls(Family.GAMMA, (shape, scale))

    def named_params(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES[self.family], self.params))

    def mean(self) -> float:
        p = self.params
        if self.family is Family.DETERMINISTIC:
            return p[0]
        if self.family is Family.EXPONENTIAL:
            return 1.0 / p[0]
        if self.family is Family.NORMAL:
            return p[0]
        if self.family is Family.LOGNORMAL:
            return math.exp(p[0] + p[1] ** 2 / 2)
        if self.family is Family.UNIFORM:
            return (p[0] + p[1]) / 2
        return p[0] * p[1]

    def minimum(self) -> float:
        """Lower end of the support (clamped at zero for time-valued use)."""
        if self.family is Family.DETERMINISTIC:
            return self.params[0]
        if self.family is Family.UNIFORM:
            return self.params[0]
        if self.family is Family.NORMAL:
            return -math.inf
        return 0.0


# A parameter value: number, text, distribution, or None for "unset".
ParamValue = Union[int, float, str, DistSpec, None]


def param_equal(a: ParamValue, b: ParamValue) -> bool:
    """Semantic equality: a bare number equals a deterministic distribution of it."""
    if isinstance(a, DistSpec) and a.family is Family.DETERMINISTIC:
        a = a.params[0]
    if isinstance(b, DistSpec) and b.family is Family.DETERMINISTIC:
        b = b.params[0]
    if isinstance(a, bool) or isinstance(b, bool):
        return a is b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)
    return type(a) is type(b) and a == b


# Fixed per-kind parameter schema: name -> mandatory?
PARAM_SCHEMA: dict[Enum, dict[str, bool]] = {
    NodeKind.SOURCE: {"inter_arrival": True},
    NodeKind.SINK: {},
    NodeKind.MACHINE: {"delay": True, "work_capacity": False},
    NodeKind.SPLITTER: {"policy": True},
    NodeKind.MERGER: {"policy": True},
    EdgeKind.BUFFER: {"capacity": True},
    EdgeKind.CONVEYOR: {"capacity": True, "transit_delay": True},
}

ScopePath = tuple[str, ...]
ROOT: ScopePath = ()


def scope_str(scope: ScopePath) -> str:
    return "/".join(scope)


def parse_scope(text: str) -> ScopePath:
    return tuple(p for p in text.split("/") if p) if text else ()


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    params: Mapping[str, ParamValue] = field(default_factory=dict)
    scope: ScopePath = ROOT

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be non-empty")
        if isinstance(self.kind, EdgeKind) or self.kind in {k.value for k in EdgeKind}:
            raise TypeError(f"{self.kind} is an edge kind, not a node kind")
        object.__setattr__(self, "kind", NodeKind(self.kind))
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "scope", tuple(self.scope))

    def __hash__(self):
        return hash((self.id, self.kind, self.scope))


@dataclass(frozen=True)
class Edge:
    id: str
    kind: EdgeKind
    src: str = ""
    dst: str = ""
    params: Mapping[str, ParamValue] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("edge id must be non-empty")
        object.__setattr__(self, "kind", EdgeKind(self.kind))
        object.__setattr__(self, "params", dict(self.params))

    def __hash__(self):
        return hash((self.id, self.kind, self.src, self.dst))

    @property
    def bound(self) -> bool:
        return bool(self.src and self.dst)


@dataclass(frozen=True)
class Defect:
    """A construction violation tolerated by a lenient reader (duplicate id, edge reuse)."""

    rule: str
    entity: str
    detail: str = ""


@dataclass(frozen=True)
class ModelGraph:
    name: str = "model"
    nodes: Mapping[str, Node] = field(default_factory=dict)
    edges: Mapping[str, Edge] = field(default_factory=dict)
    scopes: frozenset = frozenset({ROOT})
    defects: tuple[Defect, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", dict(self.nodes))
        object.__setattr__(self, "edges", dict(self.edges))
        object.__setattr__(self, "scopes", frozenset(self.scopes) | {ROOT})

    def out_edges(self, node_id: str) -> list[Edge]:
        return sorted((e for e in self.edges.values() if e.src == node_id), key=lambda e: e.id)

    def in_edges(self, node_id: str) -> list[Edge]:
        return sorted((e for e in self.edges.values() if e.dst == node_id), key=lambda e: e.id)

    def adjacency(self) -> tuple[dict[str, list[Edge]], dict[str, list[Edge]]]:
        """(outgoing, incoming) edge lists per node, each in canonical edge order."""
        out: dict[str, list[Edge]] = {n: [] for n in self.nodes}
        inc: dict[str, list[Edge]] = {n: [] for n in self.nodes}
        for eid in sorted(self.edges):
            e = self.edges[eid]
            out.setdefault(e.src, []).append(e)
            inc.setdefault(e.dst, []).append(e)
        return out, inc


def _with_ancestors(scope: ScopePath) -> set[ScopePath]:
    return {scope[:i] for i in range(len(scope) + 1)}


class GraphBuilder:
    """Mutable accumulator used by readers and the elaborator; ``build`` freezes it."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self.scopes: set[ScopePath] = {ROOT}
        self.defects: list[Defect] = []

    @classmethod
    def from_graph(cls, graph: ModelGraph) -> "GraphBuilder":
        b = cls(graph.name)
        b.nodes = dict(graph.nodes)
        b.edges = dict(graph.edges)
        b.scopes = set(graph.scopes)
        b.defects = list(graph.defects)
        return b

    def add_scope(self, scope: ScopePath) -> None:
        self.scopes |= _with_ancestors(tuple(scope))

    def add_node(self, node: Node) -> Node:
        if not isinstance(node, Node):
            raise TypeError("only Node instances can be added as nodes")
        if node.id in self.nodes:
            raise DuplicateId(node.id)
        self.nodes[node.id] = node
        self.add_scope(node.scope)
        return node

    def connect(self, src: str, edge: Edge, dst: str) -> Edge:
        if edge.id in self.edges:
            old = self.edges[edge.id]
            if edge.bound or (old.kind == edge.kind and old.params == edge.params):
                raise EdgeReuse(f"edge {edge.id!r} already connects {old.src} -> {old.dst}")
            raise DuplicateEdgeId(edge.id)
        for end in (src, dst):
            if end not in self.nodes:
                raise UnknownEndpoint(end)
        edge = replace(edge, src=src, dst=dst)
        self.edges[edge.id] = edge
        return edge

    def build(self) -> ModelGraph:
        return ModelGraph(self.name, self.nodes, self.edges, frozenset(self.scopes), tuple(self.defects))


def add_node(graph: ModelGraph, node: Node) -> ModelGraph:
    b = GraphBuilder.from_graph(graph)
    b.add_node(node)
    return b.build()


def connect(graph: ModelGraph, from_id: str, edge: Edge, to_id: str) -> ModelGraph:
    b = GraphBuilder.from_graph(graph)
    b.connect(from_id, edge, to_id)
    return b.build()


def graph_from(name: str, nodes: Iterable[Node], edges: Iterable[Edge]) -> ModelGraph:
    """Build a graph from pre-bound edges (``src``/``dst`` already set)."""
    b = GraphBuilder(name)
    for n in nodes:
        b.add_node(n)
    for e in edges:
        b.connect(e.src, replace(e, src="", dst=""), e.dst)
    return b.build()


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    param_count: int
    max_scope_depth: int


def stats(graph: ModelGraph) -> GraphStats:
    params = sum(v is not None for n in graph.nodes.values() for v in n.params.values())
    params += sum(v is not None for e in graph.edges.values() for v in e.params.values())
    depth = max((len(n.scope) for n in graph.nodes.values()), default=0)
    return GraphStats(len(graph.nodes), len(graph.edges), params, depth)


def node_sort_key(node: Node) -> tuple:
    return (node.scope, node.id)


def canonical_form(graph: ModelGraph) -> ModelGraph:
    nodes = sorted(graph.nodes.values(), key=node_sort_key)
    edges = sorted(graph.edges.values(), key=lambda e: e.id)
    canon_nodes = {n.id: replace(n, params=dict(sorted(n.params.items()))) for n in nodes}
    canon_edges = {e.id: replace(e, params=dict(sorted(e.params.items()))) for e in edges}
    defects = tuple(sorted(graph.defects, key=lambda d: (d.rule, d.entity, d.detail)))
    return ModelGraph(graph.name, canon_nodes, canon_edges, graph.scopes, defects)


def same_structure(a: ModelGraph, b: ModelGraph) -> bool:
    """Equality ignoring the graph name."""
    return a.nodes == b.nodes and a.edges == b.edges and a.scopes == b.scopes and a.defects == b.defects
