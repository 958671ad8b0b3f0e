"""Enumerative JSON netlist: one entry per node and per edge.

Schema tag ``twinforge-netlist/1``::

    {"schema": "twinforge-netlist/1", "name": "S5",
     "nodes": [{"id": "M1", "kind": "machine", "params": {"delay": 2.0}}],
     "edges": [{"id": "B1", "kind": "buffer", "from": "SRC", "to": "M1",
                "params": {"capacity": 10}}],
     "hierarchy": [{"scope": "Stage_1", "members": ["Stage_1/M1"]}]}

Distributions are objects such as ``{"dist": "exp", "rate": 0.5}``; unset
parameters are ``null``. ``hierarchy`` is optional; nodes not listed sit in
the root scope.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .model import (
    PARAM_NAMES,
    Defect,
    DistSpec,
    Edge,
    EdgeKind,
    Family,
    GraphBuilder,
    ModelGraph,
    Node,
    NodeKind,
    ParamValue,
    canonical_form,
    parse_scope,
    scope_str,
)

SCHEMA = "twinforge-netlist/1"


class ParseError(ValueError):
    """Malformed JSON text."""


class SchemaError(ValueError):
    """Well-formed JSON that does not describe a model."""


def dist_to_json(d: DistSpec) -> dict[str, Any]:
    return {"dist": d.family.value, **d.named_params()}


def dist_from_json(obj: dict[str, Any]) -> DistSpec:
    try:
        family = Family(obj["dist"])
    except (KeyError, ValueError):
        raise SchemaError(f"unknown distribution {obj.get('dist')!r}") from None
    names = PARAM_NAMES[family]
    missing = [n for n in names if n not in obj]
    if missing:
        raise SchemaError(f"{family.value} distribution is missing {', '.join(missing)}")
    try:
        return DistSpec(family, tuple(obj[n] for n in names))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"invalid {family.value} distribution: {exc}") from None


def param_to_json(v: ParamValue) -> Any:
    if isinstance(v, DistSpec):
        return dist_to_json(v)
    return v


def param_from_json(v: Any) -> ParamValue:
    if isinstance(v, dict):
        return dist_from_json(v)
    if v is None or isinstance(v, str):
        return v
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"unsupported parameter value {v!r}")
    if not math.isfinite(v):
        raise SchemaError("parameter values must be finite")
    return v


def _params(entry: dict, where: str) -> dict[str, ParamValue]:
    raw = entry.get("params", {}) or {}
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: params must be an object")
    return {k: param_from_json(v) for k, v in raw.items()}


def _kind(enum: type[Enum], value: Any, where: str):
    try:
        return enum(value)
    except ValueError:
        raise SchemaError(f"{where}: unknown kind {value!r}") from None


def read_netlist(text: str) -> ModelGraph:
    """Parse a netlist document.

    Duplicate node ids and edges bound more than once are not fatal: the first
    occurrence is kept and the violation is recorded on ``graph.defects`` for
    the validator to report.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaError("netlist must be a JSON object")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise SchemaError(f"unsupported schema {schema!r}")
    nodes = doc.get("nodes", [])
    edges = doc.get("edges", [])
    if not isinstance(nodes, list) or not isinstance(edges, list):
        raise SchemaError("nodes and edges must be lists")

    member_scope: dict[str, tuple[str, ...]] = {}
    declared_scopes = []
    for h in doc.get("hierarchy") or []:
        if not isinstance(h, dict) or "scope" not in h:
            raise SchemaError("hierarchy entries need a scope")
        scope = parse_scope(h["scope"])
        declared_scopes.append(scope)
        for m in h.get("members", []):
            member_scope[m] = scope

    b = GraphBuilder(str(doc.get("name", "model")))
    for scope in declared_scopes:
        b.add_scope(scope)
    for i, entry in enumerate(nodes):
        where = f"nodes[{i}]"
        if not isinstance(entry, dict) or not entry.get("id"):
            raise SchemaError(f"{where}: node needs a non-empty id")
        nid = str(entry["id"])
        kind = _kind(NodeKind, entry.get("kind"), where)
        node = Node(nid, kind, _params(entry, where), member_scope.get(nid, ()))
        if nid in b.nodes:
            b.defects.append(Defect("V-DUP-ID", nid, f"node {nid!r} declared more than once"))
            continue
        b.add_node(node)

    for i, entry in enumerate(edges):
        where = f"edges[{i}]"
        if not isinstance(entry, dict) or not entry.get("id"):
            raise SchemaError(f"{where}: edge needs a non-empty id")
        eid = str(entry["id"])
        kind = _kind(EdgeKind, entry.get("kind"), where)
        srcs = entry.get("from")
        dsts = entry.get("to")
        srcs = srcs if isinstance(srcs, list) else [srcs]
        dsts = dsts if isinstance(dsts, list) else [dsts]
        for end in srcs + dsts:
            if not end:
                raise SchemaError(f"{where}: edge {eid!r} is missing an endpoint")
            if end not in b.nodes:
                raise SchemaError(f"{where}: edge {eid!r} references unknown node {end!r}")
        params = _params(entry, where)
        bindings = [(s, d) for s in srcs for d in dsts]
        if eid in b.edges:
            bindings.insert(0, None)  # the id is already bound by an earlier entry
        for binding in bindings[1:]:
            b.defects.append(Defect("V-EDGE-REUSE", eid, f"edge {eid!r} also bound to {binding[0]} -> {binding[1]}"))
        if bindings[0] is not None:
            s, d = bindings[0]
            b.connect(s, Edge(eid, kind, params=params), d)
    return b.build()


def netlist_doc(graph: ModelGraph) -> dict[str, Any]:
    g = canonical_form(graph)
    doc: dict[str, Any] = {"schema": SCHEMA, "name": g.name}
    doc["nodes"] = [
        {"id": n.id, "kind": n.kind.value, "params": {k: param_to_json(v) for k, v in n.params.items()}}
        for n in g.nodes.values()
    ]
    doc["edges"] = [
        {
            "id": e.id,
            "kind": e.kind.value,
            "from": e.src,
            "to": e.dst,
            "params": {k: param_to_json(v) for k, v in e.params.items()},
        }
        for e in g.edges.values()
    ]
    scopes = sorted(s for s in g.scopes if s)
    if scopes:
        doc["hierarchy"] = [
            {"scope": scope_str(s), "members": [n.id for n in g.nodes.values() if n.scope == s]} for s in scopes
        ]
    return doc


def write_netlist(graph: ModelGraph) -> str:
    """Serialize in canonical order, one entry per line.

    Defects are not representable and are dropped.
    """
    doc = netlist_doc(graph)
    lines = ["{", f'  "schema": {json.dumps(doc["schema"])},', f'  "name": {json.dumps(doc["name"])},']
    for key in ("nodes", "edges", "hierarchy"):
        if key not in doc:
            continue
        entries = [json.dumps(item, sort_keys=False) for item in doc[key]]
        body = ",\n".join(f"    {e}" for e in entries)
        lines.append(f'  "{key}": [\n{body}\n  ],' if entries else f'  "{key}": [],')
    lines[-1] = lines[-1].rstrip(",")
    lines.append("}")
    return "\n".join(lines) + "\n"


def entry_count(text: str) -> int:
    """Number of node and edge entries in a netlist document."""
    doc = json.loads(text)
    return len(doc.get("nodes", [])) + len(doc.get("edges", []))


class IRKind(str, Enum):
    NETLIST = "netlist"
    DSL = "dsl"


@dataclass(frozen=True)
class DensityReport:
    ir_kind: IRKind
    entry_count: int
    char_count: int
    flat_nodes: int
    flat_edges: int
    expansion_ratio: float


def density(ir_text: str, ir_kind: IRKind | str, graph: ModelGraph) -> DensityReport:
    ir_kind = IRKind(ir_kind)
    if ir_kind is IRKind.NETLIST:
        entries = entry_count(ir_text)
    else:
        from .dsl import parse, statement_count

        entries = statement_count(parse(ir_text))
    flat_nodes, flat_edges = len(graph.nodes), len(graph.edges)
    ratio = (flat_nodes + flat_edges) / max(entries, 1)
    return DensityReport(ir_kind, entries, len(ir_text), flat_nodes, flat_edges, ratio)
