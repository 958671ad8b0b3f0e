"""Structural validation rules over a :class:`ModelGraph`.

Every rule runs on every call; the result is the full list of findings in a
stable order (rule catalog order, then entity id).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from enum import Enum

from .model import PARAM_SCHEMA, DistSpec, Family, ModelGraph, NodeKind, RoutingPolicy


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    severity: Severity
    entity: str
    message: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["severity"] = self.severity.value
        return d


RULES: dict[str, str] = {
    "V-ISOLATED": "component has no incident edges (warning for sources and sinks)",
    "V-DANGLING-OUT": "component other than a sink has no outgoing edge",
    "V-DANGLING-IN": "component other than a source has no incoming edge",
    "V-DUP-ID": "instance name declared more than once",
    "V-MISSING-PARAM": "mandatory parameter is unset",
    "V-EDGE-REUSE": "edge bound to more than one from/to pair (one-to-one cardinality)",
    "V-BAD-POLICY": "routing policy is not RoundRobin or FirstAvailable",
    "V-SRC-HAS-IN": "source has an incoming edge",
    "V-SINK-HAS-OUT": "sink has an outgoing edge",
    "V-SPLIT-ARITY": "splitter has a single outgoing edge",
    "V-MERGE-ARITY": "merger has a single incoming edge",
    "V-PARAM-RANGE": "parameter out of range (capacity <= 0, negative time, wrong type)",
}
_ORDER = {r: i for i, r in enumerate(RULES)}

# parameters with a documented default are never reported missing
DEFAULTS = {"policy": RoutingPolicy.ROUND_ROBIN.value}


def rule_catalog() -> list[dict]:
    return [
        {"rule": r, "description": d, "severity": "error/warning" if r == "V-ISOLATED" else "error"}
        for r, d in RULES.items()
    ]


def _time_ok(v) -> bool:
    if isinstance(v, DistSpec):
        # normal draws are clamped at zero by the simulator; fixed negative support is not
        return v.family not in (Family.DETERMINISTIC, Family.UNIFORM) or v.params[0] >= 0
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v >= 0


def _capacity_ok(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and float(v).is_integer() and v > 0


_TIME_PARAMS = {"delay", "inter_arrival", "transit_delay"}


def _range_problem(name: str, v) -> str | None:
    if v is None:
        return None
    if name in _TIME_PARAMS and not _time_ok(v):
        return f"{name} must be a non-negative time or distribution, got {v!r}"
    if name in ("capacity", "work_capacity") and not _capacity_ok(v):
        return f"{name} must be a positive integer, got {v!r}"
    return None


def validate(graph: ModelGraph) -> list[Diagnostic]:
    found: list[Diagnostic] = []

    def add(rule: str, entity: str, message: str, severity: Severity = Severity.ERROR):
        found.append(Diagnostic(rule, severity, entity, message))

    for d in graph.defects:
        add(d.rule, d.entity, d.detail or RULES.get(d.rule, d.rule))

    out, inc = graph.adjacency()
    for nid, node in graph.nodes.items():
        n_out, n_in = len(out[nid]), len(inc[nid])
        kind = node.kind
        if n_out + n_in == 0:
            sev = Severity.WARNING if kind in (NodeKind.SOURCE, NodeKind.SINK) else Severity.ERROR
            add("V-ISOLATED", nid, f"{kind.value} {nid!r} has no connections", sev)
        else:
            if kind is not NodeKind.SINK and n_out == 0:
                add("V-DANGLING-OUT", nid, f"{kind.value} {nid!r} has no outgoing edge")
            if kind is not NodeKind.SOURCE and n_in == 0:
                add("V-DANGLING-IN", nid, f"{kind.value} {nid!r} has no incoming edge")
            if kind is NodeKind.SPLITTER and n_out == 1:
                add("V-SPLIT-ARITY", nid, f"splitter {nid!r} has only one outgoing edge")
            if kind is NodeKind.MERGER and n_in == 1:
                add("V-MERGE-ARITY", nid, f"merger {nid!r} has only one incoming edge")
        if kind is NodeKind.SOURCE and n_in:
            add("V-SRC-HAS-IN", nid, f"source {nid!r} has {n_in} incoming edge(s)")
        if kind is NodeKind.SINK and n_out:
            add("V-SINK-HAS-OUT", nid, f"sink {nid!r} has {n_out} outgoing edge(s)")
        _check_params(add, nid, kind, node.params)

    for eid, edge in graph.edges.items():
        _check_params(add, eid, edge.kind, edge.params)

    found.sort(key=lambda d: (_ORDER[d.rule], d.entity, d.message))
    return found


def _check_params(add, entity: str, kind, params) -> None:
    for name, mandatory in PARAM_SCHEMA[kind].items():
        if mandatory and params.get(name) is None and name not in DEFAULTS:
            add("V-MISSING-PARAM", entity, f"{kind.value} {entity!r} is missing mandatory parameter {name!r}")
    for name, v in params.items():
        if name == "policy" and kind in (NodeKind.SPLITTER, NodeKind.MERGER):
            if v is None:
                add("V-MISSING-PARAM", entity, f"{kind.value} {entity!r} has an unset policy")
                continue
            try:
                RoutingPolicy.parse(v if isinstance(v, str) else "")
            except ValueError:
                add("V-BAD-POLICY", entity, f"unsupported routing policy {v!r} on {entity!r}")
            continue
        if name in PARAM_SCHEMA[kind]:
            problem = _range_problem(name, v)
            if problem:
                add("V-PARAM-RANGE", entity, problem)


def has_errors(diags: list[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diags)


def diagnostics_json(diags: list[Diagnostic]) -> str:
    return json.dumps([d.to_dict() for d in diags], indent=2)


def diagnostics_table(diags: list[Diagnostic]) -> str:
    if not diags:
        return "no findings"
    rows = [("RULE", "SEVERITY", "ENTITY", "MESSAGE")]
    rows += [(d.rule, d.severity.value, d.entity, d.message) for d in diags]
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(f"{r[0]:<{widths[0]}}  {r[1]:<{widths[1]}}  {r[2]:<{widths[2]}}  {r[3]}" for r in rows)
