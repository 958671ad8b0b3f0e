"""Compare a candidate model with ground truth and classify every discrepancy.

Error types:

====  =========================  ==========================================
T1    naming                     case/separator drift, index shift, rename
T2    parameter error            differing value, or value missing (default)
T3    node hallucination         node added or omitted
T4    edge hallucination         edge added or omitted
T5    parameter hallucination    value set where ground truth sets none
T6    hierarchy mismatch         subsystem flattened or node misplaced
T7    syntax                     the candidate text does not load
T8    framework violation        one per Error diagnostic of the candidate
====  =========================  ==========================================

Node matching runs in stages, each on the nodes left over by the previous:
global index-shift detection, exact id, case/separator-folded id, then
structural similarity of neighbourhoods. Edges are matched through the node
correspondence by (source, target, kind); edge ids carry no meaning here, so a
renamed buffer between the right components is not an error.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .model import ModelGraph, Node, node_sort_key, param_equal
from .validate import Diagnostic, Severity, validate


class ErrorType(str, Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T4 = "T4"
    T5 = "T5"
    T6 = "T6"
    T7 = "T7"
    T8 = "T8"


ERROR_NAMES = {
    ErrorType.T1: "Naming",
    ErrorType.T2: "ParamError",
    ErrorType.T3: "NodeHallucination",
    ErrorType.T4: "EdgeHallucination",
    ErrorType.T5: "ParamHallucination",
    ErrorType.T6: "HierarchyMismatch",
    ErrorType.T7: "Syntax",
    ErrorType.T8: "FrameworkViolation",
}


@dataclass(frozen=True)
class ErrorRecord:
    type: ErrorType
    subkind: str
    truth_ref: str | None = None
    cand_ref: str | None = None
    detail: str = ""
    systematic: bool = False

    def to_dict(self) -> dict:
        return {
            "type": self.type.value,
            "subkind": self.subkind,
            "truth_ref": self.truth_ref,
            "cand_ref": self.cand_ref,
            "detail": self.detail,
            "systematic": self.systematic,
        }


@dataclass(frozen=True)
class MatchConfig:
    normalize_case: bool = True
    separator_set: str = "_-"
    shift_detection: bool = True
    structural_match_threshold: float = 0.5
    max_shift: int = 2
    shift_fraction: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.structural_match_threshold <= 1.0:
            raise ValueError("structural_match_threshold must lie in [0, 1]")


@dataclass
class Correspondence:
    nodes: dict[str, str] = field(default_factory=dict)  # truth id -> candidate id
    tags: dict[str, str] = field(default_factory=dict)  # truth id -> case | shift | rename
    shift: int = 0


@dataclass
class DiffReport:
    counts: dict[ErrorType, int]
    records: list[ErrorRecord]
    matched_nodes: list[tuple[str, str]] = field(default_factory=list)
    matched_edges: list[tuple[str, str]] = field(default_factory=list)
    description_mode: str = "Detailed"
    systematic_shift: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "counts": {t.value: self.counts[t] for t in ErrorType},
            "total": self.total,
            "systematic_shift": self.systematic_shift,
            "description_mode": self.description_mode,
            "records": [r.to_dict() for r in self.records],
            "matched_nodes": [list(p) for p in self.matched_nodes],
            "matched_edges": [list(p) for p in self.matched_edges],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _report(records: list[ErrorRecord], **kw) -> DiffReport:
    counts = Counter(r.type for r in records)
    return DiffReport({t: counts.get(t, 0) for t in ErrorType}, records, **kw)


# ---------------------------------------------------------------- matching

_INT_RE = re.compile(r"\d+")


def shift_id(text: str, s: int) -> str:
    """Add ``s`` to every decimal integer embedded in ``text``."""
    return _INT_RE.sub(lambda m: str(int(m.group()) + s), text)


def _folder(config: MatchConfig):
    table = {ord(c): "_" for c in config.separator_set}

    def fold(text: str) -> str:
        text = text.translate(table)
        return text.casefold() if config.normalize_case else text

    return fold


def _signature(graph: ModelGraph, out, inc, nid: str) -> Counter:
    sig = Counter()
    for e in out[nid]:
        sig[("out", e.kind, graph.nodes[e.dst].kind)] += 1
    for e in inc[nid]:
        sig[("in", e.kind, graph.nodes[e.src].kind)] += 1
    return sig


def similarity(a: Counter, b: Counter) -> float:
    """Weighted Jaccard of two neighbourhood signatures (1.0 when both are empty)."""
    union = sum((a | b).values())
    if union == 0:
        return 1.0
    return sum((a & b).values()) / union


def match_nodes(truth: ModelGraph, cand: ModelGraph, config: MatchConfig | None = None) -> Correspondence:
    config = config or MatchConfig()
    fold = _folder(config)
    T = sorted(truth.nodes.values(), key=node_sort_key)
    C = sorted(cand.nodes.values(), key=node_sort_key)
    corr = Correspondence()
    taken: set[str] = set()

    def pair(t: Node, c: Node, tag: str | None):
        corr.nodes[t.id] = c.id
        taken.add(c.id)
        if tag:
            corr.tags[t.id] = tag

    def left() -> list[Node]:
        return [t for t in T if t.id not in corr.nodes]

    if config.shift_detection:
        with_ints = [t for t in T if _INT_RE.search(t.id)]
        index: dict[tuple, str] = {}
        for c in C:
            index.setdefault((fold(c.id), c.kind), c.id)

        def hits(s: int) -> int:
            return sum((fold(shift_id(t.id, s)), t.kind) in index for t in with_ints)

        if with_ints:
            base = hits(0)
            options = [s for k in range(1, config.max_shift + 1) for s in (-k, k)]
            best = max(options, key=lambda s: (hits(s), -abs(s), -s)) if options else 0
            n = hits(best) if options else 0
            if n > base and n >= config.shift_fraction * len(with_ints):
                corr.shift = best
                for t in with_ints:
                    cid = index.get((fold(shift_id(t.id, best)), t.kind))
                    if cid is not None and cid not in taken:
                        pair(t, cand.nodes[cid], "shift")

    for t in left():
        c = cand.nodes.get(t.id)
        if c is not None and c.kind == t.kind and c.id not in taken:
            pair(t, c, None)

    folded: dict[tuple, list[str]] = {}
    for c in C:
        if c.id not in taken:
            folded.setdefault((fold(c.id), c.kind), []).append(c.id)
    for t in left():
        for cid in folded.get((fold(t.id), t.kind), []):
            if cid not in taken:
                pair(t, cand.nodes[cid], "case")
                break

    rest_t = left()
    rest_c = [c for c in C if c.id not in taken]
    if rest_t and rest_c:
        t_out, t_in = truth.adjacency()
        c_out, c_in = cand.adjacency()
        t_sig = {t.id: _signature(truth, t_out, t_in, t.id) for t in rest_t}
        c_sig = {c.id: _signature(cand, c_out, c_in, c.id) for c in rest_c}
        scored = []
        for i, t in enumerate(rest_t):
            for j, c in enumerate(rest_c):
                if c.kind != t.kind:
                    continue
                sim = similarity(t_sig[t.id], c_sig[c.id])
                if sim >= config.structural_match_threshold:
                    scored.append((-sim, i, j))
        scored.sort()
        for _, i, j in scored:
            t, c = rest_t[i], rest_c[j]
            if t.id in corr.nodes or c.id in taken:
                continue
            pair(t, c, "rename")
    return corr


# ---------------------------------------------------------------- classification


def _compare_params(records: list, tparams, cparams, tref: str, cref: str) -> None:
    for name in sorted(set(tparams) | set(cparams)):
        tv, cv = tparams.get(name), cparams.get(name)
        if tv is None and cv is None:
            continue
        if tv is None:
            records.append(ErrorRecord(ErrorType.T5, "T5", tref, cref, f"{name} = {cv!r} not in ground truth"))
        elif cv is None:
            records.append(ErrorRecord(ErrorType.T2, "T2.default", tref, cref, f"{name} unset, expected {tv!r}"))
        elif not param_equal(tv, cv):
            records.append(ErrorRecord(ErrorType.T2, "T2.value", tref, cref, f"{name} = {cv!r}, expected {tv!r}"))


def classify(
    truth: ModelGraph,
    cand: ModelGraph | None,
    correspondence: Correspondence | None = None,
    cand_diagnostics: list[Diagnostic] | None = None,
    parse_outcome: Exception | str | None = None,
    config: MatchConfig | None = None,
    description_mode: str = "Detailed",
) -> DiffReport:
    """Classify all differences between ``truth`` and ``cand``.

    ``parse_outcome`` carries the load failure of the candidate, if any; a
    failed candidate yields exactly one T7 record and nothing else.
    """
    if parse_outcome is not None or cand is None:
        detail = str(parse_outcome) if parse_outcome is not None else "candidate did not load"
        return _report([ErrorRecord(ErrorType.T7, "T7", None, None, detail)], description_mode=description_mode)
    config = config or MatchConfig()
    corr = correspondence if correspondence is not None else match_nodes(truth, cand, config)
    fold = _folder(config)
    records: list[ErrorRecord] = []
    inverse = {c: t for t, c in corr.nodes.items()}

    for tid in sorted(corr.tags, key=lambda i: node_sort_key(truth.nodes[i])):
        tag = corr.tags[tid]
        records.append(
            ErrorRecord(ErrorType.T1, f"T1.{tag}", tid, corr.nodes[tid], f"{tid} -> {corr.nodes[tid]}", tag == "shift")
        )
    for t in sorted(truth.nodes.values(), key=node_sort_key):
        if t.id not in corr.nodes:
            records.append(ErrorRecord(ErrorType.T3, "T3.omitted", t.id, None, f"{t.kind.value} missing"))
    for c in sorted(cand.nodes.values(), key=node_sort_key):
        if c.id not in inverse:
            records.append(ErrorRecord(ErrorType.T3, "T3.added", None, c.id, f"{c.kind.value} not in ground truth"))

    by_ends: dict[tuple, list[str]] = {}
    for eid in sorted(cand.edges):
        e = cand.edges[eid]
        by_ends.setdefault((e.src, e.dst, e.kind), []).append(eid)
    used: set[str] = set()
    matched_edges: list[tuple[str, str]] = []
    for tid in sorted(truth.edges):
        te = truth.edges[tid]
        src, dst = corr.nodes.get(te.src), corr.nodes.get(te.dst)
        options = [c for c in by_ends.get((src, dst, te.kind), []) if c not in used] if src and dst else []
        if not options:
            records.append(ErrorRecord(ErrorType.T4, "T4.omitted", tid, None, f"{te.src} -> {te.dst}"))
            continue
        cid = next((c for c in options if fold(c) == fold(tid)), options[0])
        used.add(cid)
        matched_edges.append((tid, cid))
    for cid in sorted(cand.edges):
        if cid not in used:
            ce = cand.edges[cid]
            records.append(ErrorRecord(ErrorType.T4, "T4.added", None, cid, f"{ce.src} -> {ce.dst}"))

    matched_nodes = sorted(corr.nodes.items(), key=lambda p: node_sort_key(truth.nodes[p[0]]))
    for tid, cid in matched_nodes:
        _compare_params(records, truth.nodes[tid].params, cand.nodes[cid].params, tid, cid)
    for tid, cid in matched_edges:
        _compare_params(records, truth.edges[tid].params, cand.edges[cid].params, tid, cid)

    for tid, cid in matched_nodes:
        ts = tuple(fold(shift_id(s, corr.shift)) for s in truth.nodes[tid].scope)
        cs = tuple(fold(s) for s in cand.nodes[cid].scope)
        if ts == cs:
            continue
        sub = "T6.flattened" if ts and not cs else "T6.misplaced"
        records.append(ErrorRecord(ErrorType.T6, sub, tid, cid, f"scope {'/'.join(cs) or '<root>'}, expected {'/'.join(ts) or '<root>'}"))

    diags = cand_diagnostics if cand_diagnostics is not None else validate(cand)
    for d in diags:
        if d.severity is Severity.ERROR:
            records.append(ErrorRecord(ErrorType.T8, f"T8.{d.rule}", None, d.entity, d.message))

    return _report(
        records,
        matched_nodes=matched_nodes,
        matched_edges=matched_edges,
        description_mode=description_mode,
        systematic_shift=corr.shift,
    )


def diff(truth: ModelGraph, cand: ModelGraph, config: MatchConfig | None = None) -> DiffReport:
    config = config or MatchConfig()
    return classify(truth, cand, match_nodes(truth, cand, config), config=config)


def diff_text(truth: ModelGraph, cand_text: str, kind=None, config: MatchConfig | None = None) -> DiffReport:
    """Diff against a candidate IR text; load failures become a T7 report."""
    from .loader import LOAD_ERRORS, load_model

    try:
        cand = load_model(cand_text, kind, strict=False)
    except LOAD_ERRORS as exc:
        return classify(truth, None, parse_outcome=exc)
    return diff(truth, cand, config)


CSV_COLUMNS = ["label", "mode"] + [t.value for t in ErrorType] + ["total"]


def report_csv(reports: list[DiffReport], labels: list[str]) -> str:
    if len(reports) != len(labels):
        raise ValueError("one label per report")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for label, r in zip(labels, reports):
        w.writerow([label, r.description_mode] + [r.counts[t] for t in ErrorType] + [r.total])
    return buf.getvalue()
