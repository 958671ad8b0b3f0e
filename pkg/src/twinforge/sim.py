"""Discrete-event execution of a validated model graph.

Semantics
---------
* A source creates items separated by ``inter_arrival`` draws; the first item
  appears after one draw. ``inter_arrival == 0`` means an always-available
  source that pushes whenever its outgoing edge has room. A timed source that
  finds its edge full holds the item and pauses generation until it is
  released.
* Buffers are finite FIFOs. Conveyors are finite FIFOs whose items become
  available downstream ``transit_delay`` seconds after entering.
* A machine serves up to ``work_capacity`` items (default 1) for a sampled
  ``delay`` each. Machines block after service: a finished item whose
  downstream edge is full stays on the machine and occupies its slot.
* Nodes with several outgoing edges route by policy. Round-robin is strict
  (the next edge in canonical order, waiting if it is full); first-available
  takes the first non-full edge. Nodes with several incoming edges pull
  round-robin (scanning from the edge after the last one served, skipping
  empty ones) or first-available (canonical order). Splitters and mergers hold
  at most one item and take no time.
* Sinks absorb immediately.

Events are ordered by (time, kind priority, entity, insertion); kind priority
is finish < unblock < arrive < start. Each stochastic element draws from its
own PRNG stream derived from the master seed and the element id, so adding a
component does not perturb the draws of the others.

Statistics cover ``[warmup, horizon]``: throughput and cycle times count items
absorbed at or after ``warmup``; utilization and WIP are time averages over
the window.
"""

from __future__ import annotations

import csv
import hashlib
import heapq
import io
import json
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .model import DistSpec, Family, ModelGraph, NodeKind, RoutingPolicy, canonical_form, node_sort_key
from .validate import Severity, validate


class SimError(Exception):
    pass


class PreconditionFailed(SimError):
    """The graph has Error-severity diagnostics."""


class ConfigError(SimError, ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    warmup: float = 0.0
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigError("horizon must be a positive finite number")
        if not (0 <= self.warmup < self.horizon):
            raise ConfigError("warmup must satisfy 0 <= warmup < horizon")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TraceRecord:
    time: float
    entity: str
    event: str  # arrive | start | finish | block | unblock | exit
    item: int


@dataclass
class SimReport:
    throughput: dict[str, float]
    cycle_time_mean: float
    cycle_time_p95: float
    utilization: dict[str, float]
    wip: float
    completed: int
    created: int
    horizon: float
    warmup: float
    trace: list[TraceRecord] | None = field(default=None, repr=False)

    @property
    def total_throughput(self) -> float:
        return sum(self.throughput.values())

    def to_dict(self, with_trace: bool = False) -> dict:
        d = asdict(self)
        d.pop("trace")
        if with_trace and self.trace is not None:
            d["trace"] = [asdict(r) for r in self.trace]
        return d

    def to_json(self, with_trace: bool = False) -> str:
        return json.dumps(self.to_dict(with_trace), indent=2, allow_nan=True)


def trace_csv(trace: list[TraceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "entity", "event"])
    for r in trace:
        w.writerow([repr(float(r.time)), r.entity, r.event])
    return buf.getvalue()


def trace_json(trace: list[TraceRecord]) -> str:
    return json.dumps([asdict(r) for r in trace])


# ---------------------------------------------------------------- sampling


def stream(seed: int, element: str) -> np.random.Generator:
    """PRNG stream for one element: PCG64 keyed by (seed, blake2b-64 of the element id)."""
    key = int.from_bytes(hashlib.blake2b(element.encode(), digest_size=8).digest(), "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))


def sample(dist: DistSpec | float | int, rng: np.random.Generator) -> float:
    """One draw; advances ``rng`` in place. Plain numbers are deterministic."""
    if not isinstance(dist, DistSpec):
        return float(dist)
    f, p = dist.family, dist.params
    if f is Family.DETERMINISTIC:
        return p[0]
    if f is Family.EXPONENTIAL:
        return float(rng.exponential(1.0 / p[0]))
    if f is Family.NORMAL:
        return float(rng.normal(p[0], p[1]))
    if f is Family.LOGNORMAL:
        return float(rng.lognormal(p[0], p[1]))
    if f is Family.UNIFORM:
        return p[0] if p[0] == p[1] else float(rng.uniform(p[0], p[1]))
    return float(rng.gamma(p[0], p[1]))


# ---------------------------------------------------------------- kernel

_FINISH, _UNBLOCK, _ARRIVE, _START = 0, 1, 2, 3
_MAX_MOVES_PER_INSTANT = 1_000_000


def _is_zero(v) -> bool:
    if isinstance(v, DistSpec):
        return v.family is Family.DETERMINISTIC and v.params[0] == 0
    return v == 0


def _policy(params) -> RoutingPolicy:
    v = params.get("policy")
    return RoutingPolicy.parse(v) if isinstance(v, str) else RoutingPolicy.ROUND_ROBIN


class _Edge:
    __slots__ = ("id", "src", "dst", "capacity", "transit", "items", "order")

    def __init__(self, e, order: int, src: int, dst: int):
        self.id = e.id
        self.src = src
        self.dst = dst
        self.order = order
        self.capacity = int(e.params["capacity"])
        self.transit = float(e.params.get("transit_delay") or 0.0)
        self.items: deque = deque()  # (item, ready_time)

    def has_room(self) -> bool:
        return len(self.items) < self.capacity

    def head_ready(self, now: float) -> bool:
        return bool(self.items) and self.items[0][1] <= now


class _Node:
    __slots__ = ("id", "kind", "order", "outs", "ins", "policy", "out_ptr", "in_ptr", "held", "held_marked",
                 "capacity", "in_service", "blocked", "delay", "rng", "always")

    def __init__(self, n, order: int):
        self.id = n.id
        self.kind = n.kind
        self.order = order
        self.outs: list[_Edge] = []
        self.ins: list[_Edge] = []
        self.policy = _policy(n.params)
        self.out_ptr = 0
        self.in_ptr = 0
        self.held = None
        self.held_marked = False
        self.capacity = int(n.params.get("work_capacity") or 1)
        self.in_service = 0
        self.blocked: deque = deque()  # [item, marked]
        self.delay = n.params.get("delay") if n.kind is NodeKind.MACHINE else n.params.get("inter_arrival")
        self.rng = None
        self.always = n.kind is NodeKind.SOURCE and _is_zero(self.delay)


class _Kernel:
    def __init__(self, graph: ModelGraph, config: SimConfig):
        g = canonical_form(graph)
        self.cfg = config
        self.nodes: list[_Node] = []
        index = {}
        for i, n in enumerate(sorted(g.nodes.values(), key=node_sort_key)):
            node = _Node(n, i)
            if n.kind in (NodeKind.MACHINE, NodeKind.SOURCE):
                node.rng = stream(config.seed, n.id)
            self.nodes.append(node)
            index[n.id] = node
        self.edges: list[_Edge] = []
        for j, e in enumerate(sorted(g.edges.values(), key=lambda e: e.id)):
            edge = _Edge(e, len(self.nodes) + j, index[e.src].order, index[e.dst].order)
            self.edges.append(edge)
            index[e.src].outs.append(edge)
            index[e.dst].ins.append(edge)

        self.now = 0.0
        self.events: list = []
        self.seq = 0
        self.dirty: list[int] = []
        self.dirty_set: set[int] = set()
        self.trace: list[TraceRecord] | None = [] if config.trace else None

        self.next_item = 0
        self.born: dict[int, float] = {}
        self.absorbed = 0
        self.exits: dict[str, list[float]] = {n.id: [] for n in self.nodes if n.kind is NodeKind.SINK}
        self.live = 0
        self.wip_area = 0.0
        self.busy_area = {n.id: 0.0 for n in self.nodes if n.kind is NodeKind.MACHINE}
        self.last_t = 0.0

    # bookkeeping
    def _window(self, t: float) -> float:
        return min(max(t, self.cfg.warmup), self.cfg.horizon)

    def _advance_clock(self, t: float) -> None:
        dt = self._window(t) - self._window(self.last_t)
        if dt > 0:
            self.wip_area += self.live * dt
            for n in self.nodes:
                if n.kind is NodeKind.MACHINE and n.in_service:
                    self.busy_area[n.id] += n.in_service * dt
        self.last_t = t
        self.now = t

    def _log(self, entity: str, event: str, item: int) -> None:
        if self.trace is not None:
            self.trace.append(TraceRecord(self.now, entity, event, item))

    def _schedule(self, t: float, prio: int, entity: int, kind: str, payload=None) -> None:
        heapq.heappush(self.events, (t, prio, entity, self.seq, kind, payload))
        self.seq += 1

    def _mark(self, node_order: int) -> None:
        if node_order not in self.dirty_set:
            self.dirty_set.add(node_order)
            heapq.heappush(self.dirty, node_order)

    # edge moves
    def _put(self, edge: _Edge, item: int) -> None:
        edge.items.append((item, self.now + edge.transit))
        self._log(edge.id, "arrive", item)
        if edge.transit > 0:
            self._schedule(self.now + edge.transit, _ARRIVE, edge.order, "ready", edge)
        else:
            self._mark(edge.dst)

    def _take(self, edge: _Edge) -> int:
        item, _ = edge.items.popleft()
        self._log(edge.id, "exit", item)
        self._mark(edge.src)
        return item

    def _route(self, node: _Node) -> _Edge | None:
        outs = node.outs
        if not outs:
            return None
        if node.policy is RoutingPolicy.FIRST_AVAILABLE:
            return next((e for e in outs if e.has_room()), None)
        e = outs[node.out_ptr % len(outs)]
        return e if e.has_room() else None

    def _push(self, node: _Node, item: int) -> bool:
        e = self._route(node)
        if e is None:
            return False
        if node.policy is RoutingPolicy.ROUND_ROBIN:
            node.out_ptr = (node.out_ptr + 1) % len(node.outs)
        self._put(e, item)
        return True

    def _pull(self, node: _Node) -> int | None:
        ins = node.ins
        k = len(ins)
        if not k:
            return None
        if node.policy is RoutingPolicy.FIRST_AVAILABLE:
            for e in ins:
                if e.head_ready(self.now):
                    return self._take(e)
            return None
        for step in range(k):
            idx = (node.in_ptr + step) % k
            if ins[idx].head_ready(self.now):
                node.in_ptr = (idx + 1) % k
                return self._take(ins[idx])
        return None

    # node behaviour
    def _progress(self, n: _Node) -> None:
        kind = n.kind
        if kind is NodeKind.SOURCE:
            self._progress_source(n)
        elif kind is NodeKind.MACHINE:
            self._progress_machine(n)
        elif kind is NodeKind.SINK:
            while True:
                item = self._pull(n)
                if item is None:
                    break
                self._log(n.id, "exit", item)
                self.live -= 1
                self.absorbed += 1
                if self.now >= self.cfg.warmup:
                    self.exits[n.id].append(self.now - self.born.pop(item))
                else:
                    self.born.pop(item)
        else:
            self._progress_router(n)

    def _create(self, n: _Node) -> int:
        item = self.next_item
        self.next_item += 1
        self.born[item] = self.now
        self.live += 1
        self._log(n.id, "arrive", item)
        return item

    def _progress_source(self, n: _Node) -> None:
        if n.always:
            while self._route(n) is not None:
                self._push(n, self._create(n))
            return
        if n.held is not None and self._push(n, n.held):
            if n.held_marked:
                self._log(n.id, "unblock", n.held)
            n.held = None
            n.held_marked = False
            self._schedule_generation(n)
        if n.held is not None and not n.held_marked:
            self._log(n.id, "block", n.held)
            n.held_marked = True

    def _schedule_generation(self, n: _Node) -> None:
        dt = max(0.0, sample(n.delay, n.rng))
        self._schedule(self.now + dt, _ARRIVE, n.order, "generate", n)

    def _progress_machine(self, n: _Node) -> None:
        while n.blocked:
            entry = n.blocked[0]
            if not self._push(n, entry[0]):
                break
            n.blocked.popleft()
            if entry[1]:
                self._log(n.id, "unblock", entry[0])
        for entry in n.blocked:
            if not entry[1]:
                entry[1] = True
                self._log(n.id, "block", entry[0])
        while n.in_service + len(n.blocked) < n.capacity:
            item = self._pull(n)
            if item is None:
                break
            self._log(n.id, "start", item)
            n.in_service += 1
            dt = max(0.0, sample(n.delay, n.rng))
            self._schedule(self.now + dt, _FINISH, n.order, "finish", (n, item))

    def _progress_router(self, n: _Node) -> None:
        while True:
            if n.held is not None:
                if not self._push(n, n.held):
                    if not n.held_marked:
                        n.held_marked = True
                        self._log(n.id, "block", n.held)
                    return
                if n.held_marked:
                    self._log(n.id, "unblock", n.held)
                n.held = None
                n.held_marked = False
            item = self._pull(n)
            if item is None:
                return
            self._log(n.id, "start", item)
            n.held = item

    def _settle(self) -> None:
        moves = 0
        while self.dirty:
            order = heapq.heappop(self.dirty)
            self.dirty_set.discard(order)
            self._progress(self.nodes[order])
            moves += 1
            if moves > _MAX_MOVES_PER_INSTANT:
                raise SimError(f"no progress in time at t={self.now}: zero-delay cycle")

    def run(self) -> SimReport:
        for n in self.nodes:
            if n.kind is NodeKind.SOURCE and n.outs:
                if n.always:
                    self._mark(n.order)
                else:
                    self._schedule_generation(n)
        self._settle()
        horizon = self.cfg.horizon
        while self.events and self.events[0][0] <= horizon:
            t, _, _, _, kind, payload = heapq.heappop(self.events)
            self._advance_clock(t)
            if kind == "finish":
                n, item = payload
                n.in_service -= 1
                self._log(n.id, "finish", item)
                n.blocked.append([item, False])
                self._mark(n.order)
            elif kind == "generate":
                payload.held = self._create(payload)
                payload.held_marked = False
                self._mark(payload.order)
            elif kind == "ready":
                self._mark(payload.dst)
            self._settle()
        self._advance_clock(horizon)
        return self._report()

    def _report(self) -> SimReport:
        cfg = self.cfg
        span = cfg.horizon - cfg.warmup
        cycles = [c for v in self.exits.values() for c in v]
        util = {}
        for n in self.nodes:
            if n.kind is NodeKind.MACHINE:
                util[n.id] = min(1.0, self.busy_area[n.id] / (n.capacity * span))
        return SimReport(
            throughput={k: len(v) / span for k, v in self.exits.items()},
            cycle_time_mean=float(np.mean(cycles)) if cycles else math.nan,
            cycle_time_p95=float(np.percentile(cycles, 95)) if cycles else math.nan,
            utilization=util,
            wip=self.wip_area / span,
            completed=len(cycles),
            created=self.next_item,
            horizon=cfg.horizon,
            warmup=cfg.warmup,
            trace=self.trace,
        )


def simulate(graph: ModelGraph, config: SimConfig, check: bool = True) -> SimReport:
    """Run one replication. Raises :class:`PreconditionFailed` on invalid graphs."""
    if check:
        errors = [d for d in validate(graph) if d.severity is Severity.ERROR]
        if errors:
            raise PreconditionFailed(f"{len(errors)} validation error(s), first: {errors[0].rule} on {errors[0].entity}")
    return _Kernel(graph, config).run()


def simulate_many(graph: ModelGraph, config: SimConfig, seeds: list[int], workers: int = 4) -> list[SimReport]:
    """Independent replications, one per seed, run on a thread pool."""
    configs = [SimConfig(config.horizon, config.warmup, s, config.trace) for s in seeds]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda c: simulate(graph, c), configs))


def little_check(report: SimReport, arrival_rate: float, eps: float = 1e-12) -> dict:
    """Compare time-average WIP against arrival rate times mean cycle time."""
    L = report.wip
    if report.completed == 0 or math.isnan(report.cycle_time_mean):
        return {"L": L, "lambda_W": math.nan, "rel_err": math.nan, "defined": False}
    lw = arrival_rate * report.cycle_time_mean
    return {"L": L, "lambda_W": lw, "rel_err": abs(L - lw) / max(L, eps), "defined": True}


def check_trace(graph: ModelGraph, trace: list[TraceRecord]) -> list[str]:
    """Replay a trace and report violated invariants (empty list when clean).

    Checks nondecreasing time, edge occupancy within capacity, per-item
    lifecycle order, and item conservation (created = in system + absorbed).
    """
    problems: list[str] = []
    cap = {e.id: int(e.params["capacity"]) for e in graph.edges.values()}
    edge_dst = {e.id: e.dst for e in graph.edges.values()}
    kinds = {n.id: n.kind for n in graph.nodes.values()}
    occupancy = {e: 0 for e in cap}
    where: dict[int, str] = {}
    created = absorbed = 0
    last = -math.inf
    for i, r in enumerate(trace):
        if r.time < last:
            problems.append(f"record {i}: time decreases")
        last = r.time
        if r.entity in cap:
            if r.event == "arrive":
                if where.get(r.item) in cap:
                    problems.append(f"record {i}: item {r.item} enters {r.entity} while on {where[r.item]}")
                occupancy[r.entity] += 1
                where[r.item] = r.entity
                if occupancy[r.entity] > cap[r.entity]:
                    problems.append(f"record {i}: {r.entity} over capacity")
            elif r.event == "exit":
                if where.get(r.item) != r.entity:
                    problems.append(f"record {i}: item {r.item} leaves {r.entity} without being on it")
                occupancy[r.entity] -= 1
                where[r.item] = edge_dst[r.entity]
        elif kinds.get(r.entity) is NodeKind.SOURCE and r.event == "arrive":
            created += 1
            where[r.item] = r.entity
        elif kinds.get(r.entity) is NodeKind.SINK and r.event == "exit":
            if where.get(r.item) != r.entity:
                problems.append(f"record {i}: item {r.item} absorbed by {r.entity} out of order")
            absorbed += 1
            where.pop(r.item, None)
        if created - absorbed != len(where):
            problems.append(f"record {i}: conservation broken")
    return problems
