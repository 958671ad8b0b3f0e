"""Two-step generation client: ask for assumptions, then for an IR text.

The language model is an opaque JSON endpoint. Requests look like
``{mode, description, assumptions, context}`` and replies are either
``{assumptions: [...]}`` or ``{ir_kind, ir_text}``. A replay transport serves
recorded replies from disk so the whole pipeline runs without a network.

Replay layout::

    <dir>/index.json            {"<sha256 of description>": "<case dir>", ...}
    <dir>/<case>/case.json      {"description": ..., "hash": ...}
    <dir>/<case>/reason.json    {"assumptions": [...]}
    <dir>/<case>/gen.fdl        or gen.json (netlist)
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Protocol

import httpx

from .netlist import IRKind


class BridgeError(Exception):
    pass


class TransportError(BridgeError):
    """The endpoint could not be reached or refused the request."""


class ProtocolError(BridgeError):
    """The endpoint answered with something that is not a valid reply."""


class Mode(str, Enum):
    REASON = "Reason"
    GENERATE_IR = "GenerateIR"


@dataclass(frozen=True)
class GenContext:
    api_summary: str = ""
    examples: tuple[str, ...] = ()


@dataclass(frozen=True)
class GenRequest:
    description: str
    prior_assumptions: tuple[str, ...] = ()
    context: GenContext = field(default_factory=GenContext)
    mode: Mode = Mode.REASON

    def __post_init__(self):
        if not self.description or not self.description.strip():
            raise ValueError("description must be non-empty")
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "prior_assumptions", tuple(self.prior_assumptions))

    def to_wire(self) -> dict:
        return {
            "mode": self.mode.value,
            "description": self.description,
            "assumptions": list(self.prior_assumptions),
            "context": {"api_summary": self.context.api_summary, "examples": list(self.context.examples)},
        }


@dataclass(frozen=True)
class GenResponse:
    assumptions: tuple[str, ...] = ()
    ir_text: str | None = None
    ir_kind: IRKind | None = None
    raw: dict = field(default_factory=dict)


def description_hash(description: str) -> str:
    return hashlib.sha256(description.strip().encode("utf-8")).hexdigest()


class Transport(Protocol):
    def send(self, wire: dict) -> dict: ...


class HttpTransport:
    def __init__(self, endpoint: str, api_key: str | None = None, timeout: float = 60.0, client: httpx.Client | None = None):
        self.endpoint = endpoint
        self.headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self.timeout = timeout
        self.client = client

    def send(self, wire: dict) -> dict:
        try:
            if self.client is not None:
                resp = self.client.post(self.endpoint, json=wire, headers=self.headers, timeout=self.timeout)
            else:
                resp = httpx.post(self.endpoint, json=wire, headers=self.headers, timeout=self.timeout)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"reply is not JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise ProtocolError("reply must be a JSON object")
        return body


class ReplayTransport:
    """Serve recorded replies; in strict mode a fixture whose stored hash disagrees is an error."""

    def __init__(self, root: str | Path, strict: bool = True):
        self.root = Path(root)
        self.strict = strict
        index = self.root / "index.json"
        try:
            self.index: dict[str, str] = json.loads(index.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise TransportError(f"cannot read replay index {index}: {exc}") from exc

    def case_dir(self, description: str) -> Path:
        key = description_hash(description)
        name = self.index.get(key)
        if name is None:
            raise TransportError(f"no replay fixture for description hash {key[:12]}")
        case = self.root / name
        if self.strict:
            try:
                meta = json.loads((case / "case.json").read_text(encoding="utf-8"))
            except (OSError, ValueError) as exc:
                raise ProtocolError(f"fixture {name}: unreadable case.json ({exc})") from exc
            if meta.get("hash") != key or description_hash(meta.get("description", "")) != key:
                raise ProtocolError(f"fixture {name}: recorded hash does not match the request")
        return case

    def send(self, wire: dict) -> dict:
        case = self.case_dir(wire["description"])
        if wire["mode"] == Mode.REASON.value:
            path = case / "reason.json"
            try:
                return json.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise TransportError(f"missing {path}") from exc
            except ValueError as exc:
                raise ProtocolError(f"{path}: {exc}") from exc
        for fname, kind in (("gen.fdl", IRKind.DSL), ("gen.json", IRKind.NETLIST)):
            path = case / fname
            if path.exists():
                return {"ir_kind": kind.value, "ir_text": path.read_text(encoding="utf-8")}
        raise TransportError(f"fixture {case.name} has no gen.fdl or gen.json")


def record_case(root: str | Path, name: str, description: str, assumptions: list[str], ir_text: str, ir_kind: IRKind | str) -> Path:
    """Write one replay fixture and register it in the index."""
    root = Path(root)
    case = root / name
    case.mkdir(parents=True, exist_ok=True)
    key = description_hash(description)
    (case / "case.json").write_text(json.dumps({"description": description, "hash": key}, indent=2) + "\n")
    (case / "reason.json").write_text(json.dumps({"assumptions": list(assumptions)}, indent=2) + "\n")
    fname = "gen.fdl" if IRKind(ir_kind) is IRKind.DSL else "gen.json"
    (case / fname).write_text(ir_text)
    index_path = root / "index.json"
    index = json.loads(index_path.read_text()) if index_path.exists() else {}
    index[key] = name
    index_path.write_text(json.dumps(dict(sorted(index.items())), indent=2) + "\n")
    return case


class Bridge:
    def __init__(self, transport: Transport):
        self.transport = transport

    def reason(self, request: GenRequest) -> GenResponse:
        if request.mode is not Mode.REASON:
            raise ValueError("reason() needs a Reason-mode request")
        raw = self.transport.send(request.to_wire())
        items = raw.get("assumptions")
        if not isinstance(items, list) or not all(isinstance(a, str) for a in items):
            raise ProtocolError("Reason reply must carry a list of assumption strings")
        return GenResponse(assumptions=tuple(items), raw=raw)

    def generate_ir(self, request: GenRequest) -> GenResponse:
        if request.mode is not Mode.GENERATE_IR:
            raise ValueError("generate_ir() needs a GenerateIR-mode request")
        raw = self.transport.send(request.to_wire())
        text, kind = raw.get("ir_text"), raw.get("ir_kind")
        if not isinstance(text, str):
            raise ProtocolError("GenerateIR reply must carry ir_text")
        try:
            kind = IRKind(kind)
        except ValueError:
            raise ProtocolError(f"unknown ir_kind {kind!r}") from None
        return GenResponse(ir_text=text, ir_kind=kind, raw=raw)


def from_env(env: dict | None = None) -> Transport:
    """Replay if ``FF_REPLAY_DIR`` is set, otherwise HTTP to ``FF_ENDPOINT``."""
    env = os.environ if env is None else env
    if env.get("FF_REPLAY_DIR"):
        return ReplayTransport(env["FF_REPLAY_DIR"])
    if env.get("FF_ENDPOINT"):
        return HttpTransport(env["FF_ENDPOINT"], env.get("FF_API_KEY"))
    raise TransportError("set FF_REPLAY_DIR or FF_ENDPOINT")


@dataclass(frozen=True)
class SessionState:
    description: str
    assumptions: tuple[str, ...] = ()
    last_ir: GenResponse | None = None
    revision: int = 0
    history: tuple[GenResponse, ...] = ()


def run_session(bridge: Bridge, state: SessionState, context: GenContext | None = None) -> SessionState:
    """Execute both generation steps for the current inputs.

    Assumptions already present on the state are sent along and kept; fresh
    ones from the reasoning step are appended.
    """
    context = context or GenContext()
    reasoned = bridge.reason(GenRequest(state.description, state.assumptions, context, Mode.REASON))
    assumptions = state.assumptions + tuple(a for a in reasoned.assumptions if a not in state.assumptions)
    ir = bridge.generate_ir(GenRequest(state.description, assumptions, context, Mode.GENERATE_IR))
    return replace(state, assumptions=assumptions, last_ir=ir)


def iterate(
    state: SessionState,
    edited_description: str | None = None,
    edited_assumptions: list[str] | None = None,
    rerun: bool = False,
) -> SessionState:
    if edited_description is None and edited_assumptions is None and not rerun:
        raise ValueError("iterate needs an edit or rerun=True")
    history = state.history + ((state.last_ir,) if state.last_ir is not None else ())
    return SessionState(
        description=state.description if edited_description is None else edited_description,
        assumptions=state.assumptions if edited_assumptions is None else tuple(edited_assumptions),
        last_ir=state.last_ir,
        revision=state.revision + 1,
        history=history,
    )
