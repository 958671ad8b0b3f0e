"""Compact model-description language (``.fdl``) and its elaborator.

Regular structure is written once with loops and subsystems and expanded into
a flat :class:`~twinforge.model.ModelGraph`::

    source SRC { inter_arrival = exp(0.5) }
    sink SINK
    for i in 1..6 { machine "M{i}" { delay = 2.0 } }
    connect SRC -> M1 via buffer B0 { capacity = 10 }
    for i in 1..5 { connect "M{i}" -> "M{i+1}" via buffer "B{i}" { capacity = 10 } }
    connect M5 -> SINK via buffer B5 { capacity = 10 }

Grammar (EBNF)::

    program   = { stmt | subsystem } ;
    stmt      = node | edge | connect | for | inst | expose ;
    node      = ("source"|"sink"|"machine"|"split"|"merge") name [params] ;
    edge      = ("buffer"|"conveyor") name [params] ;
    connect   = "connect" ref "->" ref ["via" (inline | ref)] ;
    inline    = ("buffer"|"conveyor") [name] [params] ;
    for       = "for" IDENT "in" expr ".." expr "{" {stmt} "}" ;
    subsystem = "subsystem" IDENT "(" [IDENT {"," IDENT}] ")" "{" {stmt} "}" ;
    inst      = "inst" name "=" IDENT "(" [expr {"," expr}] ")" ;
    expose    = "expose" PORT ref ;           (* only inside a subsystem *)
    params    = "{" [IDENT "=" expr {[","] IDENT "=" expr}] "}" ;
    name      = IDENT | STRING ;              (* STRING may hold {expr} holes *)
    ref       = name ["." PORT] ;
    PORT      = any identifier, keywords included (e.g. ``in``, ``out``) ;
    expr      = term {("+"|"-") term} ;
    term      = NUMBER | IDENT | STRING | "-" term | "(" expr ")"
              | DISTNAME "(" expr {"," expr} ")" ;

Ranges are half-open: ``0..3`` yields 0, 1, 2. ``connect`` is directed.
Statements may be separated by ``;``.
Distribution literals are ``exp(rate)``, ``normal(mean, std)``,
``lognormal(mu, sigma)``, ``uniform(low, high)``, ``gamma(shape, scale)`` and
``det(value)``; a bare number is a deterministic value. ``#`` starts a comment.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Any, Union

from .model import (
    Defect,
    DistSpec,
    Edge,
    EdgeKind,
    Family,
    GraphBuilder,
    ModelGraph,
    Node,
    NodeKind,
    RoutingPolicy,
    ScopePath,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class DslSyntaxError(ValueError):
    def __init__(self, span: SourceSpan | None, message: str):
        self.span = span
        self.message = message
        super().__init__(f"{span}: {message}" if span else message)


class UndefinedName(DslSyntaxError):
    pass


class ElaborationError(ValueError):
    def __init__(self, span: SourceSpan | None, message: str):
        self.span = span
        self.message = message
        super().__init__(f"{span}: {message}" if span else message)


NODE_KEYWORDS = {
    "source": NodeKind.SOURCE,
    "sink": NodeKind.SINK,
    "machine": NodeKind.MACHINE,
    "split": NodeKind.SPLITTER,
    "merge": NodeKind.MERGER,
}
EDGE_KEYWORDS = {"buffer": EdgeKind.BUFFER, "conveyor": EdgeKind.CONVEYOR}
KEYWORDS = set(NODE_KEYWORDS) | set(EDGE_KEYWORDS) | {"connect", "via", "for", "in", "subsystem", "inst", "expose"}
DIST_NAMES = {
    "det": Family.DETERMINISTIC,
    "exp": Family.EXPONENTIAL,
    "normal": Family.NORMAL,
    "lognormal": Family.LOGNORMAL,
    "uniform": Family.UNIFORM,
    "gamma": Family.GAMMA,
}
DIST_KEYWORD = {f: n for n, f in DIST_NAMES.items()}
# bare words accepted as text values when no variable of that name is bound
SYMBOLS = {p.value for p in RoutingPolicy} | {"ROUND_ROBIN", "FIRST_AVAILABLE"}

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


# ---------------------------------------------------------------- AST


@dataclass(frozen=True)
class Num:
    value: Union[int, float]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Symbol:
    text: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class DistLit:
    family: Family
    args: tuple["Expr", ...]


@dataclass(frozen=True)
class Template:
    """A name or text with ``{expr}`` holes; parts are ``str`` or expressions."""

    parts: tuple

    def is_plain(self) -> bool:
        return all(isinstance(p, str) for p in self.parts)


@dataclass(frozen=True)
class Text:
    template: Template


Expr = Union[Num, Var, Symbol, BinOp, Neg, DistLit, Text]


@dataclass(frozen=True)
class Ref:
    name: Template
    port: str | None = None


@dataclass(frozen=True)
class DeclareNode:
    kind: NodeKind
    name: Template
    params: tuple[tuple[str, Expr], ...]
    span: SourceSpan = field(compare=False, default=None)


@dataclass(frozen=True)
class DeclareEdge:
    kind: EdgeKind
    name: Template | None
    params: tuple[tuple[str, Expr], ...]
    span: SourceSpan = field(compare=False, default=None)


@dataclass(frozen=True)
class Connect:
    src: Ref
    dst: Ref
    via: Union[Ref, DeclareEdge, None]
    span: SourceSpan = field(compare=False, default=None)


@dataclass(frozen=True)
class ForLoop:
    var: str
    lo: Expr
    hi: Expr
    body: tuple["Stmt", ...]
    span: SourceSpan = field(compare=False, default=None)


@dataclass(frozen=True)
class Instantiate:
    subsystem: str
    name: Template
    args: tuple[Expr, ...]
    span: SourceSpan = field(compare=False, default=None)


@dataclass(frozen=True)
class Expose:
    port: str
    ref: Ref
    span: SourceSpan = field(compare=False, default=None)


Stmt = Union[DeclareNode, DeclareEdge, Connect, ForLoop, Instantiate, Expose]


@dataclass(frozen=True)
class SubsystemDef:
    name: str
    formals: tuple[str, ...]
    body: tuple[Stmt, ...]
    span: SourceSpan = field(compare=False, default=None)

    @property
    def ports(self) -> dict[str, Ref]:
        return {s.port: s.ref for s in self.body if isinstance(s, Expose)}


@dataclass(frozen=True)
class IRProgram:
    statements: tuple[Stmt, ...]
    subsystem_defs: dict[str, SubsystemDef]
    # definition order, so formatting preserves the source layout
    order: tuple[Union[str, int], ...] = ()


def statement_count(program: IRProgram) -> int:
    def count(stmts) -> int:
        return sum(1 + (count(s.body) if isinstance(s, ForLoop) else 0) for s in stmts)

    return count(program.statements) + sum(1 + count(d.body) for d in program.subsystem_defs.values())


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<number>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|\.\.|[{}()=,;.+\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | string | ident | op | eof
    text: str
    span: SourceSpan


def _span(src: str, start: int, end: int) -> SourceSpan:
    line = src.count("\n", 0, start) + 1
    col = start - (src.rfind("\n", 0, start) + 1) + 1
    return SourceSpan(line, col, start, end)


def tokenize(src: str) -> list[Token]:
    line_starts = [0] + [m.end() for m in re.finditer("\n", src)]

    def span(start: int, end: int) -> SourceSpan:
        line = bisect_right(line_starts, start)
        return SourceSpan(line, start - line_starts[line - 1] + 1, start, end)

    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            raise DslSyntaxError(span(pos, pos + 1), f"unexpected character {src[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), span(m.start(), m.end())))
        pos = m.end()
    tokens.append(Token("eof", "", span(len(src), len(src))))
    return tokens


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.bound: list[set[str]] = [set()]
        self.in_subsystem = False
        self.inst_refs: list[tuple[str, SourceSpan, str | None]] = []
        self.owner: str | None = None

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str, what: str | None = None) -> Token:
        if not self.at(text):
            self.fail(f"expected {what or repr(text)}, found {self.describe(self.tok)}")
        return self.advance()

    def expect_ident(self, what: str) -> Token:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            self.fail(f"expected {what}, found {self.describe(self.tok)}")
        return self.advance()

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, message: str, span: SourceSpan | None = None):
        raise DslSyntaxError(span or self.tok.span, message)

    def is_bound(self, name: str) -> bool:
        return any(name in s for s in self.bound)

    # program
    def program(self) -> IRProgram:
        stmts: list[Stmt] = []
        defs: dict[str, SubsystemDef] = {}
        order: list = []
        while self.tok.kind != "eof":
            if self.at(";"):
                self.advance()
                continue
            if self.at("subsystem"):
                d = self.subsystem()
                if d.name in defs:
                    self.fail(f"subsystem {d.name!r} defined twice", d.span)
                defs[d.name] = d
                order.append(d.name)
            else:
                stmts.append(self.statement())
                order.append(len(stmts) - 1)
        for name, span, owner in self.inst_refs:
            if name not in defs:
                raise UndefinedName(span, f"undefined subsystem {name!r}")
        self._check_recursion(defs)
        return IRProgram(tuple(stmts), defs, tuple(order))

    def _check_recursion(self, defs: dict[str, SubsystemDef]) -> None:
        calls: dict[str, set[str]] = {n: set() for n in defs}
        for name, _, owner in self.inst_refs:
            if owner is not None:
                calls[owner].add(name)
        state: dict[str, int] = {}

        def visit(n: str):
            state[n] = 1
            for m in sorted(calls[n]):
                if state.get(m) == 1:
                    raise DslSyntaxError(defs[n].span, f"subsystem {n!r} instantiates itself recursively")
                if m not in state:
                    visit(m)
            state[n] = 2

        for n in sorted(defs):
            if n not in state:
                visit(n)

    def subsystem(self) -> SubsystemDef:
        start = self.advance().span
        if self.in_subsystem:
            self.fail("subsystems must be defined at top level", start)
        name = self.expect_ident("subsystem name").text
        self.expect("(")
        formals: list[str] = []
        while not self.at(")"):
            formals.append(self.expect_ident("parameter name").text)
            if not self.at(")"):
                self.expect(",", "',' or ')'")
        self.expect(")")
        self.in_subsystem = True
        self.owner = name
        self.bound.append(set(formals))
        body = self.block()
        self.bound.pop()
        self.in_subsystem = False
        self.owner = None
        return SubsystemDef(name, tuple(formals), tuple(body), start)

    def block(self) -> list[Stmt]:
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated block, expected '}'")
            if self.at(";"):
                self.advance()
                continue
            body.append(self.statement())
        self.advance()
        return body

    def statement(self) -> Stmt:
        t = self.tok
        if t.kind != "ident":
            self.fail(f"expected a statement, found {self.describe(t)}")
        if t.text in NODE_KEYWORDS:
            self.advance()
            name = self.name("component name")
            return DeclareNode(NODE_KEYWORDS[t.text], name, self.params(), t.span)
        if t.text in EDGE_KEYWORDS:
            self.advance()
            name = self.name("edge name")
            return DeclareEdge(EDGE_KEYWORDS[t.text], name, self.params(), t.span)
        if t.text == "connect":
            self.advance()
            src = self.ref()
            self.expect("->", "'->'")
            dst = self.ref()
            via = None
            if self.at("via"):
                self.advance()
                if self.tok.kind == "ident" and self.tok.text in EDGE_KEYWORDS:
                    kt = self.advance()
                    name = self.name("edge name") if self.tok.kind in ("ident", "string") and not self._keyword() else None
                    via = DeclareEdge(EDGE_KEYWORDS[kt.text], name, self.params(), kt.span)
                else:
                    via = self.ref()
            return Connect(src, dst, via, t.span)
        if t.text == "for":
            self.advance()
            var = self.expect_ident("loop variable").text
            self.expect("in")
            lo = self.expr()
            self.expect("..", "'..'")
            hi = self.expr()
            self.bound.append({var})
            body = self.block()
            self.bound.pop()
            return ForLoop(var, lo, hi, tuple(body), t.span)
        if t.text == "inst":
            self.advance()
            name = self.name("instance name")
            self.expect("=")
            sub = self.expect_ident("subsystem name")
            self.inst_refs.append((sub.text, sub.span, self.owner if self.in_subsystem else None))
            self.expect("(")
            args = []
            while not self.at(")"):
                args.append(self.expr())
                if not self.at(")"):
                    self.expect(",", "',' or ')'")
            self.expect(")")
            return Instantiate(sub.text, name, tuple(args), t.span)
        if t.text == "expose":
            if not self.in_subsystem:
                self.fail("'expose' is only allowed inside a subsystem")
            self.advance()
            port = self.port_name()
            return Expose(port, self.ref(), t.span)
        self.fail(f"expected a statement, found {self.describe(t)}")

    def _keyword(self) -> bool:
        return self.tok.kind == "ident" and self.tok.text in KEYWORDS

    def params(self) -> tuple[tuple[str, Expr], ...]:
        if not self.at("{"):
            return ()
        self.advance()
        items: list[tuple[str, Expr]] = []
        seen = set()
        while not self.at("}"):
            key = self.expect_ident("parameter name")
            if key.text in seen:
                self.fail(f"parameter {key.text!r} given twice", key.span)
            seen.add(key.text)
            self.expect("=")
            items.append((key.text, self.expr()))
            if self.at(","):
                self.advance()
        self.advance()
        return tuple(items)

    def name(self, what: str) -> Template:
        t = self.tok
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            return Template((t.text,))
        if t.kind == "string":
            self.advance()
            return self.template(t)
        self.fail(f"expected {what}, found {self.describe(t)}")

    def ref(self) -> Ref:
        name = self.name("component reference")
        port = None
        if self.at("."):
            self.advance()
            port = self.port_name()
        return Ref(name, port)

    def port_name(self) -> str:
        # ports live in their own namespace, so keywords such as ``in`` are fine here
        if self.tok.kind != "ident":
            self.fail(f"expected port name, found {self.describe(self.tok)}")
        return self.advance().text

    def template(self, t: Token) -> Template:
        body = t.text[1:-1]
        base = t.span.start + 1
        parts: list = []
        pos = 0
        while pos < len(body):
            open_ = body.find("{", pos)
            if open_ < 0:
                parts.append(_unescape(body[pos:]))
                break
            if open_ > pos:
                parts.append(_unescape(body[pos:open_]))
            close = body.find("}", open_)
            if close < 0:
                self.fail("unclosed '{' in name template", t.span)
            inner = body[open_ + 1 : close]
            sub = _Parser.__new__(_Parser)
            sub.src = self.src
            sub.toks = [
                Token(k.kind, k.text, _span(self.src, k.span.start + base + open_ + 1, k.span.end + base + open_ + 1))
                for k in tokenize(inner)
            ]
            sub.i = 0
            sub.bound = self.bound
            sub.in_subsystem = self.in_subsystem
            sub.inst_refs = self.inst_refs
            sub.owner = self.owner
            if sub.tok.kind == "eof":
                self.fail("empty '{}' in name template", t.span)
            parts.append(sub.expr())
            if sub.tok.kind != "eof":
                sub.fail(f"unexpected {sub.describe(sub.tok)} in name template")
            pos = close + 1
        return Template(tuple(parts))

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Num(float(t.text) if any(c in t.text for c in ".eE") else int(t.text))
        if t.kind == "string":
            self.advance()
            return Text(self.template(t))
        if self.at("-"):
            self.advance()
            return Neg(self.term())
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.advance()
            if self.at("(") and t.text in DIST_NAMES:
                self.advance()
                args = [self.expr()]
                while self.at(","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")", "')'")
                return DistLit(DIST_NAMES[t.text], tuple(args))
            if self.is_bound(t.text):
                return Var(t.text)
            if t.text in SYMBOLS:
                return Symbol(t.text)
            raise UndefinedName(t.span, f"undefined name {t.text!r}")
        self.fail(f"expected a value, found {self.describe(t)}")


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text)


def parse(source: str) -> IRProgram:
    """Parse DSL text; raises :class:`DslSyntaxError` or :class:`UndefinedName`."""
    return _Parser(source).program()


# ---------------------------------------------------------------- elaboration


def _eval(e: Expr, env: dict[str, Any], span: SourceSpan | None) -> Any:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise ElaborationError(span, f"unbound name {e.name!r}") from None
    if isinstance(e, BinOp):
        a, b = _eval(e.left, env, span), _eval(e.right, env, span)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (a, b)):
            raise ElaborationError(span, f"'{e.op}' needs numeric operands")
        return a + b if e.op == "+" else a - b
    if isinstance(e, Neg):
        v = _eval(e.operand, env, span)
        if not isinstance(v, (int, float)):
            raise ElaborationError(span, "unary '-' needs a number")
        return -v
    if isinstance(e, Symbol):
        return e.text
    if isinstance(e, Text):
        return _render(e.template, env, span)
    if isinstance(e, DistLit):
        args = [_eval(a, env, span) for a in e.args]
        if not all(isinstance(a, (int, float)) for a in args):
            raise ElaborationError(span, "distribution arguments must be numbers")
        try:
            return DistSpec(e.family, tuple(args))
        except ValueError as exc:
            raise ElaborationError(span, str(exc)) from None
    raise TypeError(e)


def _render(t: Template, env: dict[str, Any], span: SourceSpan | None) -> str:
    if len(t.parts) == 1 and isinstance(t.parts[0], str):
        return t.parts[0]
    out = []
    for p in t.parts:
        if isinstance(p, str):
            out.append(p)
            continue
        v = _eval(p, env, span)
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        if isinstance(v, bool) or not isinstance(v, (int, str)):
            raise ElaborationError(span, f"cannot interpolate {v!r} into a name")
        out.append(str(v))
    return "".join(out)


def _param_value(key: str, v: Any) -> Any:
    if key == "policy" and isinstance(v, str):
        try:
            return RoutingPolicy.parse(v).value
        except ValueError:
            return v
    return v


class _Elaborator:
    def __init__(self, program: IRProgram, name: str, strict: bool = True):
        self.program = program
        self.strict = strict
        self.b = GraphBuilder(name)
        self.pending: dict[str, tuple[EdgeKind, dict, SourceSpan]] = {}
        self.used_edges: set[str] = set()
        self.ports: dict[ScopePath, dict[str, str]] = {}

    @staticmethod
    def full(scope: ScopePath, rel: str) -> str:
        return "/".join(scope + (rel,)) if scope else rel

    def resolve_node(self, ref: Ref, env, scope: ScopePath, span) -> str:
        text = _render(ref.name, env, span)
        port = ref.port
        if port is None and "." in text:
            text, port = text.rsplit(".", 1)
        if port is not None:
            inst = scope + tuple(p for p in text.split("/") if p)
            ports = self.ports.get(inst)
            if ports is None:
                raise ElaborationError(span, f"unknown subsystem instance {'/'.join(inst)!r}")
            if port not in ports:
                raise ElaborationError(span, f"instance {'/'.join(inst)!r} has no port {port!r}")
            return ports[port]
        nid = self.full(scope, text)
        if nid not in self.b.nodes:
            raise ElaborationError(span, f"unresolved component {nid!r}")
        return nid

    def params(self, items, env, span) -> dict:
        return {k: _param_value(k, _eval(v, env, span)) for k, v in items}

    def run(self) -> ModelGraph:
        self.block(self.program.statements, {}, ())
        if self.pending:
            eid = sorted(self.pending)[0]
            raise ElaborationError(self.pending[eid][2], f"edge {eid!r} is declared but never connected")
        return self.b.build()

    def block(self, stmts, env: dict[str, Any], scope: ScopePath) -> None:
        for s in stmts:
            self.stmt(s, env, scope)

    def stmt(self, s: Stmt, env, scope: ScopePath) -> None:
        span = s.span
        if isinstance(s, DeclareNode):
            nid = self.full(scope, _render(s.name, env, span))
            if nid in self.b.nodes:
                self.violation(span, "V-DUP-ID", nid, f"duplicate component id {nid!r}")
                return
            self.b.add_node(Node(nid, s.kind, self.params(s.params, env, span), scope))
        elif isinstance(s, DeclareEdge):
            eid = self.full(scope, _render(s.name, env, span))
            if eid in self.pending or eid in self.b.edges:
                raise ElaborationError(span, f"duplicate edge id {eid!r}")
            self.pending[eid] = (s.kind, self.params(s.params, env, span), span)
        elif isinstance(s, Connect):
            src = self.resolve_node(s.src, env, scope, span)
            dst = self.resolve_node(s.dst, env, scope, span)
            if isinstance(s.via, Ref):
                eid = self.full(scope, _render(s.via.name, env, span))
                if eid in self.b.edges:
                    self.violation(span, "V-EDGE-REUSE", eid, f"edge reuse: {eid!r} already connects another pair")
                    return
                if eid not in self.pending:
                    raise ElaborationError(span, f"unresolved edge {eid!r}")
                kind, params, _ = self.pending.pop(eid)
            else:
                decl = s.via or DeclareEdge(EdgeKind.BUFFER, None, ())
                if decl.name is not None:
                    eid = self.full(scope, _render(decl.name, env, span))
                else:
                    eid = self.full(scope, f"{self.relative(src, scope)}__{self.relative(dst, scope)}")
                if eid in self.pending:
                    raise ElaborationError(span, f"duplicate edge id {eid!r}")
                kind, params = decl.kind, self.params(decl.params, env, span)
            if eid in self.b.edges:
                self.violation(span, "V-EDGE-REUSE", eid, f"edge reuse: {eid!r} already connects another pair")
                return
            self.b.connect(src, Edge(eid, kind, params=params), dst)
        elif isinstance(s, ForLoop):
            lo, hi = _eval(s.lo, env, span), _eval(s.hi, env, span)
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (lo, hi)):
                raise ElaborationError(span, "loop bounds must be integers")
            if hi < lo:
                raise ElaborationError(span, f"inverted range {lo}..{hi}")
            for v in range(lo, hi):
                self.block(s.body, {**env, s.var: v}, scope)
        elif isinstance(s, Instantiate):
            d = self.program.subsystem_defs[s.subsystem]
            if len(s.args) != len(d.formals):
                raise ElaborationError(span, f"{d.name} takes {len(d.formals)} arguments, got {len(s.args)}")
            args = {f: _eval(a, env, span) for f, a in zip(d.formals, s.args)}
            inst = scope + tuple(p for p in _render(s.name, env, span).split("/") if p)
            if inst in self.ports or inst in self.b.scopes:
                raise ElaborationError(span, f"duplicate instance {'/'.join(inst)!r}")
            self.ports[inst] = {}
            self.b.add_scope(inst)
            self.block(d.body, args, inst)
        elif isinstance(s, Expose):
            self.ports[scope][s.port] = self.resolve_node(s.ref, env, scope, span)

    def violation(self, span, rule: str, entity: str, message: str) -> None:
        if self.strict:
            raise ElaborationError(span, message)
        self.b.defects.append(Defect(rule, entity, message))

    @staticmethod
    def relative(nid: str, scope: ScopePath) -> str:
        prefix = "/".join(scope) + "/"
        return nid[len(prefix) :] if scope and nid.startswith(prefix) else nid


def elaborate(program: IRProgram, name: str = "model", strict: bool = True) -> ModelGraph:
    """Unroll loops and expand subsystem instances into a flat graph.

    With ``strict=False`` a duplicate component id or a reused edge keeps the
    first declaration and is recorded on ``graph.defects`` instead of raising.
    """
    return _Elaborator(program, name, strict).run()


def load(source: str, name: str = "model", strict: bool = True) -> ModelGraph:
    return elaborate(parse(source), name, strict)


# ---------------------------------------------------------------- formatter


def _fmt_number(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _fmt_expr(e: Expr, nested: bool = False) -> str:
    if isinstance(e, Num):
        s = _fmt_number(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Symbol):
        return e.text
    if isinstance(e, Text):
        return _fmt_template(e.template, force_quote=True)
    if isinstance(e, Neg):
        return f"-{_fmt_expr(e.operand, True)}"
    if isinstance(e, DistLit):
        return f"{DIST_KEYWORD[e.family]}({', '.join(_fmt_expr(a) for a in e.args)})"
    if isinstance(e, BinOp):
        s = f"{_fmt_expr(e.left)} {e.op} {_fmt_expr(e.right, True)}"
        return f"({s})" if nested else s
    raise TypeError(e)


def _fmt_template(t: Template, force_quote: bool = False) -> str:
    if t.is_plain() and not force_quote:
        text = "".join(t.parts)
        if IDENT_RE.match(text) and text not in KEYWORDS:
            return text
    out = []
    for p in t.parts:
        out.append(p.replace("\\", "\\\\").replace('"', '\\"') if isinstance(p, str) else "{" + _fmt_expr(p) + "}")
    return '"' + "".join(out) + '"'


def _fmt_ref(r: Ref) -> str:
    base = _fmt_template(r.name)
    return f"{base}.{r.port}" if r.port else base


def _fmt_params(items) -> str:
    if not items:
        return ""
    return " { " + ", ".join(f"{k} = {_fmt_expr(v)}" for k, v in items) + " }"


_KIND_WORD = {v: k for k, v in NODE_KEYWORDS.items()} | {v: k for k, v in EDGE_KEYWORDS.items()}


def _fmt_stmt(s: Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(s, DeclareNode):
        return [f"{pad}{_KIND_WORD[s.kind]} {_fmt_template(s.name)}{_fmt_params(s.params)}"]
    if isinstance(s, DeclareEdge):
        return [f"{pad}{_KIND_WORD[s.kind]} {_fmt_template(s.name)}{_fmt_params(s.params)}"]
    if isinstance(s, Connect):
        line = f"{pad}connect {_fmt_ref(s.src)} -> {_fmt_ref(s.dst)}"
        if isinstance(s.via, Ref):
            line += f" via {_fmt_ref(s.via)}"
        elif isinstance(s.via, DeclareEdge):
            name = f" {_fmt_template(s.via.name)}" if s.via.name is not None else ""
            line += f" via {_KIND_WORD[s.via.kind]}{name}{_fmt_params(s.via.params)}"
        return [line]
    if isinstance(s, ForLoop):
        lines = [f"{pad}for {s.var} in {_fmt_expr(s.lo)}..{_fmt_expr(s.hi)} {{"]
        for b in s.body:
            lines += _fmt_stmt(b, indent + 1)
        return lines + [f"{pad}}}"]
    if isinstance(s, Instantiate):
        args = ", ".join(_fmt_expr(a) for a in s.args)
        return [f"{pad}inst {_fmt_template(s.name)} = {s.subsystem}({args})"]
    if isinstance(s, Expose):
        return [f"{pad}expose {s.port} {_fmt_ref(s.ref)}"]
    raise TypeError(s)


def format(program: IRProgram) -> str:
    """Pretty-print a program; the output re-parses to an equivalent program."""
    order = program.order or (tuple(program.subsystem_defs) + tuple(range(len(program.statements))))
    lines: list[str] = []
    for item in order:
        if isinstance(item, str):
            d = program.subsystem_defs[item]
            if lines:
                lines.append("")
            lines.append(f"subsystem {d.name}({', '.join(d.formals)}) {{")
            for s in d.body:
                lines += _fmt_stmt(s, 1)
            lines.append("}")
            lines.append("")
        else:
            lines += _fmt_stmt(program.statements[item], 0)
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"
