"""Concrete syntax for choreography (``.chor``) and property (``.prop``) files.

Shorthands (``->``, ``acq``, ``rel``, ``if``/``else``) are expanded and
``def`` references inlined while parsing, so the result only contains core
program constructs.  ``render_program`` prints core programs back; primitive
sends and receives, which have no shorthand, are written ``p>q ! E`` and
``p>q ? y``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import logic
from .syntax import (
    ACQ, FALSE, ONE, REL, SINK, TAU, TRUE, UNIT, Act, Add, And, Assign, ChannelName, Choice,
    Constant, Eq, Expr, INT_MAX, Lit, MalformedError, Md5, Not, Par, Program, Recv, Send, Seq,
    Tau, Test, Value, Var, expand_acq, expand_comm, expand_if, expand_rel, render_expr,
    render_value,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "num", "str", "sym" or "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>->|:=|\|\||&&|==|[!?>~+;:,.(){}\[\]=])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(tok: Token) -> str:
    out = []
    body = tok.text[1:-1]
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            esc = body[i + 1]
            if esc not in _ESCAPES:
                raise ParseError(f"unknown escape \\{esc}", tok.line, tok.col + i + 1)
            out.append(_ESCAPES[esc])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


CHOR_KEYWORDS = frozenset({
    "processes", "store", "channels", "capacity", "inf", "def", "main", "skip", "tau",
    "test", "acq", "rel", "if", "else", "unit", "true", "false", "md5",
})
PROP_KEYWORDS = frozenset({"prop", "tt", "ff", "dead", "EG", "EU", "AG", "AU", "AX"})

_LITERALS = {"unit": UNIT, "true": TRUE, "false": FALSE, "acq": ACQ, "rel": REL}


class _Parser:
    def __init__(self, text: str, processes: Optional[frozenset[str]] = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.processes = processes

    # -- token plumbing

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident") and self.tok.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            tok = self.tok
            self.pos += 1
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def name(self, what: str, reserved=CHOR_KEYWORDS) -> Token:
        tok = self.tok
        if tok.kind != "ident" or tok.text in reserved or tok.text == SINK:
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.pos += 1
        return tok

    def process(self) -> str:
        tok = self.name("process name")
        if self.processes is not None and tok.text not in self.processes:
            raise self.error(f"undeclared process {tok.text!r}", tok)
        return tok.text

    def variable(self) -> str:
        if self.tok.kind == "ident" and self.tok.text == SINK:
            self.pos += 1
            return SINK
        return self.name("variable").text

    def number(self) -> int:
        tok = self.tok
        if tok.kind != "num":
            raise self.error(f"expected a number, found {tok.text or 'end of input'!r}")
        value = int(tok.text)
        if value > INT_MAX:
            raise self.error("integer literal out of 64-bit range")
        self.pos += 1
        return value

    # -- expressions: && < == < + < ~ < primary

    def expr(self) -> Expr:
        left = self.eq_expr()
        while self.accept("&&"):
            left = And(left, self.eq_expr())
        return left

    def eq_expr(self) -> Expr:
        left = self.add_expr()
        while self.accept("=="):
            left = Eq(left, self.add_expr())
        return left

    def add_expr(self) -> Expr:
        left = self.unary_expr()
        while self.accept("+"):
            left = Add(left, self.unary_expr())
        return left

    def unary_expr(self) -> Expr:
        if self.accept("~"):
            return Not(self.unary_expr())
        return self.primary_expr()

    def primary_expr(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            return Lit(self.number())
        if tok.kind == "str":
            self.pos += 1
            return Lit(_unquote(tok))
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            if tok.text in _LITERALS:
                self.pos += 1
                return Lit(_LITERALS[tok.text])
            if tok.text == "md5":
                self.pos += 1
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return Md5(inner)
            return Var(self.variable())
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    def literal_value(self) -> Value:
        tok = self.tok
        if tok.kind == "num":
            return self.number()
        if tok.kind == "str":
            self.pos += 1
            return _unquote(tok)
        if tok.kind == "ident" and tok.text in ("unit", "true", "false"):
            self.pos += 1
            return _LITERALS[tok.text]
        raise self.error(f"expected a value, found {tok.text or 'end of input'!r}")


class _ChoreographyParser(_Parser):
    def __init__(self, text: str):
        super().__init__(text)
        self.defs: dict[str, Program] = {}

    def channel(self, sender: str, receiver: str, tok: Token) -> ChannelName:
        try:
            return ChannelName(sender, receiver)
        except MalformedError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from None

    def shorthand(self, build, tok: Token, *args) -> Program:
        try:
            return build(*args)
        except MalformedError as exc:
            raise ParseError(str(exc), tok.line, tok.col) from None

    # -- programs

    def prog(self) -> Program:
        left = self.seq()
        op = None
        while self.at("||") or self.at("+"):
            tok = self.tok
            if op is not None and tok.text != op:
                raise self.error("mixing '+' and '||' requires parentheses")
            op = tok.text
            self.pos += 1
            right = self.seq()
            left = Par(left, right) if op == "||" else Choice(left, right)
        return left

    def seq(self) -> Program:
        parts = [self.atom()]
        while self.accept(";"):
            parts.append(self.atom())
        result = parts[-1]
        for part in reversed(parts[:-1]):
            result = Seq(part, result)
        return result

    def atom(self) -> Program:
        tok = self.tok
        if self.accept("skip"):
            return ONE
        if self.accept("tau"):
            return Act(TAU)
        if self.accept("("):
            inner = self.prog()
            self.expect(")")
            return inner
        if self.accept("test"):
            p = self.process()
            self.expect(".")
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Act(Test(p, e))
        if self.accept("if"):
            p = self.process()
            self.expect(".")
            self.expect("(")
            e = self.expr()
            self.expect(")")
            self.expect("{")
            then = self.prog()
            self.expect("}")
            self.expect("else")
            self.expect("{")
            otherwise = self.prog()
            self.expect("}")
            return expand_if(p, e, then, otherwise)
        if tok.kind != "ident" or tok.text in CHOR_KEYWORDS:
            raise self.error(f"expected a program, found {tok.text or 'end of input'!r}")

        nxt = self.peek()
        if nxt.kind == "ident" and nxt.text in ("acq", "rel"):
            p = self.process()
            kind = self.tok.text
            self.pos += 1
            q = self.process()
            self.expect(".")
            if self.accept("["):
                ys = [self.variable()]
                while self.accept(","):
                    ys.append(self.variable())
                self.expect("]")
            else:
                ys = [self.variable()]
            build = expand_acq if kind == "acq" else expand_rel
            return self.shorthand(build, tok, p, q, ys)
        if nxt.text == ">":
            p = self.process()
            self.expect(">")
            q = self.process()
            ch = self.channel(p, q, tok)
            if self.accept("!"):
                return Act(Send(ch, self.expr()))
            if self.accept("?"):
                return Act(Recv(ch, self.variable()))
            raise self.error("expected '!' or '?'")
        if nxt.text == ".":
            p = self.process()
            self.expect(".")
            after = self.peek()
            if self.tok.kind == "ident" and after.text == ":=":
                y = self.variable()
                self.expect(":=")
                return Act(Assign(p, y, self.expr()))
            e = self.expr()
            self.expect("->")
            q = self.process()
            self.expect(".")
            y = self.variable()
            return self.shorthand(expand_comm, tok, p, e, q, y)

        self.pos += 1
        if tok.text not in self.defs:
            raise self.error(f"reference to undefined def {tok.text!r}", tok)
        return self.defs[tok.text]

    # -- file

    def file(self) -> "ChoreographyFile":
        self.expect("processes")
        self.expect(":")
        names = [self.name("process name")]
        while self.accept(","):
            names.append(self.name("process name"))
        seen = set()
        for tok in names:
            if tok.text in seen:
                raise self.error(f"duplicate process {tok.text!r}", tok)
            seen.add(tok.text)
        processes = tuple(t.text for t in names)
        self.processes = frozenset(processes)

        stores: dict[str, list[tuple[str, Value]]] = {p: [] for p in processes}
        declared = set()
        while self.at("store"):
            self.pos += 1
            ptok = self.tok
            p = self.process()
            if p in declared:
                raise self.error(f"duplicate store for {p!r}", ptok)
            declared.add(p)
            self.expect("{")
            while not self.at("}"):
                vtok = self.tok
                var = self.variable()
                if var == SINK:
                    raise self.error("the sink variable cannot be stored", vtok)
                if any(var == v for v, _ in stores[p]):
                    raise self.error(f"variable {var!r} initialized twice", vtok)
                self.expect("=")
                stores[p].append((var, self.literal_value()))
                self.accept(";")
            self.expect("}")

        capacity: Optional[int] = None
        overrides: dict[ChannelName, int] = {}
        if self.accept("channels"):
            self.expect("{")
            self.expect("capacity")
            self.expect("=")
            if not self.accept("inf"):
                capacity = self.number()
            while self.accept(";"):
                if self.at("}"):
                    break
                tok = self.tok
                p = self.process()
                self.expect("->")
                q = self.process()
                self.expect(":")
                overrides[self.channel(p, q, tok)] = self.number()
            self.expect("}")

        defs = []
        while self.accept("def"):
            tok = self.name("def name")
            if tok.text in self.defs or tok.text in self.processes:
                raise self.error(f"name {tok.text!r} already in use", tok)
            self.expect("=")
            body = self.prog()
            self.defs[tok.text] = body
            defs.append((tok.text, body))

        self.expect("main")
        self.expect("=")
        main = self.prog()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return ChoreographyFile(processes, stores, capacity, overrides, defs, main)


@dataclass
class ChoreographyFile:
    processes: tuple[str, ...]
    stores: dict[str, list[tuple[str, Value]]]
    capacity: Optional[int] = None  # None means unbounded
    capacity_overrides: dict[ChannelName, int] = field(default_factory=dict)
    defs: list[tuple[str, Program]] = field(default_factory=list)
    main: Program = ONE

    def capacity_of(self, channel: ChannelName) -> Optional[int]:
        return self.capacity_overrides.get(channel, self.capacity)


def parse_choreography(text: str) -> ChoreographyFile:
    return _ChoreographyParser(text).file()


def parse_program(text: str, processes=None) -> Program:
    """Parse a bare program term (no file header)."""
    parser = _ChoreographyParser(text)
    parser.processes = None if processes is None else frozenset(processes)
    result = parser.prog()
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected {parser.tok.text!r}")
    return result


# -- formulas ----------------------------------------------------------------


class _FormulaParser(_Parser):
    def __init__(self, text: str, processes=None, literal_ag: bool = False):
        super().__init__(text, None if processes is None else frozenset(processes))
        self.literal_ag = literal_ag

    def formula(self) -> logic.Formula:
        left = self.conj()
        while self.accept("||"):
            left = logic.lor(left, self.conj())
        return left

    def conj(self) -> logic.Formula:
        left = self.unary()
        while self.accept("&&"):
            left = logic.And(left, self.unary())
        return left

    def unary(self) -> logic.Formula:
        if self.accept("!"):
            return logic.Not(self.unary())
        return self.primary()

    def args(self, count: int) -> list[logic.Formula]:
        self.expect("(")
        out = [self.formula()]
        for _ in range(count - 1):
            self.expect(",")
            out.append(self.formula())
        self.expect(")")
        return out

    def primary(self) -> logic.Formula:
        tok = self.tok
        if self.accept("("):
            inner = self.formula()
            self.expect(")")
            return inner
        if self.accept("tt"):
            return logic.TOP
        if self.accept("ff"):
            return logic.BOTTOM
        if self.accept("dead"):
            return logic.DEAD
        if self.accept("EG"):
            return logic.EG(*self.args(1))
        if self.accept("EU"):
            return logic.EU(*self.args(2))
        if self.accept("AG"):
            return logic.ag(*self.args(1), literal=self.literal_ag)
        if self.accept("AU"):
            return logic.au(*self.args(2))
        if self.accept("AX"):
            self.expect("[")
            q = self.process()
            self.expect(".")
            ytok = self.tok
            y = self.variable()
            if y == SINK:
                raise self.error("AX cannot observe the sink variable", ytok)
            self.expect("]")
            return logic.AXVar(q, y, *self.args(1))
        if tok.kind == "ident" and tok.text not in PROP_KEYWORDS:
            p = self.process()
            self.expect(":")
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return logic.Atom(p, e)
        raise self.error(f"expected a formula, found {tok.text or 'end of input'!r}")

    def process(self) -> str:
        tok = self.name("process name", CHOR_KEYWORDS | PROP_KEYWORDS)
        if self.processes is not None and tok.text not in self.processes:
            raise self.error(f"undeclared process {tok.text!r}", tok)
        return tok.text

    def properties(self) -> list[tuple[str, logic.Formula]]:
        props = []
        names = set()
        while self.accept("prop"):
            tok = self.name("property name", CHOR_KEYWORDS | PROP_KEYWORDS)
            if tok.text in names:
                raise self.error(f"duplicate property {tok.text!r}", tok)
            names.add(tok.text)
            self.expect("=")
            props.append((tok.text, self.formula()))
            self.accept(";")
        if self.tok.kind != "eof":
            raise self.error(f"expected 'prop', found {self.tok.text!r}")
        return props


def parse_formula(text: str, processes=None, literal_ag: bool = False) -> logic.Formula:
    parser = _FormulaParser(text, processes, literal_ag)
    result = parser.formula()
    if parser.tok.kind != "eof":
        raise parser.error(f"unexpected {parser.tok.text!r}")
    return result


def parse_properties(text: str, processes=None, literal_ag: bool = False):
    """Parse a property file: ``prop <name> = <formula>`` entries."""
    return _FormulaParser(text, processes, literal_ag).properties()


# -- rendering ---------------------------------------------------------------


def _render_act(action) -> str:
    if isinstance(action, Test):
        return f"test {action.process}.({render_expr(action.expr)})"
    if isinstance(action, Assign):
        return f"{action.process}.{action.var} := {render_expr(action.expr)}"
    if isinstance(action, Send):
        ch = action.channel
        return f"{ch.sender}>{ch.receiver} ! {render_expr(action.expr)}"
    if isinstance(action, Recv):
        ch = action.channel
        return f"{ch.sender}>{ch.receiver} ? {action.var}"
    return "tau"


def _is_bare(program: Program) -> bool:
    return program is ONE or (isinstance(program, Act) and isinstance(program.action, Tau))


def render_program(program: Program) -> str:
    if program is ONE:
        return "skip"
    if isinstance(program, Act):
        return _render_act(program.action)
    if isinstance(program, Seq):
        left = render_program(program.left)
        right = render_program(program.right)
        if isinstance(program.left, (Seq, Choice, Par)):
            left = f"({left})"
        if isinstance(program.right, (Choice, Par)):
            right = f"({right})"
        return f"{left} ; {right}"
    op = " || " if isinstance(program, Par) else " + "
    left = render_program(program.left)
    right = render_program(program.right)
    if not (_is_bare(program.left) or type(program.left) is type(program)):
        left = f"({left})"
    if not _is_bare(program.right):
        right = f"({right})"
    return left + op + right


def render_choreography(chor: ChoreographyFile, main: Optional[Program] = None) -> str:
    lines = [f"processes: {', '.join(chor.processes)}"]
    for p in chor.processes:
        entries = chor.stores.get(p, [])
        if entries:
            body = "; ".join(f"{v} = {render_value(u)}" for v, u in entries)
            lines.append(f"store {p} {{ {body} }}")
    if chor.capacity is not None or chor.capacity_overrides:
        cap = "inf" if chor.capacity is None else str(chor.capacity)
        extra = "".join(
            f"; {ch.sender} -> {ch.receiver} : {n}"
            for ch, n in sorted(chor.capacity_overrides.items())
        )
        lines.append(f"channels {{ capacity = {cap}{extra} }}")
    lines.append(f"main = {render_program(chor.main if main is None else main)}")
    return "\n".join(lines) + "\n"
