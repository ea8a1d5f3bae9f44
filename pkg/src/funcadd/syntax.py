"""Concrete syntax: tokens, AST, parser, name resolution and printing.

Grammar (``++`` is the sequential choice, ``;`` separates clauses)::

    program := { clause ";" } [ clause ]
    clause  := IDENT "(" [ param {"," param} ] ")" "=" expr
    param   := IDENT | INT | "-" INT | "nil" | "true" | "false" | "[" "]"
    expr    := cmp { "++" cmp }
    cmp     := add [ cmpop add ]
    add     := mul { ("+" | "-") mul }
    mul     := unary { ("*" | "/" | "mod") unary }
    unary   := [ "-" ] primary
    primary := INT | IDENT [ "(" [expr {"," expr}] ")" ] | "fail"
             | "[" [expr {"," expr}] "]" | "if" expr "then" expr "else" expr
             | "(" expr ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .values import (
    INT_MAX,
    INT_MIN,
    NIL,
    AtomV,
    ConsV,
    IntV,
    Pos,
    Value,
    pretty_value,
)

KEYWORDS = frozenset({"if", "then", "else", "fail", "mod"})
RESERVED_FUNCTIONS = frozenset({"cons", "head", "tail"})
HEAD_ATOMS = frozenset({"nil", "true", "false"})
ATOM_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")

CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")
ADD_OPS = ("+", "-")
MUL_OPS = ("*", "/", "mod")
BINARY_OPS = frozenset(CMP_OPS + ADD_OPS + MUL_OPS)

# Loosest to tightest.
LEVEL_CHOICE, LEVEL_CMP, LEVEL_ADD, LEVEL_MUL, LEVEL_ATOM = range(5)
OP_LEVEL = {**{op: LEVEL_CMP for op in CMP_OPS},
            **{op: LEVEL_ADD for op in ADD_OPS},
            **{op: LEVEL_MUL for op in MUL_OPS}}


class FuncSyntaxError(Exception):
    def __init__(self, message: str, pos: Optional[Pos] = None):
        self.message = message
        self.pos = pos
        super().__init__(f"{pos}: {message}" if pos else message)


class LexError(FuncSyntaxError):
    pass


class ParseError(FuncSyntaxError):
    def __init__(self, message: str, pos: Optional[Pos] = None, expected: Iterable[str] = ()):
        self.expected = frozenset(expected)
        if self.expected:
            message = f"{message} (expected {', '.join(sorted(self.expected))})"
        super().__init__(message, pos)


class DuplicateParam(ParseError):
    pass


# ---------------------------------------------------------------- tokens


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "int", "ident", "kw" or "op"
    text: str
    pos: Pos = field(compare=False)

    def __repr__(self) -> str:
        return f"[{self.kind} {self.text}]"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\+\+|==|!=|<=|>=|[-+*/<>=(),;\[\]])
    """,
    re.VERBOSE,
)


def tokenize(source: str, origin: str = "<input>") -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    i, n = 0, len(source)
    while i < n:
        m = _TOKEN_RE.match(source, i)
        if m is None:
            raise LexError(f"unexpected character {source[i]!r}", Pos(origin, line, i - line_start + 1))
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            if kind == "ident" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, Pos(origin, line, i - line_start + 1)))
        else:
            nl = text.count("\n")
            if nl:
                line += nl
                line_start = i + text.rindex("\n") + 1
        i = m.end()
    return tokens


# ---------------------------------------------------------------- AST

_POS = dict(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Lit:
    value: Union[IntV, AtomV]
    pos: Optional[Pos] = field(**_POS)


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    pos: Optional[Pos] = field(**_POS)


@dataclass(frozen=True, slots=True)
class Call:
    """A call ``fname(args...)``; infix operators are calls named by the operator.

    ``ctor`` marks a constructor term (``cons`` over literals, variables and
    other constructor terms): once its variables are bound it denotes a
    constant. ``ground`` caches that constant when the term has no variables.
    ``const_args`` is true when every argument is a constant in that sense.
    """

    fname: str
    args: tuple
    pos: Optional[Pos] = field(**_POS)
    ctor: bool = field(init=False, compare=False, repr=False)
    ground: Optional[Value] = field(init=False, compare=False, repr=False)
    const_args: bool = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        const_args = all(_const_like(a) for a in self.args)
        ctor = self.fname == "cons" and len(self.args) == 2 and const_args
        ground = None
        if ctor:
            h, t = (_ground_of(a) for a in self.args)
            if h is not None and t is not None:
                ground = ConsV(h, t)
        object.__setattr__(self, "const_args", const_args)
        object.__setattr__(self, "ctor", ctor)
        object.__setattr__(self, "ground", ground)


@dataclass(frozen=True, slots=True)
class Choice:
    """``b1 ++ b2 ++ ... ++ bn``. The parser never nests a Choice directly in another."""

    branches: tuple
    pos: Optional[Pos] = field(**_POS)


@dataclass(frozen=True, slots=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    pos: Optional[Pos] = field(**_POS)


Expr = Union[Lit, Var, Call, Choice, If]


def _const_like(e) -> bool:
    t = type(e)
    return t is Lit or t is Var or (t is Call and e.ctor)


def _ground_of(e) -> Optional[Value]:
    if type(e) is Lit:
        return e.value
    if type(e) is Call:
        return e.ground
    return None


def choice(*branches: Expr, pos: Optional[Pos] = None) -> Expr:
    """Build a flattened Choice (a single branch is returned unchanged)."""
    flat = []
    for b in branches:
        if type(b) is Choice:
            flat.extend(b.branches)
        else:
            flat.append(b)
    if len(flat) == 1:
        return flat[0]
    return Choice(tuple(flat), pos)


def value_to_expr(v: Value) -> Expr:
    """Embed a Value as the ground expression denoting it."""
    if type(v) is not ConsV:
        return Lit(v)
    heads = []
    while type(v) is ConsV:
        heads.append(v.head)
        v = v.tail
    out = value_to_expr(v)
    for h in reversed(heads):
        out = Call("cons", (value_to_expr(h), out))
    return out


@dataclass(frozen=True, slots=True)
class PVar:
    name: str


@dataclass(frozen=True, slots=True)
class PConst:
    value: Union[IntV, AtomV]


Param = Union[PVar, PConst]


@dataclass(frozen=True, slots=True)
class Clause:
    fname: str
    params: tuple
    body: Expr
    pos: Optional[Pos] = field(**_POS)
    has_vars: bool = field(init=False, compare=False, repr=False)
    head_text: str = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "has_vars", any(type(p) is PVar for p in self.params))
        object.__setattr__(self, "head_text", pretty_head(self))

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class Program:
    clauses: tuple = ()
    index: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        index: dict = {}
        for c in self.clauses:
            index.setdefault((c.fname, c.arity), []).append(c)
        object.__setattr__(self, "index", {k: tuple(v) for k, v in index.items()})

    def __add__(self, other: "Program") -> "Program":
        return Program(self.clauses + other.clauses)

    def lookup(self, fname: str, arity: int) -> tuple:
        return self.index.get((fname, arity), ())


# ---------------------------------------------------------------- parser


class _Parser:
    def __init__(self, tokens: Sequence[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in ("op", "kw") and tok.text in texts

    def end_pos(self) -> Optional[Pos]:
        if not self.tokens:
            return None
        last = self.tokens[-1]
        return Pos(last.pos.origin, last.pos.line, last.pos.col + len(last.text))

    def error(self, expected: Iterable[str]) -> ParseError:
        tok = self.peek()
        if tok is None:
            return ParseError("unexpected end of input", self.end_pos(), expected)
        return ParseError(f"unexpected {tok.text!r}", tok.pos, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error({repr(text)})
        return self.advance()

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    # program level

    def program(self) -> list[Clause]:
        clauses = []
        while self.peek() is not None:
            clauses.append(self.clause())
            if self.peek() is None:
                break
            self.expect(";")
        return clauses

    def clause(self) -> Clause:
        tok = self.peek()
        if tok is None or tok.kind != "ident":
            raise self.error({"function name"})
        self.advance()
        if tok.text in RESERVED_FUNCTIONS:
            raise ParseError(f"cannot define builtin function {tok.text!r}", tok.pos)
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.param())
            while self.at(","):
                self.advance()
                params.append(self.param())
        self.expect(")")
        self.expect("=")
        body = self.expr()
        seen = set()
        for p in params:
            if type(p) is PVar:
                if p.name in seen:
                    raise DuplicateParam(f"parameter {p.name!r} repeated in head of {tok.text!r}", tok.pos)
                seen.add(p.name)
        return Clause(tok.text, tuple(params), body, tok.pos)

    def param(self) -> Param:
        tok = self.peek()
        if tok is not None and tok.kind == "ident":
            self.advance()
            if tok.text in HEAD_ATOMS:
                return PConst(AtomV(tok.text))
            return PVar(tok.text)
        if tok is not None and tok.kind == "int":
            self.advance()
            return PConst(IntV(_check_int(int(tok.text), tok.pos)))
        if self.at("-"):
            self.advance()
            tok = self.peek()
            if tok is None or tok.kind != "int":
                raise self.error({"integer"})
            self.advance()
            return PConst(IntV(_check_int(-int(tok.text), tok.pos)))
        if self.at("["):
            self.advance()
            self.expect("]")
            return PConst(NIL)
        raise self.error({"parameter"})

    # expressions

    def expr(self) -> Expr:
        first = self.cmp()
        if not self.at("++"):
            return first
        pos = self.peek().pos
        branches = [first]
        while self.at("++"):
            self.advance()
            branches.append(self.cmp())
        return choice(*branches, pos=pos)

    def cmp(self) -> Expr:
        left = self.add()
        if self.at(*CMP_OPS):
            op = self.advance()
            right = self.add()
            if self.at(*CMP_OPS):
                raise ParseError("comparison operators do not chain", self.peek().pos)
            return Call(op.text, (left, right), op.pos)
        return left

    def add(self) -> Expr:
        left = self.mul()
        while self.at(*ADD_OPS):
            op = self.advance()
            left = Call(op.text, (left, self.mul()), op.pos)
        return left

    def mul(self) -> Expr:
        left = self.unary()
        while self.at(*MUL_OPS):
            op = self.advance()
            left = Call(op.text, (left, self.unary()), op.pos)
        return left

    def unary(self) -> Expr:
        if not self.at("-"):
            return self.primary()
        minus = self.advance()
        tok = self.peek()
        if tok is not None and tok.kind == "int":
            self.advance()
            return Lit(IntV(_check_int(-int(tok.text), tok.pos)), minus.pos)
        # -e is sugar for 0 - e
        return Call("-", (Lit(IntV(0), minus.pos), self.primary()), minus.pos)

    def primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise self.error({"expression"})
        if tok.kind == "int":
            self.advance()
            return Lit(IntV(_check_int(int(tok.text), tok.pos)), tok.pos)
        if tok.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = self.expr_list(")")
                return Call(tok.text, tuple(args), tok.pos)
            return Var(tok.text, tok.pos)
        if tok.kind == "kw" and tok.text == "fail":
            self.advance()
            return Call("fail", (), tok.pos)
        if tok.kind == "kw" and tok.text == "if":
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            return If(cond, then, self.expr(), tok.pos)
        if self.at("["):
            self.advance()
            elems = self.expr_list("]")
            out: Expr = Lit(NIL, tok.pos)
            for e in reversed(elems):
                out = Call("cons", (e, out), tok.pos)
            return out
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise self.error({"expression"})

    def expr_list(self, close: str) -> list[Expr]:
        items = []
        if not self.at(close):
            items.append(self.expr())
            while self.at(","):
                self.advance()
                items.append(self.expr())
        self.expect(close)
        return items


def _check_int(n: int, pos: Pos) -> int:
    if not INT_MIN <= n <= INT_MAX:
        raise ParseError(f"integer literal {n} does not fit in 64 bits", pos)
    return n


def _as_tokens(src: Union[str, Sequence[Token]], origin: str) -> Sequence[Token]:
    return tokenize(src, origin) if isinstance(src, str) else src


def parse_program(src: Union[str, Sequence[Token]], origin: str = "<input>") -> Program:
    """Parse and name-resolve a whole program (text or tokens)."""
    p = _Parser(_as_tokens(src, origin))
    return Program(tuple(resolve_names(c) for c in p.program()))


def parse_expr(src: Union[str, Sequence[Token]], bound: Iterable[str] = (),
               origin: str = "<input>") -> Expr:
    """Parse one expression; identifiers in ``bound`` become variables."""
    p = _Parser(_as_tokens(src, origin))
    e = p.expr()
    if p.peek() is not None:
        raise p.error({"end of input", "'++'", "operator"})
    return _resolve(e, frozenset(bound))


def parse_clause(src: Union[str, Sequence[Token]], origin: str = "<input>") -> Clause:
    p = _Parser(_as_tokens(src, origin))
    c = p.clause()
    if p.peek() is not None:
        raise p.error({"end of input"})
    return resolve_names(c)


def resolve_names(clause: Clause) -> Clause:
    """Bind body identifiers to head variables; other identifiers become atoms."""
    bound = frozenset(p.name for p in clause.params if type(p) is PVar)
    return Clause(clause.fname, clause.params, _resolve(clause.body, bound), clause.pos)


def _resolve(e: Expr, bound: frozenset) -> Expr:
    t = type(e)
    if t is Var:
        if e.name in bound:
            return e
        if ATOM_RE.match(e.name) and e.name not in KEYWORDS:
            return Lit(AtomV(e.name), e.pos)
        raise ParseError(f"unbound variable {e.name!r}", e.pos)
    if t is Lit:
        return e
    if t is Call:
        return Call(e.fname, tuple(_resolve(a, bound) for a in e.args), e.pos)
    if t is Choice:
        return Choice(tuple(_resolve(b, bound) for b in e.branches), e.pos)
    return If(_resolve(e.cond, bound), _resolve(e.then, bound), _resolve(e.orelse, bound), e.pos)


# ---------------------------------------------------------------- printing


def pretty(obj) -> str:
    """Canonical concrete syntax for an Expr, Value, Clause or Program."""
    if isinstance(obj, Program):
        return "".join(pretty_clause(c) + ";\n" for c in obj.clauses)
    if isinstance(obj, Clause):
        return pretty_clause(obj)
    if isinstance(obj, (IntV, AtomV, ConsV)):
        return pretty_value(obj)
    return _pp(obj, LEVEL_CHOICE)


def pretty_clause(c: Clause) -> str:
    return f"{c.head_text} = {_pp(c.body, LEVEL_CHOICE)}"


def pretty_head(c: Clause) -> str:
    parts = [p.name if type(p) is PVar else pretty_value(p.value) for p in c.params]
    return f"{c.fname}({', '.join(parts)})"


def _pp(e: Expr, ctx: int) -> str:
    t = type(e)
    if t is Lit:
        return pretty_value(e.value)
    if t is Var:
        return e.name
    if t is Choice:
        s = " ++ ".join(_pp(b, LEVEL_CMP) for b in e.branches)
        return f"({s})" if ctx > LEVEL_CHOICE else s
    if t is If:
        s = f"if {_pp(e.cond, 0)} then {_pp(e.then, 0)} else {_pp(e.orelse, 0)}"
        return f"({s})" if ctx > LEVEL_CHOICE else s
    # Call
    if e.fname in BINARY_OPS and len(e.args) == 2:
        level = OP_LEVEL[e.fname]
        left_ctx = level + 1 if level == LEVEL_CMP else level
        s = f"{_pp(e.args[0], left_ctx)} {e.fname} {_pp(e.args[1], level + 1)}"
        return f"({s})" if ctx > level else s
    if e.fname == "fail" and not e.args:
        return "fail"
    if e.fname == "cons" and len(e.args) == 2:
        return _pp_cons(e)
    return f"{e.fname}({', '.join(_pp(a, 0) for a in e.args)})"


def _pp_cons(e: Call) -> str:
    heads = []
    node: Expr = e
    while type(node) is Call and node.fname == "cons" and len(node.args) == 2:
        heads.append(_pp(node.args[0], 0))
        node = node.args[1]
    if type(node) is Lit and node.value == NIL:
        return "[" + ", ".join(heads) + "]"
    return "".join(f"cons({h}, " for h in heads) + _pp(node, 0) + ")" * len(heads)
