"""The evaluator.

Evaluation alternates between two phases. The eval phase reduces an
expression (rule 7 constants, rule 6 argument evaluation, rule 5 dispatch,
rule 8 sequential choice); the backchain phase resolves a call against the
program's clauses (rules 2/3 walk the clause conjunction, rule 4 passes
arguments, rule 1 switches back to evaluation).

The machine keeps its continuation on an explicit stack, so nesting depth is
bounded by ``Limits.max_call_depth`` rather than by the Python stack. Clause
bodies run under an environment; observable behaviour (outcomes and trace
subjects) is that of literal substitution, see ``substitute``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from .builtins import BUILTINS
from .syntax import Call, Choice, Clause, Expr, If, Lit, Program, PVar, Var, pretty, value_to_expr
from .values import (
    FALSE,
    TRUE,
    ConsV,
    ErrorKind,
    FailReason,
    HardError,
    Outcome,
    SoftFail,
    Success,
    Value,
    pretty_value,
)


@dataclass(frozen=True)
class Limits:
    max_call_depth: int = 10000
    max_choice_width: int = 256
    max_trace_events: int = 1_000_000

    def __post_init__(self):
        for name in ("max_call_depth", "max_choice_width", "max_trace_events"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


class Phase(enum.Enum):
    EVAL = "eval"
    BACKCHAIN = "backchain"

    def __str__(self) -> str:
        return self.value


class Tag(enum.Enum):
    ENTER = "Enter"
    SUCCEED = "Succeed"
    FAIL = "Fail"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """One rule application. ``reason`` is set only where a failure originates."""

    rule: int
    phase: Phase
    depth: int
    subject: str
    tag: Tag
    reason: Optional[FailReason] = None

    def __str__(self) -> str:
        line = f"R{self.rule} {self.phase} d={self.depth} {self.tag} | {self.subject}"
        if self.reason is not None:
            line += f"  # {self.reason}"
        return line


TraceSink = Callable[[TraceEvent], None]


class TraceBuffer:
    """A trace sink that keeps at most ``limit`` events."""

    def __init__(self, limit: int = 1_000_000):
        self.limit = limit
        self.events: list[TraceEvent] = []
        self.truncated = False

    def __call__(self, event: TraceEvent) -> None:
        if len(self.events) < self.limit:
            self.events.append(event)
        else:
            self.truncated = True

    def lines(self) -> list[str]:
        out = [str(e) for e in self.events]
        if self.truncated:
            out.append(truncation_marker(self.limit))
        return out


def truncation_marker(limit: int) -> str:
    return f"... trace truncated after {limit} events"


class UnboundVariable(Exception):
    pass


class _Abort(Exception):
    def __init__(self, error: HardError):
        self.error = error


# ---------------------------------------------------------------- rule 4


def match_head(clause: Clause, args: Sequence[Value]) -> Optional[dict]:
    """The substitution binding ``clause``'s head to ``args``, or None on mismatch."""
    if len(args) != len(clause.params):
        return None
    s = {}
    for p, a in zip(clause.params, args):
        if type(p) is PVar:
            s[p.name] = a
        elif p.value != a:
            return None
    return s


def substitute(expr: Expr, s: Mapping[str, Value]) -> Expr:
    """Replace every variable in ``expr`` by the ground expression of its value."""
    t = type(expr)
    if t is Var:
        try:
            return value_to_expr(s[expr.name])
        except KeyError:
            raise UnboundVariable(expr.name) from None
    if t is Lit:
        return expr
    if t is Call:
        if expr.ground is not None or not expr.args:
            return expr
        return Call(expr.fname, tuple(substitute(a, s) for a in expr.args), expr.pos)
    if t is Choice:
        return Choice(tuple(substitute(b, s) for b in expr.branches), expr.pos)
    return If(substitute(expr.cond, s), substitute(expr.then, s), substitute(expr.orelse, s), expr.pos)


def _const_value(e: Expr, env: Mapping[str, Value]) -> Value:
    """Value of a constant-like expression (literal, variable or constructor term)."""
    t = type(e)
    if t is Lit:
        return e.value
    if t is Var:
        try:
            return env[e.name]
        except KeyError:
            raise _Abort(HardError(ErrorKind.UNBOUND_VARIABLE, f"unbound variable {e.name!r}", e.pos)) from None
    if e.ground is not None:
        return e.ground
    heads = []
    while type(e) is Call and e.ctor and e.ground is None:
        heads.append(e.args[0])
        e = e.args[1]
    out = _const_value(e, env)
    for h in reversed(heads):
        out = ConsV(_const_value(h, env), out)
    return out


def _call_subject(fname: str, vals: Sequence[Value]) -> str:
    return pretty(Call(fname, tuple(value_to_expr(v) for v in vals)))


# ---------------------------------------------------------------- machine

_EVAL, _RET, _FAIL = 0, 1, 2


class _Machine:
    def __init__(self, program: Program, limits: Limits, sink: Optional[TraceSink]):
        self.program = program
        self.index = program.index
        self.limits = limits
        self.sink = sink
        self.tracing = sink is not None

    def emit(self, rule: int, tag: Tag, depth: int, subject: str, reason=None) -> None:
        phase = Phase.EVAL if rule >= 5 else Phase.BACKCHAIN
        self.sink(TraceEvent(rule, phase, depth, subject, tag, reason))

    def subject(self, e: Expr, env: Mapping[str, Value]) -> str:
        return pretty(substitute(e, env) if env else e)

    def run(self, stack: list, mode: int, a, env, depth: int) -> Outcome:
        try:
            while True:
                if mode == _EVAL:
                    mode, a, env, depth = self.step(stack, a, env, depth)
                elif not stack:
                    return Success(a) if mode == _RET else a
                elif mode == _RET:
                    mode, a, env, depth = stack[-1].ret(self, stack, a)
                else:
                    mode, a, env, depth = stack[-1].fail(self, stack, a)
        except _Abort as abort:
            return abort.error

    def step(self, stack: list, e: Expr, env, depth: int):
        t = type(e)
        if t is Lit or t is Var or (t is Call and e.ctor):
            v = _const_value(e, env)
            if self.tracing:
                self.emit(7, Tag.SUCCEED, depth, pretty_value(v))
            return _RET, v, None, depth
        if t is Call:
            if e.const_args:
                return self.dispatch(stack, e, [_const_value(a, env) for a in e.args], depth)
            frame = _ArgsFrame(e, env, depth)
            if self.tracing:
                frame.subject = self.subject(e, env)
                self.emit(6, Tag.ENTER, depth, frame.subject)
            stack.append(frame)
            return _EVAL, e.args[0], env, depth
        if t is Choice:
            if len(e.branches) > self.limits.max_choice_width:
                raise _Abort(HardError(
                    ErrorKind.CHOICE_WIDTH_EXCEEDED,
                    f"choice of {len(e.branches)} branches exceeds limit {self.limits.max_choice_width}",
                    e.pos))
            frame = _ChoiceFrame(e, env, depth)
            stack.append(frame)
            return frame.enter(self)
        if t is If:
            stack.append(_IfFrame(e, env, depth))
            return _EVAL, e.cond, env, depth
        raise TypeError(f"not an expression: {e!r}")

    def dispatch(self, stack: list, call: Call, vals: list, depth: int):
        """Rule 5: a call whose arguments are all values."""
        fname = call.fname
        subject = _call_subject(fname, vals) if self.tracing else ""
        if self.tracing:
            self.emit(5, Tag.ENTER, depth, subject)
        entry = BUILTINS.get((fname, len(vals)))
        if entry is not None:
            out = entry.apply(vals)
            if type(out) is Success:
                if self.tracing:
                    self.emit(5, Tag.SUCCEED, depth, subject)
                return _RET, out.value, None, depth
            if self.tracing:
                self.emit(5, Tag.FAIL, depth, subject, out.reason)
            return _FAIL, SoftFail(out.reason, call.pos), None, depth
        if depth >= self.limits.max_call_depth:
            raise _Abort(HardError(
                ErrorKind.DEPTH_EXCEEDED,
                f"call depth exceeded limit of {self.limits.max_call_depth}",
                call.pos))
        cands = self.index.get((fname, len(vals)), ())
        if not cands:
            if self.tracing:
                self.emit(5, Tag.FAIL, depth, subject, FailReason.NO_MATCHING_CLAUSE)
            return _FAIL, SoftFail(FailReason.NO_MATCHING_CLAUSE, call.pos), None, depth
        frame = _CallFrame(call, vals, cands, depth + 1, subject)
        stack.append(frame)
        return frame.advance(self, stack)


class _ArgsFrame:
    """Rule 6: evaluate arguments left to right, then dispatch."""

    __slots__ = ("call", "env", "depth", "vals", "subject", "applied")

    def __init__(self, call: Call, env, depth: int):
        self.call = call
        self.env = env
        self.depth = depth
        self.vals: list = []
        self.subject = ""
        self.applied = False

    def ret(self, m: _Machine, stack: list, v: Value):
        if self.applied:
            stack.pop()
            if m.tracing:
                m.emit(6, Tag.SUCCEED, self.depth, self.subject)
            return _RET, v, None, self.depth
        self.vals.append(v)
        args = self.call.args
        if len(self.vals) < len(args):
            return _EVAL, args[len(self.vals)], self.env, self.depth
        self.applied = True
        return m.dispatch(stack, self.call, self.vals, self.depth)

    def fail(self, m: _Machine, stack: list, f: SoftFail):
        stack.pop()
        if m.tracing:
            m.emit(6, Tag.FAIL, self.depth, self.subject)
        return _FAIL, f, None, self.depth


class _ChoiceFrame:
    """Rule 8: the first branch that succeeds; soft failures move to the next."""

    __slots__ = ("node", "env", "depth", "i", "subject")

    def __init__(self, node: Choice, env, depth: int):
        self.node = node
        self.env = env
        self.depth = depth
        self.i = 0
        self.subject = ""

    def enter(self, m: _Machine):
        branch = self.node.branches[self.i]
        if m.tracing:
            self.subject = m.subject(branch, self.env)
            m.emit(8, Tag.ENTER, self.depth, self.subject)
        return _EVAL, branch, self.env, self.depth

    def ret(self, m: _Machine, stack: list, v: Value):
        stack.pop()
        if m.tracing:
            m.emit(8, Tag.SUCCEED, self.depth, self.subject)
        return _RET, v, None, self.depth

    def fail(self, m: _Machine, stack: list, f: SoftFail):
        if m.tracing:
            m.emit(8, Tag.FAIL, self.depth, self.subject)
        self.i += 1
        if self.i < len(self.node.branches):
            return self.enter(m)
        stack.pop()
        return _FAIL, f, None, self.depth


class _IfFrame:
    __slots__ = ("node", "env", "depth")

    def __init__(self, node: If, env, depth: int):
        self.node = node
        self.env = env
        self.depth = depth

    def ret(self, m: _Machine, stack: list, v: Value):
        stack.pop()
        if v == TRUE:
            return _EVAL, self.node.then, self.env, self.depth
        if v == FALSE:
            return _EVAL, self.node.orelse, self.env, self.depth
        return _FAIL, SoftFail(FailReason.TYPE_MISMATCH, self.node.pos), None, self.depth

    def fail(self, m: _Machine, stack: list, f: SoftFail):
        stack.pop()
        return _FAIL, f, None, self.depth


class _CallFrame:
    """Rules 1-4: scan the candidate clauses in textual order with deep backtracking.

    The candidates form the conjunction C1 ∧ (C2 ∧ (... ∧ Cm)). Trying a
    non-last clause is a rule 2 step; moving past it is a rule 3 step whose
    event stays open until the whole scan ends.
    """

    __slots__ = ("call", "vals", "cands", "depth", "subject", "i", "r3",
                 "in_r2", "matched", "last", "emit_r5")

    def __init__(self, call: Call, vals: list, cands: tuple, depth: int, subject: str,
                 emit_r5: bool = True):
        self.call = call
        self.vals = vals
        self.cands = cands
        self.depth = depth
        self.subject = subject
        self.emit_r5 = emit_r5
        self.i = 0
        self.r3: list[str] = []
        self.in_r2 = False
        self.matched = False
        self.last: Optional[SoftFail] = None

    def _skip(self, m: _Machine) -> None:
        """Leave clause i (rule 2 failed) and step into the rest (rule 3)."""
        if m.tracing:
            m.emit(2, Tag.FAIL, self.depth, self.cands[self.i].head_text)
        self.i += 1
        if m.tracing:
            nxt = self.cands[self.i].head_text
            self.r3.append(nxt)
            m.emit(3, Tag.ENTER, self.depth, nxt)

    def advance(self, m: _Machine, stack: list):
        cands = self.cands
        n = len(cands)
        while self.i < n:
            c = cands[self.i]
            is_last = self.i == n - 1
            if m.tracing and not is_last:
                m.emit(2, Tag.ENTER, self.depth, c.head_text)
            s = match_head(c, self.vals)
            if s is None:
                if is_last:
                    break
                self._skip(m)
                continue
            self.matched = True
            self.in_r2 = not is_last
            if m.tracing:
                if c.has_vars:
                    m.emit(4, Tag.ENTER, self.depth, c.head_text)
                m.emit(1, Tag.ENTER, self.depth, self.subject)
            return _EVAL, c.body, s, self.depth
        return self._exhausted(m, stack)

    def _close(self, m: _Machine, tag: Tag) -> None:
        for subject in reversed(self.r3):
            m.emit(3, tag, self.depth, subject)
        self.r3.clear()

    def _exhausted(self, m: _Machine, stack: list):
        stack.pop()
        if self.matched:
            f, reason = self.last, None
        else:
            f = SoftFail(FailReason.NO_MATCHING_CLAUSE, self.call.pos)
            reason = FailReason.NO_MATCHING_CLAUSE
        if m.tracing:
            self._close(m, Tag.FAIL)
            if self.emit_r5:
                m.emit(5, Tag.FAIL, self.depth - 1, self.subject, reason)
        return _FAIL, f, None, self.depth - 1

    def ret(self, m: _Machine, stack: list, v: Value):
        stack.pop()
        if m.tracing:
            c = self.cands[self.i]
            m.emit(1, Tag.SUCCEED, self.depth, self.subject)
            if c.has_vars:
                m.emit(4, Tag.SUCCEED, self.depth, c.head_text)
            if self.in_r2:
                m.emit(2, Tag.SUCCEED, self.depth, c.head_text)
            self._close(m, Tag.SUCCEED)
            if self.emit_r5:
                m.emit(5, Tag.SUCCEED, self.depth - 1, self.subject)
        return _RET, v, None, self.depth - 1

    def fail(self, m: _Machine, stack: list, f: SoftFail):
        self.last = f
        if m.tracing:
            c = self.cands[self.i]
            m.emit(1, Tag.FAIL, self.depth, self.subject)
            if c.has_vars:
                m.emit(4, Tag.FAIL, self.depth, c.head_text)
        if not self.in_r2:
            return self._exhausted(m, stack)
        self._skip(m)
        return self.advance(m, stack)


# ---------------------------------------------------------------- entry points


def evaluate(program: Program, expr: Expr, limits: Optional[Limits] = None,
             sink: Optional[TraceSink] = None) -> Outcome:
    """Evaluate a closed expression against ``program``."""
    m = _Machine(program, limits or Limits(), sink)
    return m.run([], _EVAL, expr, {}, 0)


def eval_in_env(program: Program, expr: Expr, env: Mapping[str, Value], depth: int = 0,
                limits: Optional[Limits] = None, sink: Optional[TraceSink] = None) -> Outcome:
    """Evaluate ``expr`` with its variables bound by ``env`` (a clause body, say)."""
    m = _Machine(program, limits or Limits(), sink)
    return m.run([], _EVAL, expr, dict(env), depth)


def backchain(candidates: Sequence[Clause], program: Program, fname: str,
              args: Sequence[Value], limits: Optional[Limits] = None,
              sink: Optional[TraceSink] = None, depth: int = 0) -> Outcome:
    """Resolve ``fname(args)`` against ``candidates``; bodies run against ``program``."""
    m = _Machine(program, limits or Limits(), sink)
    cands = tuple(c for c in candidates if c.fname == fname and c.arity == len(args))
    call = Call(fname, tuple(value_to_expr(v) for v in args))
    if not cands:
        return SoftFail(FailReason.NO_MATCHING_CLAUSE, None)
    subject = _call_subject(fname, args) if sink is not None else ""
    frame = _CallFrame(call, list(args), cands, depth + 1, subject, emit_r5=False)
    stack = [frame]
    try:
        mode, a, env, d = frame.advance(m, stack)
    except _Abort as abort:
        return abort.error
    return m.run(stack, mode, a, env, d)


@dataclass
class RunResult:
    outcome: Outcome
    trace: list = field(default_factory=list)
    truncated: bool = False

    def trace_lines(self) -> list[str]:
        lines = [str(e) for e in self.trace]
        if self.truncated:
            lines.append(truncation_marker(len(self.trace)))
        return lines


def run_main(program: Program, entry: Expr, limits: Optional[Limits] = None) -> RunResult:
    """Evaluate ``entry`` while recording its trace."""
    limits = limits or Limits()
    buf = TraceBuffer(limits.max_trace_events)
    outcome = evaluate(program, entry, limits, buf)
    return RunResult(outcome, buf.events, buf.truncated)


def derivation_path(events: Sequence[TraceEvent]) -> list[int]:
    """Rules of the successful derivation recorded in a trace, in pre-order.

    Rule 7 events are leaves; every other rule is an Enter event closed by a
    Succeed or Fail event. Subtrees closed by Fail are dropped, as are rule
    applications left open (by a hard error).
    """
    # Each open node: [rule, children]; a child is (rule, children) of a closed success.
    root: list = []
    stack: list = []
    for ev in events:
        siblings = stack[-1][1] if stack else root
        if ev.rule == 7:
            siblings.append((7, []))
        elif ev.tag is Tag.ENTER:
            stack.append([ev.rule, []])
        else:
            rule, children = stack.pop()
            if rule != ev.rule:
                raise ValueError(f"unbalanced trace: R{rule} closed by R{ev.rule}")
            if ev.tag is Tag.SUCCEED:
                (stack[-1][1] if stack else root).append((rule, children))
    out: list[int] = []
    todo = list(reversed(root))
    while todo:
        rule, children = todo.pop()
        out.append(rule)
        todo.extend(reversed(children))
    return out
