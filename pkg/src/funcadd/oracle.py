"""A naive, independent transcription of the evaluation rules as a search.

Used only to cross-check the evaluator. Unlike the evaluator it works by
literal substitution into clause bodies, recurses on the Python stack, and
does not build traces; it reconstructs rule paths directly.

Two entry points:

``enumerate_outcomes``
    Treats the choice among clauses (rules 2/3) as genuinely
    nondeterministic: every call may try its candidate clauses in any order,
    while sequential choice (rule 8) stays ordered. The result collects one
    derivation per distinct value.

``first_success_leftmost``
    The deterministic strategy: clauses in textual order with deep
    backtracking, branches left to right.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .builtins import BUILTINS
from .semantics import substitute
from .syntax import Call, Choice, Clause, Expr, If, Lit, Program, PVar, Var
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
)


@dataclass(frozen=True)
class Derivation:
    result: Value
    rule_path: tuple
    depth_used: int


@dataclass(frozen=True)
class Enumeration:
    """Derivations found, one per distinct result, in discovery order.

    ``bound_exceeded`` is set when some explored branch hit the depth bound,
    so the enumeration may be incomplete.
    """

    derivations: tuple
    bound_exceeded: bool

    def results(self) -> set:
        return {d.result for d in self.derivations}

    def __contains__(self, value) -> bool:
        return any(d.result == value for d in self.derivations)

    def __iter__(self):
        return iter(self.derivations)

    def __len__(self) -> int:
        return len(self.derivations)


def _constant(e: Expr) -> Optional[Value]:
    """The value of ``e`` if it is a constant: a literal or a ground cons term."""
    if type(e) is Lit:
        return e.value
    if type(e) is Call and e.fname == "cons" and len(e.args) == 2:
        h = _constant(e.args[0])
        if h is None:
            return None
        t = _constant(e.args[1])
        return None if t is None else ConsV(h, t)
    return None


def _bind(clause: Clause, args) -> Optional[dict]:
    if len(clause.params) != len(args):
        return None
    s = {}
    for p, a in zip(clause.params, args):
        if isinstance(p, PVar):
            s[p.name] = a
        elif p.value != a:
            return None
    return s


def _candidates(program: Program, fname: str, n: int) -> list:
    return [c for c in program.clauses if c.fname == fname and len(c.params) == n]


def _backchain_prefix(k: int, m: int, clause: Clause) -> tuple:
    """Rules used to reach and enter clause k (0-based) of m candidates."""
    path = (3,) * k
    if k < m - 1:
        path += (2,)
    if any(isinstance(p, PVar) for p in clause.params):
        path += (4,)
    return path + (1,)


# ---------------------------------------------------------------- enumeration

_FAIL = object()


class _Enumerator:
    def __init__(self, program: Program, bound: int):
        self.program = program
        self.bound = bound
        self.hit = False
        self.memo: dict = {}

    def runs(self, e: Expr, depth: int) -> dict:
        """Map each possible run outcome (a Value or _FAIL) to (path, depth_used)."""
        key = (e, depth)
        if key not in self.memo:
            self.memo[key] = self._runs(e, depth)
        return self.memo[key]

    def _runs(self, e: Expr, depth: int) -> dict:
        c = _constant(e)
        if c is not None:
            return {c: ((7,), 0)}
        if isinstance(e, Var):
            raise ValueError(f"free variable {e.name!r}")
        if isinstance(e, Call):
            if all(_constant(a) is not None for a in e.args):
                return self.call(e.fname, tuple(_constant(a) for a in e.args), depth)
            return self.call_with_args(e, depth)
        if isinstance(e, Choice):
            out: dict = {}
            for b in e.branches:
                br = self.runs(b, depth)
                for k, info in br.items():
                    if k is not _FAIL:
                        out.setdefault(k, ((8,) + info[0], info[1]))
                if _FAIL not in br:
                    return out
            out.setdefault(_FAIL, None)
            return out
        if isinstance(e, If):
            out = {}
            for k, info in self.runs(e.cond, depth).items():
                if k is not _FAIL and (k == TRUE or k == FALSE):
                    for kk, v in self.runs(e.then if k == TRUE else e.orelse, depth).items():
                        if kk is _FAIL:
                            out.setdefault(_FAIL, None)
                        else:
                            out.setdefault(kk, (info[0] + v[0], max(info[1], v[1])))
                else:
                    out.setdefault(_FAIL, None)
            return out
        raise TypeError(f"not an expression: {e!r}")

    def call_with_args(self, e: Call, depth: int) -> dict:
        per_arg = []
        out: dict = {}
        for a in e.args:
            r = self.runs(a, depth)
            if _FAIL in r:
                out[_FAIL] = None
            succ = [(k, v) for k, v in r.items() if k is not _FAIL]
            if not succ:
                return out
            per_arg.append(succ)
        for combo in itertools.product(*per_arg):
            vals = tuple(k for k, _ in combo)
            arg_path = tuple(itertools.chain.from_iterable(p for _, (p, _) in combo))
            arg_depth = max((d for _, (_, d) in combo), default=0)
            for k, info in self.call(e.fname, vals, depth).items():
                if k is _FAIL:
                    out.setdefault(_FAIL, None)
                else:
                    path, d = info
                    out.setdefault(k, ((6,) + arg_path + path, max(arg_depth, d)))
        return out

    def call(self, fname: str, vals: tuple, depth: int) -> dict:
        entry = BUILTINS.get((fname, len(vals)))
        if entry is not None:
            res = entry.apply(vals)
            return {res.value: ((5,), 0)} if isinstance(res, Success) else {_FAIL: None}
        if depth + 1 > self.bound:
            self.hit = True
            return {}
        cands = _candidates(self.program, fname, len(vals))
        bodies: dict = {}

        def body_runs(k: int) -> Optional[dict]:
            if k not in bodies:
                s = _bind(cands[k], vals)
                bodies[k] = None if s is None else self.runs(substitute(cands[k].body, s), depth + 1)
            return bodies[k]

        memo: dict = {}

        def orders(remaining: frozenset) -> dict:
            # Every run picks some untried clause next; a clause that does not
            # match, or whose body fails, hands over to the remaining ones.
            if remaining in memo:
                return memo[remaining]
            out: dict = {}
            if not remaining:
                out[_FAIL] = None
            for k in sorted(remaining):
                br = body_runs(k)
                if br is None or _FAIL in br:
                    for kk, info in orders(remaining - {k}).items():
                        out.setdefault(kk, info)
                for kk, info in (br or {}).items():
                    if kk is _FAIL:
                        continue
                    path, d = info
                    out.setdefault(kk, ((5,) + _backchain_prefix(k, len(cands), cands[k]) + path, d + 1))
            memo[remaining] = out
            return out

        return orders(frozenset(range(len(cands))))


def enumerate_outcomes(program: Program, expr: Expr, depth_bound: int) -> Enumeration:
    """All values ``expr`` can reach when clause choice is left open."""
    if depth_bound < 1:
        raise ValueError("depth_bound must be at least 1")
    en = _Enumerator(program, depth_bound)
    runs = en.runs(expr, 0)
    derivs = tuple(Derivation(k, path, d) for k, (path, d) in
                   ((k, v) for k, v in runs.items() if k is not _FAIL))
    return Enumeration(derivs, en.hit)


# ---------------------------------------------------------------- leftmost


class _BoundHit(Exception):
    def __init__(self, error: HardError):
        self.error = error


class _Leftmost:
    def __init__(self, program: Program, bound: int):
        self.program = program
        self.bound = bound

    def solve(self, e: Expr, depth: int):
        """Return (Success | SoftFail, rule path of the successful derivation)."""
        c = _constant(e)
        if c is not None:
            return Success(c), (7,)
        if isinstance(e, Call):
            if all(_constant(a) is not None for a in e.args):
                return self.call(e, tuple(_constant(a) for a in e.args), depth)
            vals, path = [], (6,)
            for a in e.args:
                out, p = self.solve(a, depth)
                if not isinstance(out, Success):
                    return out, ()
                vals.append(out.value)
                path += p
            out, p = self.call(e, tuple(vals), depth)
            return out, (path + p if isinstance(out, Success) else ())
        if isinstance(e, Choice):
            out = None
            for b in e.branches:
                out, p = self.solve(b, depth)
                if isinstance(out, Success):
                    return out, (8,) + p
            return out, ()
        if isinstance(e, If):
            out, cp = self.solve(e.cond, depth)
            if not isinstance(out, Success):
                return out, ()
            if out.value != TRUE and out.value != FALSE:
                return SoftFail(FailReason.TYPE_MISMATCH, e.pos), ()
            out, p = self.solve(e.then if out.value == TRUE else e.orelse, depth)
            return out, (cp + p if isinstance(out, Success) else ())
        raise TypeError(f"cannot evaluate {e!r}")

    def call(self, e: Call, vals: tuple, depth: int):
        entry = BUILTINS.get((e.fname, len(vals)))
        if entry is not None:
            res = entry.apply(vals)
            if isinstance(res, Success):
                return res, (5,)
            return SoftFail(res.reason, e.pos), ()
        if depth + 1 > self.bound:
            raise _BoundHit(HardError(ErrorKind.DEPTH_EXCEEDED,
                                      f"call depth exceeded limit of {self.bound}", e.pos))
        cands = _candidates(self.program, e.fname, len(vals))
        last = None
        for k, clause in enumerate(cands):
            s = _bind(clause, vals)
            if s is None:
                continue
            out, p = self.solve(substitute(clause.body, s), depth + 1)
            if isinstance(out, Success):
                return out, (5,) + _backchain_prefix(k, len(cands), clause) + p
            last = out
        if last is None:
            return SoftFail(FailReason.NO_MATCHING_CLAUSE, e.pos), ()
        return last, ()


def leftmost_derivation(program: Program, expr: Expr, depth_bound: int) -> tuple:
    """``(outcome, rule_path)``; the path is empty unless the outcome is a Success."""
    try:
        return _Leftmost(program, depth_bound).solve(expr, 0)
    except _BoundHit as hit:
        return hit.error, ()
    except RecursionError:
        return HardError(ErrorKind.DEPTH_EXCEEDED, "host recursion limit reached"), ()


def first_success_leftmost(program: Program, expr: Expr, depth_bound: int) -> Outcome:
    return leftmost_derivation(program, expr, depth_bound)[0]
