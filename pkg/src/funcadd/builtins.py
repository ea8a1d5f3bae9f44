"""The primitive function table.

Every primitive is total: bad operands produce a SoftFail, never an exception.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

from .values import (
    INT_MAX,
    INT_MIN,
    ConsV,
    FailReason,
    IntV,
    Outcome,
    SoftFail,
    Success,
    Value,
    from_bool,
)


class Kind(enum.Enum):
    PURE = "pure"
    CONSTRUCTOR = "constructor"


@dataclass(frozen=True)
class BuiltinEntry:
    name: str
    arity: int
    kind: Kind
    apply: Callable[[Sequence[Value]], Outcome]


_TYPE_MISMATCH = SoftFail(FailReason.TYPE_MISMATCH)
_OVERFLOW = SoftFail(FailReason.INTEGER_OVERFLOW)
_DIV_ZERO = SoftFail(FailReason.DIVIDE_BY_ZERO)
_EMPTY = SoftFail(FailReason.EMPTY_LIST_ACCESS)
_FAIL = SoftFail(FailReason.EXPLICIT_FAIL)


def _int_result(n: int) -> Outcome:
    if INT_MIN <= n <= INT_MAX:
        return Success(IntV(n))
    return _OVERFLOW


def _arith(op: Callable[[int, int], int]):
    def apply(args):
        a, b = args
        if type(a) is not IntV or type(b) is not IntV:
            return _TYPE_MISMATCH
        return _int_result(op(a.value, b.value))
    return apply


def trunc_div(a: int, b: int) -> int:
    """Integer division rounding toward zero."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def trunc_mod(a: int, b: int) -> int:
    """Remainder carrying the dividend's sign; ``a == b * trunc_div(a, b) + trunc_mod(a, b)``."""
    return a - b * trunc_div(a, b)


def _division(op: Callable[[int, int], int]):
    def apply(args):
        a, b = args
        if type(a) is not IntV or type(b) is not IntV:
            return _TYPE_MISMATCH
        if b.value == 0:
            return _DIV_ZERO
        return _int_result(op(a.value, b.value))
    return apply


def _compare(op: Callable[[int, int], bool]):
    def apply(args):
        a, b = args
        if type(a) is not IntV or type(b) is not IntV:
            return _TYPE_MISMATCH
        return Success(from_bool(op(a.value, b.value)))
    return apply


def _head(args):
    (x,) = args
    return Success(x.head) if type(x) is ConsV else _EMPTY


def _tail(args):
    (x,) = args
    return Success(x.tail) if type(x) is ConsV else _EMPTY


_ENTRIES = [
    BuiltinEntry("+", 2, Kind.PURE, _arith(lambda a, b: a + b)),
    BuiltinEntry("-", 2, Kind.PURE, _arith(lambda a, b: a - b)),
    BuiltinEntry("*", 2, Kind.PURE, _arith(lambda a, b: a * b)),
    BuiltinEntry("/", 2, Kind.PURE, _division(trunc_div)),
    BuiltinEntry("mod", 2, Kind.PURE, _division(trunc_mod)),
    BuiltinEntry("==", 2, Kind.PURE, lambda args: Success(from_bool(args[0] == args[1]))),
    BuiltinEntry("!=", 2, Kind.PURE, lambda args: Success(from_bool(args[0] != args[1]))),
    BuiltinEntry("<", 2, Kind.PURE, _compare(lambda a, b: a < b)),
    BuiltinEntry("<=", 2, Kind.PURE, _compare(lambda a, b: a <= b)),
    BuiltinEntry(">", 2, Kind.PURE, _compare(lambda a, b: a > b)),
    BuiltinEntry(">=", 2, Kind.PURE, _compare(lambda a, b: a >= b)),
    BuiltinEntry("cons", 2, Kind.CONSTRUCTOR, lambda args: Success(ConsV(args[0], args[1]))),
    BuiltinEntry("head", 1, Kind.PURE, _head),
    BuiltinEntry("tail", 1, Kind.PURE, _tail),
    BuiltinEntry("fail", 0, Kind.PURE, lambda args: _FAIL),
]

# Keyed by (name, arity); a builtin name used at another arity is an ordinary
# (and necessarily undefined) function call.
BUILTINS: dict[tuple[str, int], BuiltinEntry] = {(e.name, e.arity): e for e in _ENTRIES}
BUILTIN_NAMES = frozenset(e.name for e in _ENTRIES)


def is_builtin(name: str, arity: int) -> bool:
    return (name, arity) in BUILTINS


def apply_builtin(name: str, args: Sequence[Value]) -> Outcome:
    entry = BUILTINS.get((name, len(args)))
    if entry is None:
        raise KeyError(f"no builtin {name}/{len(args)}")
    return entry.apply(args)
