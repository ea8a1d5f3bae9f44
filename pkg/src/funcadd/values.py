"""Runtime values and evaluation outcomes."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


@dataclass(frozen=True, slots=True)
class Pos:
    """A source position; ``origin`` names the file or input the text came from."""

    origin: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.col}"


@dataclass(frozen=True, slots=True)
class IntV:
    value: int

    def __repr__(self) -> str:
        return f"IntV({self.value})"


@dataclass(frozen=True, slots=True)
class AtomV:
    name: str

    def __repr__(self) -> str:
        return f"AtomV({self.name})"


@dataclass(frozen=True, slots=True, eq=False)
class ConsV:
    head: "Value"
    tail: "Value"

    # Lists can be long; walk the spine instead of recursing on it.
    def __eq__(self, other: object) -> bool:
        a: object = self
        b: object = other
        while type(a) is ConsV and type(b) is ConsV:
            if a is b:
                return True
            if a.head != b.head:
                return False
            a, b = a.tail, b.tail
        if type(a) is ConsV or type(b) is ConsV:
            return False
        return a == b

    def __hash__(self) -> int:
        h = 0x345678
        node: Value = self
        while type(node) is ConsV:
            h = (h * 1000003) ^ hash(node.head)
            node = node.tail
        return hash((h, node))

    def __repr__(self) -> str:
        return f"ConsV<{pretty_value(self)}>"


Value = Union[IntV, AtomV, ConsV]

NIL = AtomV("nil")
TRUE = AtomV("true")
FALSE = AtomV("false")


def from_bool(b: bool) -> AtomV:
    return TRUE if b else FALSE


def from_list(items: Iterable[Value], tail: Value = NIL) -> Value:
    out = tail
    for item in reversed(list(items)):
        out = ConsV(item, out)
    return out


def from_python(obj) -> Value:
    """Convert nested Python ints/strs/lists into a Value (handy in tests)."""
    if isinstance(obj, bool):
        return from_bool(obj)
    if isinstance(obj, int):
        return IntV(obj)
    if isinstance(obj, str):
        return AtomV(obj)
    if isinstance(obj, (list, tuple)):
        return from_list([from_python(x) for x in obj])
    raise TypeError(f"cannot convert {obj!r}")


def to_list(v: Value) -> Optional[list]:
    """Return the elements of a proper list, or None for anything else."""
    items = []
    while type(v) is ConsV:
        items.append(v.head)
        v = v.tail
    return items if v == NIL else None


def pretty_value(v: Value) -> str:
    if type(v) is IntV:
        return str(v.value)
    if type(v) is AtomV:
        return v.name
    heads = []
    node: Value = v
    while type(node) is ConsV:
        heads.append(pretty_value(node.head))
        node = node.tail
    if node == NIL:
        return "[" + ", ".join(heads) + "]"
    return "".join(f"cons({h}, " for h in heads) + pretty_value(node) + ")" * len(heads)


class FailReason(enum.Enum):
    NO_MATCHING_CLAUSE = "no-matching-clause"
    DIVIDE_BY_ZERO = "divide-by-zero"
    INTEGER_OVERFLOW = "integer-overflow"
    EMPTY_LIST_ACCESS = "empty-list-access"
    TYPE_MISMATCH = "type-mismatch"
    EXPLICIT_FAIL = "explicit-fail"

    def __str__(self) -> str:
        return self.value


class ErrorKind(enum.Enum):
    DEPTH_EXCEEDED = "depth-exceeded"
    CHOICE_WIDTH_EXCEEDED = "choice-width-exceeded"
    UNBOUND_VARIABLE = "unbound-variable"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class Success:
    value: Value


@dataclass(frozen=True, slots=True)
class SoftFail:
    """A failure that ``++`` recovers from by moving to its next branch."""

    reason: FailReason
    at: Optional[Pos] = None


@dataclass(frozen=True, slots=True)
class HardError:
    """A non-recoverable failure; propagates through every choice."""

    kind: ErrorKind
    message: str
    at: Optional[Pos] = None


Outcome = Union[Success, SoftFail, HardError]
