"""An interpreter for a first-order eager functional language with
sequential choice: ``e1 ++ e2`` evaluates to ``e1`` unless it fails, in which
case ``e2`` is tried.
"""

from .builtins import apply_builtin
from .oracle import enumerate_outcomes, first_success_leftmost
from .semantics import Limits, TraceEvent, backchain, evaluate, match_head, run_main, substitute
from .syntax import parse_expr, parse_program, pretty, tokenize
from .values import AtomV, ConsV, HardError, IntV, SoftFail, Success

__all__ = [
    "AtomV", "ConsV", "HardError", "IntV", "Limits", "SoftFail", "Success", "TraceEvent",
    "apply_builtin", "backchain", "enumerate_outcomes", "evaluate", "first_success_leftmost",
    "match_head", "parse_expr", "parse_program", "pretty", "run_main", "substitute", "tokenize",
]
