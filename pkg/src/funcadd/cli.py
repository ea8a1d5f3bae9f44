"""Command line runner and REPL.

Exit codes for ``run``: 0 success, 1 failure, 2 hard error, 3 usage or
syntax error, 4 oracle disagreement.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from typing import Optional, TextIO

from .oracle import first_success_leftmost
from .semantics import Limits, TraceEvent, evaluate, truncation_marker
from .syntax import FuncSyntaxError, Program, parse_expr, parse_program, pretty, tokenize
from .values import HardError, Outcome, SoftFail, Success, pretty_value

EXIT_OK, EXIT_FAIL, EXIT_ERROR, EXIT_USAGE, EXIT_ORACLE = range(5)

ENTRY_ORIGIN = "<entry>"


@dataclass
class RunConfig:
    program_path: Optional[str] = None
    entry: str = "main()"
    trace: bool = False
    depth_limit: Optional[int] = None
    oracle_check: bool = False
    oracle_bound: int = 16

    def __post_init__(self):
        if self.oracle_bound < 1:
            raise ValueError("oracle_bound must be at least 1")
        if self.depth_limit is not None and self.depth_limit < 1:
            raise ValueError("depth_limit must be positive")

    def limits(self) -> Limits:
        return Limits(max_call_depth=self.depth_limit) if self.depth_limit else Limits()


def format_outcome(outcome: Outcome) -> str:
    if isinstance(outcome, Success):
        return pretty_value(outcome.value)
    if isinstance(outcome, SoftFail):
        return f"failure: {outcome.reason} at {outcome.at or '?'}"
    at = f" (at {outcome.at})" if outcome.at else ""
    return f"error: {outcome.kind}: {outcome.message}{at}"


def exit_code(outcome: Outcome) -> int:
    if isinstance(outcome, Success):
        return EXIT_OK
    return EXIT_FAIL if isinstance(outcome, SoftFail) else EXIT_ERROR


class StreamSink:
    """Write trace events as they happen, up to ``limit`` lines."""

    def __init__(self, stream: TextIO, limit: int):
        self.stream = stream
        self.limit = limit
        self.count = 0

    def __call__(self, event: TraceEvent) -> None:
        self.count += 1
        if self.count <= self.limit:
            self.stream.write(f"{event}\n")
        elif self.count == self.limit + 1:
            self.stream.write(truncation_marker(self.limit) + "\n")


def load_program(path: str) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse_program(f.read(), origin=path)


def oracle_verdict(program: Program, entry, engine: Outcome, bound: int) -> tuple[str, bool]:
    """The ``oracle:`` line and whether it reports a disagreement."""
    oracle = first_success_leftmost(program, entry, bound)
    if isinstance(oracle, HardError):
        return f"oracle: inconclusive ({oracle.kind}: bound {bound})", False
    if oracle == engine:
        return "oracle: agree", False
    return f"oracle: DISAGREE engine={format_outcome(engine)} oracle={format_outcome(oracle)}", True


def cmd_run(config: RunConfig, out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    try:
        program = load_program(config.program_path) if config.program_path else Program()
        entry = parse_expr(config.entry, origin=ENTRY_ORIGIN)
    except FuncSyntaxError as e:
        err.write(f"syntax error: {e}\n")
        return EXIT_USAGE
    except OSError as e:
        err.write(f"error: cannot read {config.program_path}: {e.strerror}\n")
        return EXIT_USAGE
    limits = config.limits()
    sink = StreamSink(err, limits.max_trace_events) if config.trace else None
    outcome = evaluate(program, entry, limits, sink)
    out.write(format_outcome(outcome) + "\n")
    code = exit_code(outcome)
    if config.oracle_check:
        line, disagree = oracle_verdict(program, entry, outcome, config.oracle_bound)
        out.write(line + "\n")
        if disagree:
            code = EXIT_ORACLE
    return code


REPL_HELP = """\
  f(x) = ...        add a clause (clauses accumulate in entry order)
  expr              evaluate an expression
  :load <path>      append the clauses of a file
  :list             show the session program
  :trace on|off     toggle tracing (to stderr)
  :quit             leave"""


def _is_clause(line: str) -> bool:
    depth = 0
    for tok in tokenize(line):
        if tok.kind == "op":
            if tok.text in "([":
                depth += 1
            elif tok.text in ")]":
                depth -= 1
            elif tok.text == "=" and depth == 0:
                return True
    return False


class Repl:
    def __init__(self, out: TextIO = sys.stdout, err: TextIO = sys.stderr,
                 limits: Optional[Limits] = None):
        self.program = Program()
        self.out = out
        self.err = err
        self.limits = limits or Limits()
        self.trace = False
        self.running = True

    def load(self, path: str) -> None:
        self.program = self.program + load_program(path)

    def handle(self, line: str) -> None:
        line = line.strip()
        if not line or line.startswith("#"):
            return
        try:
            if line.startswith(":"):
                self.meta(line)
            elif _is_clause(line):
                self.program = self.program + parse_program(line, origin="<repl>")
            else:
                entry = parse_expr(line, origin=ENTRY_ORIGIN)
                sink = StreamSink(self.err, self.limits.max_trace_events) if self.trace else None
                self.out.write(format_outcome(evaluate(self.program, entry, self.limits, sink)) + "\n")
        except FuncSyntaxError as e:
            self.out.write(f"syntax error: {e}\n")
        except OSError as e:
            self.out.write(f"error: {e}\n")

    def meta(self, line: str) -> None:
        cmd, _, arg = line.partition(" ")
        arg = arg.strip()
        if cmd == ":quit":
            self.running = False
        elif cmd == ":load" and arg:
            self.load(arg)
        elif cmd == ":list":
            self.out.write(pretty(self.program))
        elif cmd == ":trace" and arg in ("on", "off"):
            self.trace = arg == "on"
        elif cmd == ":help":
            self.out.write(REPL_HELP + "\n")
        else:
            self.out.write(f"unknown command {line!r}; try :help\n")


def cmd_repl(program_path: Optional[str] = None, inp: TextIO = sys.stdin,
             out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    repl = Repl(out, err)
    if program_path:
        repl.handle(f":load {program_path}")
    interactive = inp.isatty()
    while repl.running:
        if interactive:
            out.write("funcadd> ")
            out.flush()
        line = inp.readline()
        if not line:
            break
        repl.handle(line)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="funcadd", description="Interpreter for a first-order functional "
                     "language with sequential choice (++).")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="evaluate an entry expression")
    run.add_argument("file", nargs="?", help="program file (.fnp)")
    run.add_argument("--entry", default="main()", help="expression to evaluate (default: main())")
    run.add_argument("--trace", action="store_true", help="print rule trace to stderr")
    run.add_argument("--depth-limit", type=_positive, help="maximum nested call depth")
    run.add_argument("--oracle-check", action="store_true", help="cross-check with the search oracle")
    run.add_argument("--oracle-bound", type=_positive, default=16, help="oracle depth bound (default 16)")
    repl = sub.add_parser("repl", help="interactive session")
    repl.add_argument("file", nargs="?", help="program file to load first")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "repl":
        return cmd_repl(args.file)
    config = RunConfig(args.file, args.entry, args.trace, args.depth_limit,
                       args.oracle_check, args.oracle_bound)
    return cmd_run(config)


if __name__ == "__main__":
    sys.exit(main())
