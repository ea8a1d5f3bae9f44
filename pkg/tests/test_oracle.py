import random

from hypothesis import given, settings
from hypothesis import strategies as st

from funcadd.oracle import Derivation, enumerate_outcomes, first_success_leftmost, leftmost_derivation
from funcadd.semantics import Limits, TraceBuffer, derivation_path, evaluate
from funcadd.syntax import parse_expr, parse_program
from funcadd.values import AtomV, ErrorKind, FailReason, HardError, IntV, SoftFail, Success, from_python

from conftest import CORPUS
from gen import gen_case, gen_program

DIV = parse_program("div(x,y) = (x/y) ++ infinity")
FACT = parse_program("fact(0) = 1; fact(n) = n * fact(n - 1)")


def test_enumerate_div():
    en = enumerate_outcomes(DIV, parse_expr("div(4,0)"), 10)
    assert en.results() == {AtomV("infinity")}
    assert not en.bound_exceeded
    (d,) = en.derivations
    assert d.rule_path == (5, 4, 1, 8, 7) and d.depth_used == 1


def test_enumerate_constant():
    en = enumerate_outcomes(FACT, parse_expr("9"), 1)
    assert en.derivations == (Derivation(IntV(9), (7,), 0),)
    assert not en.bound_exceeded


def test_enumerate_fact():
    en = enumerate_outcomes(FACT, parse_expr("fact(3)"), 20)
    assert en.results() == {IntV(3 * 2 * 1)}
    # fact(0) also matches fact(n), whose body recurses without end, so some
    # clause orders run into the bound.
    assert en.bound_exceeded


def test_enumerate_exposes_clause_ambiguity():
    prog = parse_program("f(0) = zero; f(n) = any; g(x) = f(x)")
    en = enumerate_outcomes(prog, parse_expr("g(0)"), 5)
    assert en.results() == {AtomV("zero"), AtomV("any")}
    assert not en.bound_exceeded
    assert evaluate(prog, parse_expr("g(0)")) == Success(AtomV("zero"))


def test_enumerate_keeps_choice_sequential():
    # backtracking reaches f(n) in every clause order, so the right branch of
    # the choice is never needed
    prog = parse_program("f(0) = fail; f(n) = one; g(0) = fail")
    en = enumerate_outcomes(prog, parse_expr("f(0) ++ two"), 5)
    assert en.results() == {AtomV("one")}
    en = enumerate_outcomes(prog, parse_expr("g(0) ++ two"), 5)
    assert en.results() == {AtomV("two")}
    en = enumerate_outcomes(prog, parse_expr("(1 ++ 2) + (3 ++ 4)"), 5)
    assert en.results() == {IntV(4)}


def test_enumerate_failure_is_empty():
    en = enumerate_outcomes(DIV, parse_expr("4 / 0"), 3)
    assert len(en) == 0 and not en.bound_exceeded


def test_enumerate_completeness_without_recursion():
    rnd = random.Random(11)
    checked = 0
    while checked < 50:
        program, entry = gen_case(rnd)
        # no clause body calls a user function: no recursion possible
        if any(_calls_user(c.body) for c in program.clauses):
            continue
        assert not enumerate_outcomes(program, entry, 3).bound_exceeded
        checked += 1


def _calls_user(e):
    from funcadd.builtins import BUILTINS
    from funcadd.syntax import Call, Choice, If

    if type(e) is Call:
        return (e.fname, len(e.args)) not in BUILTINS or any(_calls_user(a) for a in e.args)
    if type(e) is Choice:
        return any(_calls_user(b) for b in e.branches)
    if type(e) is If:
        return any(_calls_user(x) for x in (e.cond, e.then, e.orelse))
    return False


def test_leftmost_examples():
    sort = parse_program((CORPUS / "sort_bubble_only.fnp").read_text())
    out = first_success_leftmost(sort, parse_expr("sort([3,100,40,2])"), 50)
    assert out == Success(from_python(sorted([3, 100, 40, 2])))
    assert first_success_leftmost(DIV, parse_expr("g()"), 5) == SoftFail(
        FailReason.NO_MATCHING_CLAUSE, parse_expr("g()").pos)
    assert first_success_leftmost(DIV, parse_expr("div(4,2)"), 5) == Success(IntV(2))


def test_leftmost_bound():
    loop = parse_program("loop() = loop()")
    out = first_success_leftmost(loop, parse_expr("loop() ++ 1"), 12)
    assert isinstance(out, HardError) and out.kind is ErrorKind.DEPTH_EXCEEDED


def test_fact_trace_matches_oracle_path():
    entry = parse_expr("fact(3)")
    buf = TraceBuffer()
    out = evaluate(FACT, entry, None, buf)
    o_out, path = leftmost_derivation(FACT, entry, 20)
    assert out == o_out == Success(IntV(6))
    assert derivation_path(buf.events) == list(path)
    assert sorted(derivation_path(buf.events)) == sorted(path)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_engine_agrees_with_leftmost(rnd):
    program, entry = gen_case(rnd)
    bound = 12
    buf = TraceBuffer()
    engine = evaluate(program, entry, Limits(max_call_depth=bound), buf)
    oracle, path = leftmost_derivation(program, entry, bound)
    engine_bound = isinstance(engine, HardError) and engine.kind is ErrorKind.DEPTH_EXCEEDED
    oracle_bound = isinstance(oracle, HardError)
    assert engine_bound == oracle_bound
    if engine_bound:
        return
    assert engine == oracle
    if isinstance(engine, Success):
        assert derivation_path(buf.events) == list(path)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_engine_success_is_enumerated(rnd):
    program, entry = gen_case(rnd)
    engine = evaluate(program, entry, Limits(max_call_depth=12))
    en = enumerate_outcomes(program, entry, 12)
    if en.bound_exceeded or isinstance(engine, HardError):
        return
    if isinstance(engine, Success):
        assert engine.value in en
    else:
        # textual order is one of the explored orders, and it fails
        assert isinstance(engine, SoftFail)


def test_generated_programs_respect_size():
    rnd = random.Random(0)
    for _ in range(100):
        program, arities = gen_program(rnd)
        assert 1 <= len(program.clauses) <= 5
        assert all(c.arity <= 2 for c in program.clauses)
