import io
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funcadd.cli import Repl, RunConfig, cmd_repl, cmd_run, format_outcome, main
from funcadd.syntax import parse_program, pretty
from funcadd.values import AtomV, ErrorKind, FailReason, HardError, Pos, SoftFail, Success

from conftest import CORPUS
from gen import gen_case

GOLDEN = {
    "div.fnp": "[2, infinity, -3]\n",
    "fact.fnp": "[120, 2432902008176640000, too_big]\n",
    "failures.fnp": "[undefined, empty, overflow, incomparable, positive, nonpositive, 7]\n",
    "lists.fnp": "[10, 55, [3, 2, 1], [1, 2, 3], 30, none, true]\n",
    "sort.fnp": "[2, 3, 40, 100]\n",
    "sort_bubble_only.fnp": "[2, 3, 40, 100]\n",
}


def run(path=None, **kw):
    out, err = io.StringIO(), io.StringIO()
    code = cmd_run(RunConfig(str(path) if path else None, **kw), out, err)
    return code, out.getvalue(), err.getvalue()


def session(lines, path=None):
    out, err = io.StringIO(), io.StringIO()
    code = cmd_repl(path, io.StringIO("".join(l + "\n" for l in lines)), out, err)
    assert code == 0
    return out.getvalue(), err.getvalue()


# ---------------------------------------------------------------- run


def test_run_div():
    code, out, err = run(CORPUS / "div.fnp", entry="div(4,0)")
    assert (code, out, err) == (0, "infinity\n", "")


def test_run_pure_expression():
    assert run(entry="42") == (0, "42\n", "")


def test_run_bubble_only():
    code, out, _ = run(CORPUS / "sort_bubble_only.fnp", entry="sort([3,100,40,2])")
    assert (code, out) == (0, "[2, 3, 40, 100]\n")


def test_run_soft_failure():
    code, out, _ = run(entry="1 / 0")
    assert code == 1
    assert out == "failure: divide-by-zero at <entry>:1:3\n"


def test_run_hard_error(tmp_path):
    f = tmp_path / "loop.fnp"
    f.write_text("loop() = loop()\n")
    code, out, _ = run(f, entry="loop() ++ 1", depth_limit=50)
    assert code == 2
    assert out.startswith("error: depth-exceeded: ")


def test_run_syntax_errors(tmp_path):
    f = tmp_path / "bad.fnp"
    f.write_text("f(x) = x +\n")
    code, out, err = run(f, entry="f(1)")
    assert code == 3 and out == "" and err.startswith("syntax error: ")
    assert run(entry="1 +")[0] == 3
    assert run(tmp_path / "missing.fnp")[0] == 3


def test_run_trace_goes_to_stderr():
    code, out, err = run(CORPUS / "div.fnp", entry="div(4,0)", trace=True)
    assert out == "infinity\n"
    lines = err.splitlines()
    assert lines[0] == "R5 eval d=0 Enter | div(4, 0)"
    assert "R5 eval d=1 Fail | 4 / 0  # divide-by-zero" in lines
    assert lines[-1] == "R5 eval d=0 Succeed | div(4, 0)"


def test_run_oracle_check():
    code, out, _ = run(CORPUS / "div.fnp", entry="div(4,0)", oracle_check=True)
    assert (code, out) == (0, "infinity\noracle: agree\n")
    code, out, _ = run(CORPUS / "fact.fnp", entry="fact(30)", oracle_check=True, oracle_bound=5)
    assert code == 1
    assert out.splitlines()[1].startswith("oracle: inconclusive")


def test_run_oracle_disagreement_exit_code(monkeypatch):
    import funcadd.cli as cli

    monkeypatch.setattr(cli, "first_success_leftmost", lambda *a: Success(AtomV("other")))
    code, out, _ = run(entry="1", oracle_check=True)
    assert code == 4
    assert out.splitlines()[1] == "oracle: DISAGREE engine=1 oracle=other"


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(oracle_bound=0)
    with pytest.raises(ValueError):
        RunConfig(depth_limit=0)


def test_format_outcome():
    assert format_outcome(Success(AtomV("infinity"))) == "infinity"
    assert format_outcome(SoftFail(FailReason.DIVIDE_BY_ZERO, Pos("d.fnp", 2, 14))) == \
        "failure: divide-by-zero at d.fnp:2:14"
    assert format_outcome(SoftFail(FailReason.EXPLICIT_FAIL)) == "failure: explicit-fail at ?"
    assert format_outcome(HardError(ErrorKind.DEPTH_EXCEEDED, "call depth exceeded limit of 3")) == \
        "error: depth-exceeded: call depth exceeded limit of 3"


# ---------------------------------------------------------------- argv


@pytest.mark.parametrize("argv, code", [
    ([], 3),
    (["run", "--depth-limit", "0"], 3),
    (["run", "--oracle-bound", "-1"], 3),
    (["frobnicate"], 3),
    (["run", "--entry", "7"], 0),
    (["run", "--entry", "fail"], 1),
    (["run", "--entry", "g()"], 1),
])
def test_main_exit_codes(argv, code, capsys):
    try:
        got = main(argv)
    except SystemExit as e:
        got = e.code
    assert got == code


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "funcadd", "run", str(CORPUS / "div.fnp"),
                           "--entry", "div(4,0)", "--trace"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "infinity\n"
    assert len(proc.stderr.splitlines()) == 13


# ---------------------------------------------------------------- golden corpus


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_corpus_golden(name):
    first = run(CORPUS / name, trace=True)
    assert first[0] == 0 and first[1] == GOLDEN[name]
    assert run(CORPUS / name, trace=True) == first


def test_corpus_is_complete():
    assert sorted(p.name for p in CORPUS.glob("*.fnp")) == sorted(GOLDEN)


# ---------------------------------------------------------------- repl


def test_repl_div_session():
    out, _ = session(["div(x,y) = (x/y) ++ infinity", "div(4,0)"])
    assert out == "infinity\n"


def test_repl_arithmetic():
    assert session(["1+1"])[0] == "2\n"


def test_repl_list_after_load():
    path = CORPUS / "div.fnp"
    out, _ = session([f":load {path}", ":list"])
    assert out == pretty(parse_program(path.read_text()))


def test_repl_clauses_append():
    out, _ = session(["f(x) = first", "f(x) = second", "f(1)", ":list"])
    assert out == "first\nf(x) = first;\nf(x) = second;\n"


def test_repl_survives_errors():
    out, _ = session(["f(x) = ", "1 / 0", ":load /nonexistent.fnp", ":bogus", "3"])
    lines = out.splitlines()
    assert lines[0].startswith("syntax error: ")
    assert lines[1] == "failure: divide-by-zero at <entry>:1:3"
    assert lines[2].startswith("error: ")
    assert lines[3].startswith("unknown command")
    assert lines[4] == "3"


def test_repl_trace_toggle_and_quit():
    out, err = session([":trace on", "1 ++ 2", ":trace off", "3", ":quit", "4"])
    assert out == "1\n3\n"
    assert err.splitlines()[0] == "R8 eval d=0 Enter | 1"


def test_repl_preloads_file():
    out, _ = session(["div(4,0)"], path=str(CORPUS / "div.fnp"))
    assert out == "infinity\n"


def test_repl_comparison_is_not_a_clause():
    out, _ = session(["1 == 1", "f(x) = x == 1", "f(1)"])
    assert out == "true\ntrue\n"


@settings(max_examples=100, deadline=None)
@given(rnd=st.randoms(use_true_random=False))
def test_batch_repl_agreement(tmp_path_factory, rnd):
    program, entry = gen_case(rnd)
    path = tmp_path_factory.mktemp("agree") / "p.fnp"
    path.write_text(pretty(program))
    _, batch, _ = run(path, entry=pretty(entry), depth_limit=40)
    repl = Repl(io.StringIO(), io.StringIO())
    repl.limits = RunConfig(depth_limit=40).limits()
    repl.handle(f":load {path}")
    repl.handle(pretty(entry))
    assert repl.out.getvalue() == batch


def test_exit_code_totality(tmp_path):
    rnd = random.Random(5)
    path = tmp_path / "p.fnp"
    for _ in range(50):
        program, entry = gen_case(rnd)
        path.write_text(pretty(program))
        code = cmd_run(RunConfig(str(path), pretty(entry), depth_limit=40), io.StringIO(), io.StringIO())
        assert code in range(5)
