import io
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from chaindiff.cli import (
    CanonCommand,
    DiffCommand,
    PartitionsCommand,
    UsageError,
    VerifyCommand,
    load_bindings,
    main,
    parse_command,
    run,
)
from chaindiff.dsl import DSLSyntaxError, parse, serialize
from chaindiff.engine import nth_chain_diff
from chaindiff.expr import (
    Compose,
    Diff,
    DirectionVar,
    ExpNode,
    FuncSymbol,
    Linear,
    PointVar,
    Power,
    Scalar,
    canonicalize,
)

from exprgen import expressions

x = PointVar("x")
f, g = FuncSymbol("f"), FuncSymbol("g")


class TestParse:
    def test_composition(self):
        assert parse("exp o g") == Compose(ExpNode(), g)
        assert parse("pow[3] o g") == Compose(Power(3), g)
        assert parse("lin[a] o f o g") == Compose(Linear("a"), Compose(f, g))

    def test_differential_request(self):
        assert parse("D[1,2] (f o g) @ x") == nth_chain_diff(Compose(f, g), x, [1, 2])

    def test_request_binds_point(self):
        assert parse("D[1] h(t) @ t") == Diff(FuncSymbol("h"), (PointVar("t"),), (DirectionVar(1),))

    def test_differential_terms(self):
        assert parse("Dg(x;e1,e2)") == Diff(g, (x,), (DirectionVar(1), DirectionVar(2)))
        two = parse("D{2,1}F(x,y;e1,e2)")
        assert two.slots == (1, 2) and two.directions == (DirectionVar(2), DirectionVar(1))

    def test_numbers(self):
        assert parse("3/4") == Scalar(Fraction(3, 4))
        assert parse("2 * 3") == Scalar(6)
        assert parse("-0.5") == Scalar(-0.5)

    @pytest.mark.parametrize(
        "text, line, column",
        [
            ("pow[2.5] o g", 1, 5),
            ("f(", 1, 3),
            ("x o g", 1, 1),
            ("exp o g\n  + $", 2, 5),
            ("D[1] g(x)", 1, 10),
        ],
    )
    def test_errors_have_positions(self, text, line, column):
        with pytest.raises(DSLSyntaxError) as info:
            parse(text)
        assert (info.value.line, info.value.column) == (line, column)

    def test_unknown_construct(self):
        with pytest.raises(DSLSyntaxError, match="unknown construct"):
            parse("Dpow(x;e1)")

    def test_repeated_direction_in_request(self):
        with pytest.raises(DSLSyntaxError):
            parse("D[1,1] g @ x")


class TestSerialize:
    def test_exp_chain(self):
        assert serialize(nth_chain_diff(Compose(ExpNode(), g), x, [1])) == "exp(g(x)) * Dg(x;e1)"

    def test_partials(self):
        assert serialize(parse("D{1,2}F(x,y;e1,e2)")) == "D{1,2}F(x,y;e1,e2)"


@given(expressions)
@settings(max_examples=300, deadline=None)
def test_round_trip(e):
    c = canonicalize(e)
    assert parse(serialize(c)) == c


@given(expressions)
@settings(max_examples=50, deadline=None)
def test_round_trip_of_differentials(e):
    d = nth_chain_diff(e, x, [4])
    assert parse(serialize(d)) == d


def _run(cmd):
    out, err = io.StringIO(), io.StringIO()
    code = run(cmd, out, err)
    return code, out.getvalue(), err.getvalue()


class TestCommands:
    def test_partitions(self):
        code, out, _ = _run(PartitionsCommand(3))
        assert code == 0
        assert out.splitlines() == ["{{1,2,3}}", "{{1,2},{3}}", "{{1,3},{2}}", "{{1},{2,3}}", "{{1},{2},{3}}"]

    def test_diff(self):
        code, out, _ = _run(parse_command(["diff", "--dirs", "1", "exp o g", "--at", "x"]))
        assert code == 0 and out == "exp(g(x)) * Dg(x;e1)\n"

    def test_diff_trace(self):
        code, out, _ = _run(DiffCommand("exp o g", (1,), trace=True))
        lines = out.splitlines()
        assert lines[0] == "exp(g(x)) * Dg(x;e1)"
        steps = [json.loads(s) for s in lines[1:]]
        assert {s["rule"] for s in steps} >= {"R-EXP", "R-ATOM"}

    def test_diff_json(self):
        code, out, _ = _run(DiffCommand("pow[2] o g", (1,), as_json=True))
        assert json.loads(out)["kind"] == "Product"

    def test_canon(self):
        code, out, _ = _run(CanonCommand("b(x) + a(x) + a(x)"))
        assert out == "b(x) + 2 * a(x)\n"

    def test_verify(self):
        argv = ["verify", "--order", "2", "exp o lin[a]", "--point", "0,0", "--a", "1,1",
                "--dirs", "(1,0);(0,1)", "--tol", "1e-5"]
        cmd = parse_command(argv)
        assert isinstance(cmd, VerifyCommand) and cmd.inline_bindings == {"a": "1,1"}
        code, out, _ = _run(cmd)
        report = json.loads(out)
        assert code == 0
        assert report["passed"] and report["residual"] <= 1e-5
        assert report["actual"] == pytest.approx(1.0)

    def test_verify_failure_exit(self):
        # third-order nested differences cannot reach 1e-15
        cmd = VerifyCommand("exp o lin[a]", "0.1", "1;1;1", tol=1e-15, inline_bindings={"a": "1"})
        code, out, _ = _run(cmd)
        report = json.loads(out)
        assert code == 1
        assert not report["passed"] and report["residual"] > 1e-15

    def test_direction_reuse_is_usage_error(self):
        code, _, err = _run(VerifyCommand("Dg(x;e1)", "0.5", "1", inline_bindings={"g": "1"}))
        assert code == 2 and "already used" in err

    def test_parse_error_exit(self):
        code, _, err = _run(DiffCommand("f(", (1,)))
        assert code == 2 and "line 1" in err

    def test_order_mismatch(self):
        code, _, _ = _run(VerifyCommand("exp o g", "0", "1;1", order=1))
        assert code == 2
        with pytest.raises(ValueError):
            VerifyCommand("g", "0", "1", tol=0)

    def test_unbound_symbol_exit(self):
        code, _, err = _run(VerifyCommand("exp o g", "0", "1"))
        assert code == 2 and "unbound" in err

    def test_main_exit_codes(self, capsys):
        assert main(["partitions", "2"]) == 0
        assert main(["diff", "f(", "--dirs", "1"]) == 2
        assert main(["diff", "g", "--bogus", "1"]) == 2
        assert main(["nope"]) == 2
        capsys.readouterr()

    def test_order_flag(self):
        assert parse_command(["diff", "g", "--order", "3"]).direction_indices == (1, 2, 3)
        assert parse_command(["diff", "g", "--order", "0"]).direction_indices == ()


class TestBindings:
    def test_formats(self):
        b = load_bindings(
            """
            # comment
            a linear R2 1,2
            w integral grid8
            e explinear R2 0.5,0.5
            p poly R1 1,0,3
            q quadratic R2 1,0;0,2
            """
        )
        assert set(b) == {"a", "w", "e", "p", "q"}
        assert b["a"](np.array([1.0, 1.0])) == 3.0
        assert b["w"](np.ones(8)) == pytest.approx(1.0)
        assert b["p"](2.0) == pytest.approx(13.0)
        assert b["q"](np.array([1.0, 1.0])) == pytest.approx(3.0)

    @pytest.mark.parametrize("text", ["a linear", "a cubic R2 1,2", "a linear Q3 1", "a linear R2 x,y"])
    def test_errors(self, text):
        with pytest.raises(UsageError):
            load_bindings(text)

    def test_verify_with_file(self, tmp_path):
        path = tmp_path / "bindings.txt"
        path.write_text("a linear R2 1,1\nq quadratic R2 1,0;0,2\n")
        cmd = VerifyCommand("exp o q", "0.1,0.2", "(1,0);(0,1)", order=2, bindings_file=str(path))
        code, out, _ = _run(cmd)
        assert code == 0, out
        assert json.loads(out)["passed"]


def test_cli_is_deterministic():
    argv = [sys.executable, "-m", "chaindiff", "diff", "--order", "3", "--trace", "exp o f o g"]
    outs = {subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(3)}
    assert len(outs) == 1
