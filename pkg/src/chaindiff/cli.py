"""Command line front end: ``chaindiff {partitions,canon,diff,verify}``.

Exit codes: 0 on success, 1 when a verification fails, 2 on usage, parse
or binding errors.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import fixtures
from .combinatorics import partitions
from .dsl import DSLSyntaxError, parse, serialize
from .engine import nth_chain_diff
from .expr import StructuralError, to_tree
from .numeric import ConcreteSpace, EvalContext, EvaluationError, as_concrete, verify

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class DiffCommand:
    expr_text: str
    direction_indices: tuple
    point: str = "x"
    trace: bool = False
    as_json: bool = False

    @property
    def order(self) -> int:
        return len(self.direction_indices)


@dataclass(frozen=True)
class VerifyCommand:
    expr_text: str
    point_value: str
    directions: str
    order: int | None = None
    tol: float = 1e-5
    point: str = "x"
    bindings_file: str | None = None
    inline_bindings: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class PartitionsCommand:
    n: int


@dataclass(frozen=True)
class CanonCommand:
    expr_text: str
    as_json: bool = False
    points: tuple = ("x", "y", "z")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# value and binding parsing


def parse_vector(text: str):
    parts = [p for p in re.split(r"[,\s]+", text.strip().strip("()")) if p]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"not a number list: {text!r}") from None
    if not values:
        raise UsageError("empty vector")
    return values[0] if len(values) == 1 else np.array(values)


def parse_directions(text: str) -> list:
    return [parse_vector(chunk) for chunk in text.split(";") if chunk.strip()]


def _parse_space(text: str) -> ConcreteSpace:
    m = re.fullmatch(r"(R|grid)(\d+)", text)
    if not m:
        raise UsageError(f"unknown space {text!r}; use R<dim> or grid<points>")
    kind = "euclidean" if m.group(1) == "R" else "grid"
    return ConcreteSpace(kind, int(m.group(2)))


def _make_binding(name: str, kind: str, space: ConcreteSpace, coeffs: str):
    if kind == "linear":
        return fixtures.linear_functional(parse_vector(coeffs), space, name)
    if kind == "integral":
        return fixtures.grid_integral(space, name)
    if kind == "explinear":
        return fixtures.exp_linear(parse_vector(coeffs), space, name)
    if kind == "poly":
        c = np.atleast_1d(parse_vector(coeffs))
        return fixtures.scalar_polynomial(c, name)
    if kind == "quadratic":
        rows = [np.atleast_1d(parse_vector(r)) for r in coeffs.split(";")]
        return fixtures.quadratic_functional(np.vstack(rows), space=space, name=name)
    raise UsageError(f"unknown binding kind {kind!r}")


def load_bindings(text: str) -> dict:
    """Parse a bindings file: one ``name kind space [coefficients]`` per line.

    ``kind`` is one of linear, integral, explinear, poly, quadratic;
    ``space`` is ``R<dim>`` or ``grid<points>``; coefficients are
    comma-separated, with matrix rows separated by ``;``.  Blank lines and
    ``#`` comments are ignored.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 3)
        if len(parts) < 3:
            raise UsageError(f"bindings line {lineno}: expected 'name kind space [coefficients]'")
        name, kind, space = parts[:3]
        coeffs = parts[3] if len(parts) > 3 else ""
        out[name] = _make_binding(name, kind, _parse_space(space), coeffs)
    return out


# ---------------------------------------------------------------------------
# commands


def _emit(out, obj) -> None:
    out.write(json.dumps(obj, sort_keys=True) + "\n")


def run(cmd, out=None, err=None) -> int:
    """Execute a command, writing results to ``out`` and diagnostics to ``err``."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        return _run(cmd, out)
    except (DSLSyntaxError, UsageError, EvaluationError, StructuralError, ValueError) as exc:
        err.write(f"chaindiff: error: {exc}\n")
        return EXIT_USAGE


def _run(cmd, out) -> int:
    if isinstance(cmd, PartitionsCommand):
        for p in partitions(cmd.n):
            out.write(f"{p}\n")
        return EXIT_OK

    if isinstance(cmd, CanonCommand):
        e = parse(cmd.expr_text, cmd.points)
        if cmd.as_json:
            _emit(out, to_tree(e))
        else:
            out.write(serialize(e) + "\n")
        return EXIT_OK

    if isinstance(cmd, DiffCommand):
        e = parse(cmd.expr_text, (cmd.point,))
        trace = [] if cmd.trace else None
        result = nth_chain_diff(e, cmd.point, cmd.direction_indices, trace)
        if cmd.as_json:
            _emit(out, to_tree(result))
        else:
            out.write(serialize(result) + "\n")
        for step in trace or ():
            _emit(out, step.to_dict())
        return EXIT_OK

    if isinstance(cmd, VerifyCommand):
        return _run_verify(cmd, out)

    raise UsageError(f"unknown command {cmd!r}")


def _run_verify(cmd: VerifyCommand, out) -> int:
    e = parse(cmd.expr_text, (cmd.point,))
    dirs = parse_directions(cmd.directions)
    if cmd.order is not None and cmd.order != len(dirs):
        raise UsageError(f"--order {cmd.order} but {len(dirs)} direction(s) given")
    indices = list(range(1, len(dirs) + 1))

    bindings = {}
    if cmd.bindings_file:
        with open(cmd.bindings_file) as fh:
            bindings.update(load_bindings(fh.read()))
    for name, text in cmd.inline_bindings.items():
        bindings[name] = fixtures.linear_functional(parse_vector(text), name=name)

    ctx = EvalContext(
        bindings,
        {cmd.point: parse_vector(cmd.point_value)},
        dict(zip(indices, dirs)),
    )
    symbolic = nth_chain_diff(e, cmd.point, indices)
    target = as_concrete(e, ctx, cmd.point)
    report = verify(symbolic, target, ctx, cmd.tol, directions=indices, point=cmd.point)
    record = report.to_dict()
    record["symbolic"] = serialize(symbolic)
    _emit(out, record)
    return EXIT_OK if report.passed else EXIT_FAILED


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="chaindiff", description="Symbolic chain differentials.", allow_abbrev=False
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partitions", allow_abbrev=False, help="list the set partitions of {1..n}")
    p.add_argument("n", type=int)

    p = sub.add_parser("canon", allow_abbrev=False, help="print the canonical form of an expression")
    p.add_argument("expr")
    p.add_argument("--json", action="store_true", help="print the JSON tree instead of text")

    p = sub.add_parser("diff", allow_abbrev=False, help="differentiate an expression")
    p.add_argument("expr")
    p.add_argument("--dirs", type=_int_list, default=None, help="direction indices, e.g. 1,2")
    p.add_argument("--order", type=int, default=None, help="differentiate in e1..e<order>")
    p.add_argument("--at", default="x", help="point variable (default x)")
    p.add_argument("--trace", action="store_true", help="also print one JSON rule trace per line")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser(
        "verify",
        allow_abbrev=False,
        help="compare the symbolic differential with a numeric estimate",
        epilog="Any other --NAME v1,v2,... binds NAME to the linear functional with those coefficients.",
    )
    p.add_argument("expr")
    p.add_argument("--point", required=True, help="point value, e.g. 0,0")
    p.add_argument("--dirs", required=True, help='direction values, e.g. "(1,0);(0,1)"')
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--at", default="x")
    p.add_argument("--bindings", default=None, help="bindings file")
    return ap


def _split_inline(extra: list) -> dict:
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or len(tok) < 3:
            raise UsageError(f"unexpected argument {tok!r}")
        name, eq, value = tok[2:].partition("=")
        if not eq:
            try:
                value = next(it)
            except StopIteration:
                raise UsageError(f"missing value for {tok}") from None
        out[name] = value
    return out


def parse_command(argv: list):
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    if extra and args.command != "verify":
        ap.error(f"unrecognized arguments: {' '.join(extra)}")

    if args.command == "partitions":
        return PartitionsCommand(args.n)
    if args.command == "canon":
        return CanonCommand(args.expr, args.json)
    if args.command == "diff":
        dirs = args.dirs
        if dirs is None:
            dirs = tuple(range(1, (1 if args.order is None else args.order) + 1))
        elif args.order is not None and args.order != len(dirs):
            ap.error(f"--order {args.order} does not match --dirs {','.join(map(str, dirs))}")
        return DiffCommand(args.expr, dirs, args.at, args.trace, args.json)
    if args.tol <= 0:
        ap.error("--tol must be positive")
    return VerifyCommand(
        args.expr,
        args.point,
        args.dirs,
        args.order,
        args.tol,
        args.at,
        args.bindings,
        _split_inline(extra),
    )


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cmd = parse_command(argv)
    except UsageError as exc:
        sys.stderr.write(f"chaindiff: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cmd)


if __name__ == "__main__":
    sys.exit(main())
