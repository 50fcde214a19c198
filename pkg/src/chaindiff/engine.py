"""Symbolic chain differentials of expressions.

``chain_diff`` differentiates once by structural recursion; ``nth_chain_diff``
folds it over a list of directions.  ``faa_di_bruno`` and ``leibniz`` build
the closed-form higher-order expansions directly from set partitions and
subsets, so the two routes can be checked against each other.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import combinatorics
from .expr import (
    ZERO,
    Apply,
    Diff,
    DirectionVar,
    ExpNode,
    Expr,
    FuncSymbol,
    Linear,
    PointVar,
    Power,
    Product,
    Scalar,
    StructuralError,
    Sum,
    arity_of,
    at_point,
    canonicalize,
    direction_indices,
    is_function,
    power_of,
    to_tree,
)


class Rule(str, enum.Enum):
    CHAIN = "R-CHAIN"
    TOTAL = "R-TOTAL"
    FAA = "R-FAA"
    LEIBNIZ = "R-LEIBNIZ"
    LIN = "R-LIN"
    POW = "R-POW"
    EXP = "R-EXP"
    CONST = "R-CONST"
    SUM_LINEARITY = "R-SUM-LINEARITY"
    ATOM = "R-ATOM"


@dataclass(frozen=True)
class RuleTrace:
    applied_rule: Rule
    input: Expr
    output: Expr

    def to_dict(self) -> dict:
        return {
            "rule": self.applied_rule.value,
            "input": to_tree(self.input),
            "output": to_tree(self.output),
        }


def _as_point(point) -> PointVar:
    if isinstance(point, PointVar):
        return point
    if isinstance(point, str):
        return PointVar(point)
    raise TypeError(f"point must be a PointVar or a name, got {type(point).__name__}")


def _check_directions(directions) -> tuple:
    directions = tuple(directions)
    for j in directions:
        if isinstance(j, bool) or not isinstance(j, int) or j < 1:
            raise ValueError(f"direction indices must be positive integers, got {j!r}")
    if len(set(directions)) != len(directions):
        raise ValueError(f"direction indices must be distinct, got {list(directions)}")
    return directions


class _Differentiator:
    """One first-order differentiation pass at a fixed point and direction."""

    def __init__(self, point: PointVar, index: int, trace: list | None):
        self.point = point
        self.direction = DirectionVar(index)
        self.trace = trace
        self._memo: dict = {}

    def _emit(self, rule: Rule, v: Expr, out: Expr) -> Expr:
        out = canonicalize(out)
        if self.trace is not None:
            self.trace.append(RuleTrace(rule, v, out))
        return out

    def __call__(self, v: Expr) -> Expr:
        hit = self._memo.get(v)
        if hit is None:
            hit = self._memo[v] = self._dispatch(v)
        return hit

    def _dispatch(self, v: Expr) -> Expr:
        if isinstance(v, (Scalar, DirectionVar)):
            return self._emit(Rule.CONST, v, ZERO)
        if isinstance(v, PointVar):
            if v == self.point:
                # identity map: (x + t*eta - x) / t = eta
                return self._emit(Rule.ATOM, v, self.direction)
            return self._emit(Rule.CONST, v, ZERO)
        if isinstance(v, Sum):
            return self._emit(Rule.SUM_LINEARITY, v, Sum(tuple(self(t) for t in v.terms)))
        if isinstance(v, Product):
            fs = v.factors
            terms = [Product(fs[:i] + (self(f),) + fs[i + 1:]) for i, f in enumerate(fs)]
            return self._emit(Rule.LEIBNIZ, v, Sum(tuple(terms)))
        if isinstance(v, Apply):
            return self._apply(v)
        if isinstance(v, Diff):
            return self._diff(v)
        raise StructuralError(f"cannot differentiate node of kind {type(v).__name__}")

    def _apply(self, v: Apply) -> Expr:
        func, args = v.func, v.args
        if isinstance(func, ExpNode):
            return self._emit(Rule.EXP, v, Product((v, self(args[0]))))
        if isinstance(func, Power):
            k = func.exponent
            return self._emit(Rule.POW, v, Product((Scalar(k), power_of(args[0], k - 1), self(args[0]))))
        if isinstance(func, Linear):
            return self._emit(Rule.LIN, v, Apply(func, (self(args[0]),)))
        if isinstance(func, FuncSymbol):
            if len(args) == 1:
                rule = Rule.ATOM if args[0] == self.point else Rule.CHAIN
                return self._emit(rule, v, Diff(func, args, (self(args[0]),)))
            partials = [Diff(func, args, (self(a),), (i,)) for i, a in enumerate(args, start=1)]
            return self._emit(Rule.TOTAL, v, Sum(tuple(partials)))
        raise StructuralError(f"cannot differentiate application of {type(func).__name__}")

    def _diff(self, v: Diff) -> Expr:
        # d(u -> d^k f(b(u); h_1(u), ..., h_k(u))): one new direction per
        # base slot, plus each existing direction differentiated in place
        terms = []
        for s, b in enumerate(v.base, start=1):
            terms.append(Diff(v.target, v.base, v.directions + (self(b),), v.slots + (s,)))
        for i, h in enumerate(v.directions):
            dh = self(h)
            terms.append(Diff(v.target, v.base, v.directions[:i] + (dh,) + v.directions[i + 1:], v.slots))
        rule = Rule.CHAIN if len(v.base) == 1 else Rule.TOTAL
        return self._emit(rule, v, Sum(tuple(terms)))


def chain_diff(e: Expr, point, direction_index: int, trace: list | None = None) -> Expr:
    """First-order chain differential of ``e`` at ``point`` in direction ``e<j>``.

    Function-level expressions are first applied to ``point``; value-level
    expressions are differentiated with respect to the occurrences of
    ``point`` they contain.  Pass a list as ``trace`` to collect the
    ``RuleTrace`` of every rewrite step.
    """
    point = _as_point(point)
    (j,) = _check_directions((direction_index,))
    v = canonicalize(at_point(e, point))
    if j in direction_indices(v):
        raise ValueError(f"direction e{j} is already used in the expression")
    return _Differentiator(point, j, trace)(v)


def nth_chain_diff(e: Expr, point, directions, trace: list | None = None) -> Expr:
    """Differentiate ``e`` successively in each of ``directions`` (recursive definition)."""
    point = _as_point(point)
    directions = _check_directions(directions)
    if not directions:
        return canonicalize(e)
    out = e
    for j in directions:
        out = chain_diff(out, point, j, trace)
    return out


def _check_function(name: str, f: Expr) -> None:
    if not is_function(f):
        raise ValueError(f"{name} must be a function-level expression")
    if arity_of(f) != 1:
        raise ValueError(f"{name} must take exactly one argument")


def faa_di_bruno(f: Expr, g: Expr, point, directions, *, canonical: bool = True,
                 trace: list | None = None) -> Expr:
    """Closed-form n-th differential of ``f o g`` as a sum over set partitions.

    Each partition of the direction positions contributes one differential
    of ``f`` at ``g(x)`` whose directions are the differentials of ``g``
    over the blocks.  With ``canonical=False`` the raw sum is returned,
    one summand per partition.
    """
    point = _as_point(point)
    directions = _check_directions(directions)
    if not directions:
        raise ValueError("faa_di_bruno needs at least one direction")
    _check_function("f", f)
    _check_function("g", g)

    gx = Apply(g, (point,))
    terms = []
    for part in combinatorics.partitions(len(directions)):
        inner = tuple(
            Diff(g, (point,), tuple(DirectionVar(directions[i - 1]) for i in block))
            for block in part
        )
        terms.append(Diff(f, (gx,), inner))
    raw = Sum(tuple(terms))
    if not canonical:
        return raw
    out = canonicalize(raw)
    if trace is not None:
        trace.append(RuleTrace(Rule.FAA, canonicalize(Diff(f, (gx,), ())), out))
    return out


def leibniz(f: Expr, g: Expr, point, directions, *, canonical: bool = True,
            trace: list | None = None) -> Expr:
    """Closed-form n-th differential of the pointwise product ``f * g``, one term per subset."""
    point = _as_point(point)
    directions = _check_directions(directions)
    _check_function("f", f)
    _check_function("g", g)

    n = len(directions)
    terms = []
    for s in combinatorics.subsets(n):
        sc = combinatorics.complement(s)
        df = Diff(f, (point,), tuple(DirectionVar(directions[i - 1]) for i in s))
        dg = Diff(g, (point,), tuple(DirectionVar(directions[i - 1]) for i in sc))
        terms.append(Product((df, dg)))
    raw = Sum(tuple(terms))
    if not canonical:
        return raw
    out = canonicalize(raw)
    if trace is not None:
        trace.append(RuleTrace(Rule.LEIBNIZ, canonicalize(Product((Apply(f, (point,)), Apply(g, (point,))))), out))
    return out


def total_diff(f: FuncSymbol, point_tuple, direction_tuple, trace: list | None = None) -> Expr:
    """Total differential of a multivariate symbol as the sum of its partials.

    ``direction_tuple[i]`` is the direction index for argument ``i + 1``;
    0 stands for the zero direction, whose partial vanishes.
    """
    if not isinstance(f, FuncSymbol):
        raise ValueError("total_diff expects a FuncSymbol")
    points = tuple(PointVar(p) if isinstance(p, str) else p for p in point_tuple)
    dirs = tuple(direction_tuple)
    if not len(points) == len(dirs) == f.arity:
        raise ValueError(
            f"{f.name} has arity {f.arity}; got {len(points)} point(s) and {len(dirs)} direction(s)"
        )
    nonzero = [j for j in dirs if j != 0]
    _check_directions(nonzero)
    partials = []
    for i, j in enumerate(dirs, start=1):
        direction = ZERO if j == 0 else DirectionVar(j)
        partials.append(Diff(f, points, (direction,), (i,)))
    out = canonicalize(Sum(tuple(partials)))
    if trace is not None:
        trace.append(RuleTrace(Rule.TOTAL, canonicalize(Apply(f, points)), out))
    return out


__all__ = [
    "Rule",
    "RuleTrace",
    "chain_diff",
    "nth_chain_diff",
    "faa_di_bruno",
    "leibniz",
    "total_diff",
]
