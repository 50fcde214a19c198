"""Concrete spaces, executable functionals and limit-based differential estimates.

This module is the numeric oracle for the symbolic engine: ``evaluate``
computes the value of an expression once its symbols are bound to
``ConcreteFunc`` objects, while ``gateaux_numeric``, ``chain_diff_numeric``
and ``nth_diff_numeric`` estimate differentials directly from difference
quotients, without using any symbolic rule.

Points and directions are floats, 1-d numpy arrays, or tuples of those for
functions of several arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from .expr import (
    Apply,
    Compose,
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
    at_point,
    direction_indices,
)

DEFAULT_TOL = 1e-6
MAX_NUMERIC_ORDER = 4


class EvaluationError(ValueError):
    """Unbound symbol, space mismatch or unavailable differential."""


# ---------------------------------------------------------------------------
# spaces and functions


@dataclass(frozen=True)
class ConcreteSpace:
    """Either R^dim (``kind="euclidean"``) or real functions sampled on a grid."""

    kind: str
    size: int

    def __post_init__(self):
        if self.kind == "euclidean":
            if self.size < 1:
                raise ValueError("Euclidean dimension must be >= 1")
        elif self.kind == "grid":
            if self.size < 2:
                raise ValueError("a grid needs at least 2 points")
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @classmethod
    def euclidean(cls, dim: int) -> ConcreteSpace:
        return cls("euclidean", dim)

    @classmethod
    def grid(cls, points: int) -> ConcreteSpace:
        return cls("grid", points)

    @property
    def is_scalar(self) -> bool:
        return self.kind == "euclidean" and self.size == 1

    @property
    def nodes(self) -> np.ndarray:
        """Grid nodes on [0, 1] (for Euclidean spaces, the coordinate indices)."""
        if self.kind == "grid":
            return np.linspace(0.0, 1.0, self.size)
        return np.arange(self.size, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights on the grid; ones in R^dim."""
        if self.kind != "grid":
            return np.ones(self.size)
        w = np.full(self.size, 1.0 / (self.size - 1))
        w[[0, -1]] *= 0.5
        return w

    def contains(self, value) -> bool:
        if self.is_scalar:
            return np.ndim(value) == 0 or np.shape(value) == (1,)
        return np.shape(value) == (self.size,)

    def sample(self, rng: np.random.Generator, scale: float = 1.0):
        if self.is_scalar:
            return float(scale * rng.uniform(-1.0, 1.0))
        if self.kind == "grid":
            # smooth random function: a few low-frequency modes
            t = self.nodes
            c = rng.uniform(-1.0, 1.0, size=3)
            return scale * (c[0] + c[1] * np.sin(np.pi * t) + c[2] * np.cos(2 * np.pi * t))
        return scale * rng.uniform(-1.0, 1.0, size=self.size)


R = ConcreteSpace.euclidean(1)


@dataclass(frozen=True)
class ConcreteFunc:
    """An executable function between concrete spaces.

    ``domain`` is a space, or a tuple of spaces for a function of several
    arguments.  ``codomain`` of ``None`` means real-valued.

    ``exact_differential(point, directions, slots)`` returns the exact
    differential of order ``len(directions)`` (``slots[i]`` names the
    argument perturbed by ``directions[i]``), or ``None`` when the order is
    not available in closed form.
    """

    name: str
    domain: Any
    codomain: ConcreteSpace | None
    evaluator: Callable
    exact_differential: Callable | None = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return len(self.domain) if isinstance(self.domain, tuple) else 1

    def _domains(self) -> tuple:
        return self.domain if isinstance(self.domain, tuple) else (self.domain,)

    def check_args(self, args: tuple) -> None:
        if len(args) != self.arity:
            raise EvaluationError(f"{self.name} takes {self.arity} argument(s), got {len(args)}")
        for space, a in zip(self._domains(), args):
            if space is not None and not space.contains(a):
                raise EvaluationError(
                    f"space mismatch: {self.name} expects {space.kind}({space.size}), got shape {np.shape(a)}"
                )

    def apply(self, *args):
        self.check_args(args)
        return self.evaluator(*args)

    def __call__(self, point):
        """Evaluate at a point; for several arguments, ``point`` is a tuple."""
        args = tuple(point) if self.arity > 1 else (point,)
        return self.apply(*args)

    def differential(self, point, directions: Sequence, slots: Sequence | None = None):
        if slots is None:
            slots = (1,) * len(directions)
        if self.exact_differential is None:
            return None
        args = tuple(point) if self.arity > 1 else (point,)
        self.check_args(args)
        return self.exact_differential(point, tuple(directions), tuple(slots))


def as_concrete_func(f, name: str = "f", arity: int = 1) -> ConcreteFunc:
    if isinstance(f, ConcreteFunc):
        return f
    domain = tuple([None] * arity) if arity > 1 else None
    return ConcreteFunc(name, domain, None, f)


# ---------------------------------------------------------------------------
# vector helpers (tuples are points of product spaces)


def _axpy(x, t, v):
    if isinstance(x, tuple):
        return tuple(_axpy(xi, t, vi) for xi, vi in zip(x, v))
    return x + t * np.asarray(v) if np.ndim(v) else x + t * v


def _norm(v) -> float:
    if isinstance(v, tuple):
        return max((_norm(vi) for vi in v), default=0.0)
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _diff(a, b):
    return np.asarray(a, dtype=float) - np.asarray(b, dtype=float)


def close_enough(actual, expected, tol: float) -> bool:
    """``|actual - expected| <= tol * (1 + |expected|)``, with max-norms for arrays."""
    return _norm(_diff(actual, expected)) <= tol * (1.0 + _norm(expected))


def relative_residual(actual, expected) -> float:
    return _norm(_diff(actual, expected)) / (1.0 + _norm(expected))


# ---------------------------------------------------------------------------
# sequence schemes


@dataclass(frozen=True)
class SequenceScheme:
    """Sequences ``theta_m -> 0`` and ``eta_m = eta + perturbation(m) -> eta``."""

    name: str
    theta: Callable[[int], float]
    eta_perturbation: Callable[[int], Any] | None = None
    max_m: int = 20
    extrapolation: str = "richardson"

    def __post_init__(self):
        if self.extrapolation not in ("none", "richardson"):
            raise ValueError(f"unknown extrapolation {self.extrapolation!r}")
        if self.max_m < 3:
            raise ValueError("max_m must be at least 3")

    @property
    def alternating(self) -> bool:
        return any(self.theta(m) < 0 for m in range(self.max_m + 1)) and any(
            self.theta(m) > 0 for m in range(self.max_m + 1)
        )

    @property
    def perturbed(self) -> bool:
        return self.eta_perturbation is not None


def geometric_scheme(theta0: float = 0.1, max_m: int = 20, extrapolation: str = "richardson") -> SequenceScheme:
    return SequenceScheme("geometric", lambda m: theta0 * 2.0**-m, None, max_m, extrapolation)


def alternating_scheme(theta0: float = 0.1, max_m: int = 20, extrapolation: str = "richardson") -> SequenceScheme:
    return SequenceScheme("alternating", lambda m: (-1) ** m * theta0 * 2.0**-m, None, max_m, extrapolation)


def with_perturbation(scheme: SequenceScheme, u) -> SequenceScheme:
    """Perturb the direction by ``2**-m * u`` along ``scheme``."""
    return replace(
        scheme,
        name=scheme.name + "+perturbed",
        eta_perturbation=lambda m: _axpy(_zeros_like(u), 2.0**-m, u),
    )


def _zeros_like(u):
    if isinstance(u, tuple):
        return tuple(_zeros_like(ui) for ui in u)
    return np.zeros_like(u, dtype=float) if np.ndim(u) else 0.0


def _random_like(v, rng):
    if isinstance(v, tuple):
        return tuple(_random_like(vi, rng) for vi in v)
    if np.ndim(v):
        return rng.uniform(-1.0, 1.0, size=np.shape(v))
    return float(rng.uniform(-1.0, 1.0))


def default_schemes(eta, seed: int = 0, theta0: float = 0.1, max_m: int = 20) -> list:
    """Geometric, alternating-with-perturbation and geometric-with-perturbation schemes."""
    u = _random_like(eta, np.random.default_rng(seed))
    return [
        geometric_scheme(theta0, max_m),
        with_perturbation(alternating_scheme(theta0, max_m), u),
        with_perturbation(geometric_scheme(theta0, max_m), u),
    ]


# ---------------------------------------------------------------------------
# limit estimation


@dataclass
class ConvergenceReport:
    estimate: Any
    per_scheme_estimates: list
    max_scheme_disagreement: float
    converged: bool
    tolerance_used: float
    scheme_names: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "estimate": _jsonable(self.estimate),
            "per_scheme_estimates": [_jsonable(e) for e in self.per_scheme_estimates],
            "max_scheme_disagreement": self.max_scheme_disagreement,
            "converged": self.converged,
            "tolerance_used": self.tolerance_used,
            "schemes": list(self.scheme_names),
        }


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    if np.ndim(v):
        return [float(x) for x in np.asarray(v).ravel()]
    return float(v)


def _quotients(f: Callable, x, eta, scheme: SequenceScheme):
    fx = f(x)
    thetas, qs = [], []
    for m in range(scheme.max_m + 1):
        t = scheme.theta(m)
        if t == 0:
            raise ValueError(f"theta_{m} is zero in scheme {scheme.name!r}")
        eta_m = eta if scheme.eta_perturbation is None else _axpy(eta, 1.0, scheme.eta_perturbation(m))
        thetas.append(t)
        qs.append(_diff(f(_axpy(x, t, eta_m)), fx) / t)
    return thetas, qs


def _richardson(thetas, qs):
    # eliminate the error term linear in theta, pairing steps of equal sign
    out = []
    for m in range(len(qs)):
        p = m + 1 if m + 1 < len(qs) and thetas[m] * thetas[m + 1] > 0 else m + 2
        if p >= len(qs):
            break
        tm, tp = thetas[m], thetas[p]
        out.append((tm * qs[p] - tp * qs[m]) / (tm - tp))
    return out


def _scheme_estimate(f, x, eta, scheme):
    thetas, qs = _quotients(f, x, eta, scheme)
    seq = _richardson(thetas, qs) if scheme.extrapolation == "richardson" else qs
    tail = seq[-3:]
    est = tail[-1]
    spread = max(_norm(a - b) for a in tail for b in tail)
    return est, spread


def _report(f, x, eta, schemes, tol) -> ConvergenceReport:
    ests, spreads = [], []
    for s in schemes:
        est, spread = _scheme_estimate(f, x, eta, s)
        ests.append(est)
        spreads.append(spread)
    mean = sum(ests[1:], ests[0]) / len(ests)
    across = max(_norm(a - b) for a in ests for b in ests)
    disagreement = max([across] + spreads) / (1.0 + _norm(mean))
    estimate = float(mean) if np.ndim(mean) == 0 else mean
    return ConvergenceReport(
        estimate=estimate,
        per_scheme_estimates=[float(e) if np.ndim(e) == 0 else e for e in ests],
        max_scheme_disagreement=float(disagreement),
        converged=bool(disagreement <= tol),
        tolerance_used=tol,
        scheme_names=[s.name for s in schemes],
    )


def gateaux_numeric(f, x, eta, scheme: SequenceScheme | None = None, tol: float = DEFAULT_TOL) -> ConvergenceReport:
    """Estimate the Gateaux differential from ``(f(x + t*eta) - f(x)) / t`` as ``t -> 0``.

    The direction is held fixed; divergence shows up as a non-converged
    report rather than an exception.
    """
    scheme = scheme or geometric_scheme()
    if scheme.perturbed:
        raise ValueError("the Gateaux estimate keeps the direction fixed; use an unperturbed scheme")
    return _report(f, x, eta, [scheme], tol)


def chain_diff_numeric(f, x, eta, schemes: Sequence[SequenceScheme] | None = None,
                       tol: float = DEFAULT_TOL, seed: int = 0) -> ConvergenceReport:
    """Estimate the chain differential along several (theta_m, eta_m) sequences.

    The limit must not depend on the sequences, so the report converges only
    when every scheme settles and all schemes agree within ``tol``.  A
    converged report is evidence, not proof, of chain differentiability.
    """
    if schemes is None:
        schemes = default_schemes(eta, seed=seed)
    schemes = list(schemes)
    if len(schemes) < 2:
        raise ValueError("chain_diff_numeric needs at least two schemes")
    if not any(s.perturbed for s in schemes):
        raise ValueError("at least one scheme must perturb the direction")
    if not any(s.alternating for s in schemes):
        raise ValueError("at least one scheme must use alternating-sign theta")
    return _report(f, x, eta, schemes, tol)


def partial_diff_numeric(f: ConcreteFunc, xs, slot: int, eta, schemes=None,
                         tol: float = DEFAULT_TOL, seed: int = 0) -> ConvergenceReport:
    """Chain differential of ``f`` with respect to argument ``slot`` (1-based)."""
    xs = tuple(xs)
    if not 1 <= slot <= len(xs):
        raise ValueError(f"slot {slot} out of range for {len(xs)} argument(s)")

    def partial(y):
        args = xs[: slot - 1] + (y,) + xs[slot:]
        return f(args)

    return chain_diff_numeric(partial, xs[slot - 1], eta, schemes, tol, seed)


def _default_step(order: int, h0: float) -> float:
    # Richardson leaves O(h**4) truncation against O(eps / h**n) round-off;
    # balancing them gives h ~ eps**(1/(n+4)), anchored so order 1 uses h0
    return h0 ** (5.0 / (order + 4))


def nth_diff_numeric(f, x, directions: Sequence, order: int | None = None, *,
                     slots: Sequence | None = None, h0: float = 1e-3):
    """Nested central-difference estimate of the order-n differential.

    Each direction gets its own central difference with one Richardson
    step; the base step ``h0`` is widened to ``h0 ** (5/(n+4))`` at order n
    and divided by the max-norm of the direction.
    """
    directions = list(directions)
    n = len(directions)
    if order is not None and order != n:
        raise ValueError(f"order {order} does not match {n} direction(s)")
    if n > MAX_NUMERIC_ORDER:
        raise ValueError(f"unsupported order {n}; at most {MAX_NUMERIC_ORDER}")
    if slots is None:
        slots = [1] * n
    call = f
    if n == 0:
        return call(x)
    if any(_norm(d) == 0 for d in directions):
        return np.zeros_like(np.asarray(call(x), dtype=float)) + 0.0

    h = _default_step(n, h0)
    steps = [h / _norm(d) for d in directions]

    def shifted(ts):
        if isinstance(x, tuple):
            pt = list(x)
            for t, d, s in zip(ts, directions, slots):
                pt[s - 1] = _axpy(pt[s - 1], t, d)
            return tuple(pt)
        pt = x
        for t, d in zip(ts, directions):
            pt = _axpy(pt, t, d)
        return pt

    def level(ts):
        i = len(ts)
        if i == n:
            return np.asarray(call(shifted(ts)), dtype=float)

        def central(s):
            return (level(ts + [s]) - level(ts + [-s])) / (2 * s)

        s = steps[i]
        return (4 * central(s / 2) - central(s)) / 3

    out = level([])
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# expression evaluation


@dataclass(frozen=True)
class EvalContext:
    """Bindings of symbol names, point values and direction values.

    A binding may be a ``ConcreteFunc`` or, for a linear map ``lin[a]``, the
    coefficient vector ``a``.
    """

    bindings: dict
    point_values: dict = field(default_factory=dict)
    direction_values: dict = field(default_factory=dict)
    numeric_fallback: bool = True

    def with_point(self, name: str, value) -> EvalContext:
        return replace(self, point_values={**self.point_values, name: value})

    def with_directions(self, values: dict) -> EvalContext:
        return replace(self, direction_values={**self.direction_values, **values})


def _binding(ctx: EvalContext, name: str):
    try:
        return ctx.bindings[name]
    except KeyError:
        raise EvaluationError(f"unbound symbol {name!r}") from None


def _linear_callable(b) -> Callable:
    if isinstance(b, ConcreteFunc):
        return b.apply
    a = np.asarray(b, dtype=float)

    def ell(y):
        if a.ndim == 0:
            return a * y
        if np.shape(y) != a.shape:
            raise EvaluationError(f"space mismatch: linear map of size {a.size} applied to shape {np.shape(y)}")
        return float(a @ y)

    return ell


def function_value(func: Expr, ctx: EvalContext) -> Callable:
    """Turn a function-level expression into a Python callable of its arguments."""
    if isinstance(func, FuncSymbol):
        b = _binding(ctx, func.name)
        if isinstance(b, ConcreteFunc):
            if b.arity != func.arity:
                raise EvaluationError(f"{func.name} is bound to a function of arity {b.arity}")
            return b.apply
        if callable(b):
            return b
        raise EvaluationError(f"{func.name!r} is not bound to a function")
    if isinstance(func, Linear):
        return _linear_callable(_binding(ctx, func.name))
    if isinstance(func, Power):
        k = func.exponent
        return lambda y: y**k
    if isinstance(func, ExpNode):
        return np.exp
    if isinstance(func, Compose):
        outer, inner = function_value(func.outer, ctx), function_value(func.inner, ctx)
        return lambda *a: outer(inner(*a))
    if isinstance(func, (Sum, Product)):
        parts = func.terms if isinstance(func, Sum) else func.factors
        fs = [
            (lambda *a, c=float(p.value): c) if isinstance(p, Scalar) else function_value(p, ctx)
            for p in parts
        ]
        if isinstance(func, Sum):
            return lambda *a: sum(f(*a) for f in fs)
        return lambda *a: math.prod(f(*a) for f in fs)
    raise EvaluationError(f"{type(func).__name__} is not a function expression")


def _diff_value(e: Diff, ctx: EvalContext):
    base = tuple(evaluate(b, ctx) for b in e.base)
    dirs = [evaluate(d, ctx) for d in e.directions]
    m = len(dirs)
    if m == 0:
        return function_value(e.target, ctx)(*base)
    target = e.target
    if isinstance(target, ExpNode):
        return np.exp(base[0]) * math.prod(dirs)
    if isinstance(target, Power):
        k = target.exponent
        if m > k:
            return 0.0 * base[0]
        return math.perm(k, m) * base[0] ** (k - m) * math.prod(dirs)
    if isinstance(target, Linear):
        return function_value(target, ctx)(dirs[0]) if m == 1 else 0.0
    if isinstance(target, FuncSymbol):
        b = _binding(ctx, target.name)
        if isinstance(b, ConcreteFunc):
            point = base if len(base) > 1 else base[0]
            exact = b.differential(point, dirs, e.slots)
            if exact is not None:
                return exact
    if not ctx.numeric_fallback:
        raise EvaluationError(f"no exact differential for {target!r} and numeric estimation is disabled")
    func = function_value(target, ctx)
    if len(base) > 1:
        return nth_diff_numeric(lambda p: func(*p), base, dirs, slots=e.slots)
    return nth_diff_numeric(func, base[0], dirs)


def evaluate(e: Expr, ctx: EvalContext):
    """Numeric value of a value-level expression under ``ctx``."""
    if isinstance(e, Scalar):
        return float(e.value)
    if isinstance(e, PointVar):
        try:
            return ctx.point_values[e.name]
        except KeyError:
            raise EvaluationError(f"unbound point {e.name!r}") from None
    if isinstance(e, DirectionVar):
        try:
            return ctx.direction_values[e.index]
        except KeyError:
            raise EvaluationError(f"unbound direction e{e.index}") from None
    if isinstance(e, Sum):
        return sum((evaluate(t, ctx) for t in e.terms[1:]), evaluate(e.terms[0], ctx))
    if isinstance(e, Product):
        out = evaluate(e.factors[0], ctx)
        for f in e.factors[1:]:
            out = out * evaluate(f, ctx)
        return out
    if isinstance(e, Apply):
        func = function_value(e.func, ctx)
        return func(*(evaluate(a, ctx) for a in e.args))
    if isinstance(e, Diff):
        return _diff_value(e, ctx)
    if isinstance(e, (FuncSymbol, Linear, Power, ExpNode, Compose)):
        raise EvaluationError("cannot evaluate a function expression without a point; apply it first")
    raise StructuralError(f"unknown node kind {type(e).__name__}")


def as_concrete(e: Expr, ctx: EvalContext, point: str = "x", domain=None, name: str | None = None) -> ConcreteFunc:
    """The map ``value of point -> value of e`` as a ``ConcreteFunc``.

    Function-level expressions are applied at ``point`` first.
    """
    v = at_point(e, PointVar(point))

    def run(y):
        return evaluate(v, ctx.with_point(point, y))

    return ConcreteFunc(name or f"<{type(e).__name__}>", domain, None, run)


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerificationReport:
    expected: Any
    actual: Any
    residual: float
    tolerance: float
    passed: bool
    order: int
    converged: bool | None = None
    schemes: dict | None = None

    def to_dict(self) -> dict:
        return {
            "expected": _jsonable(self.expected),
            "actual": _jsonable(self.actual),
            "residual": self.residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "order": self.order,
            "converged": self.converged,
            "schemes": self.schemes,
        }


def verify(e_symbolic: Expr, target, ctx: EvalContext, tol: float = 1e-5, *,
           directions: Sequence[int] | None = None, point: str = "x") -> VerificationReport:
    """Compare a symbolic differential against nested differences of ``target``.

    ``directions`` are the direction indices in differentiation order; by
    default, the indices occurring in ``e_symbolic`` in increasing order.
    Passes when ``|actual - expected| <= tol * (1 + |expected|)``.
    """
    if directions is None:
        directions = sorted(direction_indices(e_symbolic))
    try:
        x = ctx.point_values[point]
        dirs = [ctx.direction_values[j] for j in directions]
    except KeyError as exc:
        raise EvaluationError(f"unbound point or direction {exc.args[0]!r}") from None

    actual = evaluate(e_symbolic, ctx)
    expected = nth_diff_numeric(target, x, dirs)
    residual = relative_residual(actual, expected)
    converged = schemes = None
    if len(dirs) == 1:
        rep = chain_diff_numeric(target, x, dirs[0], tol=tol)
        converged = rep.converged
        schemes = rep.to_dict()
    return VerificationReport(
        expected=expected,
        actual=actual,
        residual=float(residual),
        tolerance=tol,
        passed=bool(residual <= tol),
        order=len(dirs),
        converged=converged,
        schemes=schemes,
    )
