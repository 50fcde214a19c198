"""Ready-made concrete functions with closed-form differentials.

All fixtures are smooth except ``absolute_value``, which is kept as a
negative example: it has no chain differential at 0.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import Polynomial

from .numeric import R, ConcreteFunc, ConcreteSpace


def _dot(a, v):
    return float(np.dot(a, v)) if np.ndim(a) else a * v


def _space_of(a) -> ConcreteSpace:
    return R if np.ndim(a) == 0 else ConcreteSpace.euclidean(len(a))


def linear_functional(a, space: ConcreteSpace | None = None, name: str = "ell") -> ConcreteFunc:
    """``x -> <a, x>``; its first differential is ``<a, eta>``, higher ones vanish."""
    a = np.asarray(a, dtype=float) if np.ndim(a) else float(a)
    space = space or _space_of(a)

    def diff(x, dirs, slots):
        if len(dirs) == 1:
            return _dot(a, dirs[0])
        return 0.0

    return ConcreteFunc(name, space, None, lambda x: _dot(a, x), diff)


def grid_integral(space: ConcreteSpace, name: str = "integral") -> ConcreteFunc:
    """The quadrature functional ``mu -> sum_i w_i mu(t_i)`` on a grid space."""
    return linear_functional(space.weights, space, name)


def quadratic_functional(A, b=None, c: float = 0.0, space: ConcreteSpace | None = None,
                         name: str = "quad") -> ConcreteFunc:
    """``x -> x^T A x + b^T x + c``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    S = 0.5 * (A + A.T)
    dim = A.shape[0]
    b = np.zeros(dim) if b is None else np.asarray(b, dtype=float)
    space = space or ConcreteSpace.euclidean(dim)

    def vec(v):
        return np.atleast_1d(np.asarray(v, dtype=float))

    def value(x):
        x = vec(x)
        return float(x @ A @ x + b @ x + c)

    def diff(x, dirs, slots):
        x = vec(x)
        if len(dirs) == 1:
            v = vec(dirs[0])
            return float(2 * x @ S @ v + b @ v)
        if len(dirs) == 2:
            return float(2 * vec(dirs[0]) @ S @ vec(dirs[1]))
        return 0.0

    return ConcreteFunc(name, space, None, value, diff)


def norm_squared(space: ConcreteSpace, name: str = "normsq") -> ConcreteFunc:
    return quadratic_functional(np.diag(space.weights), space=space, name=name)


def exp_linear(a, space: ConcreteSpace | None = None, name: str = "explin") -> ConcreteFunc:
    """``x -> exp(<a, x>)``; order-m differential ``exp(<a,x>) * prod <a, eta_i>``."""
    a = np.asarray(a, dtype=float) if np.ndim(a) else float(a)
    space = space or _space_of(a)

    def diff(x, dirs, slots):
        return math.exp(_dot(a, x)) * math.prod(_dot(a, d) for d in dirs)

    return ConcreteFunc(name, space, None, lambda x: math.exp(_dot(a, x)), diff)


def scalar_polynomial(coeffs, name: str = "poly") -> ConcreteFunc:
    """A polynomial on R, coefficients in increasing degree."""
    p = Polynomial(np.asarray(coeffs, dtype=float))

    def diff(x, dirs, slots):
        return float(p.deriv(len(dirs))(x)) * math.prod(dirs)

    return ConcreteFunc(name, R, None, lambda x: float(p(x)), diff)


def pointwise_power(k: int, space: ConcreteSpace, name: str | None = None) -> ConcreteFunc:
    """``mu -> mu**k`` applied node by node; maps the space to itself."""

    def diff(x, dirs, slots):
        m = len(dirs)
        if m > k:
            return np.zeros_like(np.asarray(x, dtype=float))
        out = math.perm(k, m) * np.asarray(x, dtype=float) ** (k - m)
        for d in dirs:
            out = out * d
        return out

    return ConcreteFunc(name or f"pow{k}", space, space, lambda x: np.asarray(x, dtype=float) ** k, diff)


def affine_map(A, b=None, name: str = "affine") -> ConcreteFunc:
    """``x -> A x + b`` from R^n to R^m."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)

    def diff(x, dirs, slots):
        if len(dirs) == 1:
            return A @ np.asarray(dirs[0], dtype=float)
        return np.zeros(A.shape[0])

    return ConcreteFunc(
        name,
        ConcreteSpace.euclidean(A.shape[1]),
        ConcreteSpace.euclidean(A.shape[0]),
        lambda x: A @ np.asarray(x, dtype=float) + b,
        diff,
    )


def inner_product(space: ConcreteSpace, name: str = "inner") -> ConcreteFunc:
    """``(x, y) -> sum_i w_i x_i y_i``; on R x R this is plain multiplication."""
    w = space.weights if not space.is_scalar else 1.0

    def ip(x, y):
        return float(np.sum(w * np.asarray(x) * np.asarray(y)))

    def diff(point, dirs, slots):
        x, y = point
        counts = (slots.count(1), slots.count(2))
        if counts[0] > 1 or counts[1] > 1:
            return 0.0
        u = next((d for d, s in zip(dirs, slots) if s == 1), x)
        v = next((d for d, s in zip(dirs, slots) if s == 2), y)
        return ip(u, v)

    return ConcreteFunc(name, (space, space), None, ip, diff)


def exp_times_square(a, b, name: str = "F") -> ConcreteFunc:
    """``(x, y) -> exp(<a, x>) * <b, y>**2``, with all mixed partials in closed form."""
    a = np.asarray(a, dtype=float) if np.ndim(a) else float(a)
    b = np.asarray(b, dtype=float) if np.ndim(b) else float(b)

    def value(x, y):
        return math.exp(_dot(a, x)) * _dot(b, y) ** 2

    def diff(point, dirs, slots):
        x, y = point
        xs = [d for d, s in zip(dirs, slots) if s == 1]
        ys = [d for d, s in zip(dirs, slots) if s == 2]
        left = math.exp(_dot(a, x)) * math.prod(_dot(a, d) for d in xs)
        if len(ys) == 0:
            right = _dot(b, y) ** 2
        elif len(ys) == 1:
            right = 2 * _dot(b, y) * _dot(b, ys[0])
        elif len(ys) == 2:
            right = 2 * _dot(b, ys[0]) * _dot(b, ys[1])
        else:
            right = 0.0
        return left * right

    return ConcreteFunc(name, (_space_of(a), _space_of(b)), None, value, diff)


def absolute_value(name: str = "abs") -> ConcreteFunc:
    """``x -> |x|`` on R: not chain-differentiable at 0 (no exact differential)."""
    return ConcreteFunc(name, R, None, lambda x: abs(float(x)))
