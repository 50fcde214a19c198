"""Immutable expression trees for functionals and their canonical form.

Two kinds of expressions live in the same tree type:

* function-level expressions (``FuncSymbol``, ``Linear``, ``Power``,
  ``ExpNode``, ``Compose`` and pointwise sums/products of those), which
  denote maps between vector spaces;
* value-level expressions (``PointVar``, ``DirectionVar``, ``Scalar``,
  ``Apply``, ``Diff`` and sums/products of those), which denote elements
  of a space once points and directions are bound.

``canonicalize`` maps every well-formed tree to a normal form so that
symbolically equal differentials compare equal with ``==``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product as cartesian
from numbers import Rational


class StructuralError(ValueError):
    """Raised for malformed expression trees (unknown nodes, arity mismatch)."""


class Expr:
    """Base class of all expression nodes.

    Supports ``+``, ``*`` and call syntax as shorthands for ``Sum``,
    ``Product`` and ``Apply``.  Results are not canonicalized.
    """

    __slots__ = ()

    def __add__(self, other):
        return Sum((self, as_expr(other)))

    def __radd__(self, other):
        return Sum((as_expr(other), self))

    def __mul__(self, other):
        return Product((self, as_expr(other)))

    def __rmul__(self, other):
        return Product((as_expr(other), self))

    def __call__(self, *args):
        return Apply(self, tuple(as_expr(a) for a in args))

    def compose(self, inner):
        return Compose(self, inner)

    @cached_property
    def sort_key(self) -> tuple:
        """Total structural order used to sort sums, products and directions."""
        return _sort_key(self)


@dataclass(frozen=True)
class PointVar(Expr):
    name: str


@dataclass(frozen=True)
class DirectionVar(Expr):
    index: int

    def __post_init__(self):
        if not isinstance(self.index, int) or self.index < 1:
            raise StructuralError(f"direction index must be a positive integer, got {self.index!r}")


@dataclass(frozen=True)
class Scalar(Expr):
    """A real constant, exact (``Fraction``) when built from an int or rational."""

    value: Fraction | float

    def __post_init__(self):
        v = self.value
        if isinstance(v, bool):
            v = int(v)
        if isinstance(v, Rational):
            v = Fraction(v)
        elif isinstance(v, float):
            if not math.isfinite(v):
                raise StructuralError(f"non-finite scalar {v!r}")
        else:
            raise StructuralError(f"scalar must be a real number, got {type(v).__name__}")
        object.__setattr__(self, "value", v)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)


@dataclass(frozen=True)
class FuncSymbol(Expr):
    name: str
    arity: int = 1

    def __post_init__(self):
        if self.arity < 1:
            raise StructuralError(f"arity must be >= 1, got {self.arity}")


@dataclass(frozen=True)
class Linear(Expr):
    """A continuous linear map, identified by name and bound at evaluation."""

    name: str


@dataclass(frozen=True)
class Power(Expr):
    """The map ``y -> y**k`` for a positive integer ``k``."""

    exponent: int

    def __post_init__(self):
        if isinstance(self.exponent, bool) or not isinstance(self.exponent, int) or self.exponent < 1:
            raise StructuralError(f"power exponent must be a positive integer, got {self.exponent!r}")


@dataclass(frozen=True)
class ExpNode(Expr):
    pass


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class Compose(Expr):
    outer: Expr
    inner: Expr


@dataclass(frozen=True)
class Apply(Expr):
    func: Expr
    args: tuple

    def __post_init__(self):
        args = self.args
        if isinstance(args, Expr):
            args = (args,)
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Diff(Expr):
    """An unevaluated differential ``d^k target(base; directions)``.

    ``slots[i]`` is the argument position perturbed by ``directions[i]``;
    for a single-argument target every slot is 1.  The order is the
    number of directions.
    """

    target: Expr
    base: tuple
    directions: tuple = ()
    slots: tuple = field(default=None)

    def __post_init__(self):
        base = self.base
        if isinstance(base, Expr):
            base = (base,)
        object.__setattr__(self, "base", tuple(base))
        object.__setattr__(self, "directions", tuple(self.directions))
        slots = self.slots
        if slots is None:
            slots = (1,) * len(self.directions)
        slots = tuple(slots)
        if len(slots) != len(self.directions):
            raise StructuralError("slots and directions must have equal length")
        for s in slots:
            if not 1 <= s <= len(self.base):
                raise StructuralError(f"slot {s} out of range for {len(self.base)} argument(s)")
        object.__setattr__(self, "slots", slots)

    @property
    def order(self) -> int:
        return len(self.directions)


# A DiffTerm is the Diff node; the alias keeps the domain vocabulary.
DiffTerm = Diff

ZERO = Scalar(0)
ONE = Scalar(1)

_FUNCTION_ATOMS = (FuncSymbol, Linear, Power, ExpNode, Compose)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, Fraction)):
        return Scalar(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def is_function(e: Expr) -> bool:
    """True for function-level expressions (maps rather than values)."""
    if isinstance(e, _FUNCTION_ATOMS):
        return True
    if isinstance(e, (Sum, Product)):
        children = e.terms if isinstance(e, Sum) else e.factors
        kinds = [is_function(c) for c in children if not isinstance(c, Scalar)]
        if kinds and all(kinds):
            return True
        if any(kinds):
            raise StructuralError("sum/product mixes functions and values")
    return False


def arity_of(func: Expr) -> int:
    if isinstance(func, FuncSymbol):
        return func.arity
    if isinstance(func, Compose):
        return arity_of(func.inner)
    if isinstance(func, (Linear, Power, ExpNode)):
        return 1
    if isinstance(func, (Sum, Product)):
        children = func.terms if isinstance(func, Sum) else func.factors
        arities = {arity_of(c) for c in children if not isinstance(c, Scalar)}
        if len(arities) != 1:
            raise StructuralError("pointwise combination of functions with different arities")
        return arities.pop()
    raise StructuralError(f"{type(func).__name__} is not a function expression")


def at_point(e: Expr, *args: Expr) -> Expr:
    """Apply a function-level expression to ``args``; values pass through."""
    if isinstance(e, Scalar):
        return e
    if isinstance(e, Sum) and is_function(e):
        return Sum(tuple(at_point(t, *args) for t in e.terms))
    if isinstance(e, Product) and is_function(e):
        return Product(tuple(at_point(f, *args) for f in e.factors))
    if is_function(e):
        return Apply(e, args)
    return e


def power_of(base: Expr, k: int) -> Expr:
    """``base**k`` with the conventions ``k == 0 -> 1`` and ``k == 1 -> base``."""
    if k == 0:
        return ONE
    if k == 1:
        return base
    return Apply(Power(k), (base,))


def children(e: Expr) -> tuple:
    if isinstance(e, Sum):
        return e.terms
    if isinstance(e, Product):
        return e.factors
    if isinstance(e, Compose):
        return (e.outer, e.inner)
    if isinstance(e, Apply):
        return (e.func,) + e.args
    if isinstance(e, Diff):
        return (e.target,) + e.base + e.directions
    return ()


def walk(e: Expr):
    yield e
    for c in children(e):
        yield from walk(c)


def free_symbols(e: Expr) -> set[str]:
    """Names of all function symbols, linear maps and point variables in ``e``."""
    return {
        node.name
        for node in walk(e)
        if isinstance(node, (FuncSymbol, Linear, PointVar))
    }


def direction_indices(e: Expr) -> set[int]:
    return {node.index for node in walk(e) if isinstance(node, DirectionVar)}


# ---------------------------------------------------------------------------
# ordering

_RANK = {
    Scalar: 0,
    DirectionVar: 1,
    PointVar: 2,
    FuncSymbol: 3,
    Linear: 4,
    Power: 5,
    ExpNode: 6,
    Compose: 7,
    Apply: 8,
    Diff: 9,
    Product: 10,
    Sum: 11,
}


def _sort_key(e: Expr) -> tuple:
    rank = _RANK.get(type(e))
    if rank is None:
        raise StructuralError(f"unknown node kind {type(e).__name__}")
    if isinstance(e, Scalar):
        return (rank, float(e.value), not e.is_exact, str(e.value))
    if isinstance(e, DirectionVar):
        return (rank, e.index)
    if isinstance(e, PointVar):
        return (rank, e.name)
    if isinstance(e, FuncSymbol):
        return (rank, e.name, e.arity)
    if isinstance(e, Linear):
        return (rank, e.name)
    if isinstance(e, Power):
        return (rank, e.exponent)
    if isinstance(e, ExpNode):
        return (rank,)
    if isinstance(e, Compose):
        return (rank, e.outer.sort_key, e.inner.sort_key)
    if isinstance(e, Apply):
        return (rank, e.func.sort_key, tuple(a.sort_key for a in e.args))
    if isinstance(e, Diff):
        return (
            rank,
            e.order,
            e.target.sort_key,
            tuple(b.sort_key for b in e.base),
            tuple((s, d.sort_key) for s, d in zip(e.slots, e.directions)),
        )
    kids = e.terms if isinstance(e, Sum) else e.factors
    return (rank, len(kids), tuple(c.sort_key for c in kids))


# ---------------------------------------------------------------------------
# canonical form


def canonicalize(e: Expr) -> Expr:
    """Return the normal form of ``e``.

    Sums and products are flattened, sorted and constant-folded, products
    are distributed over sums and like terms are collected.  Applications
    of compositions are unfolded into nested applications.  Differentials
    are reduced when their order is zero, a direction vanishes, or the
    target is ``exp``, a power or a linear map; directions are expanded
    multilinearly and sorted.
    """
    if isinstance(e, (PointVar, DirectionVar, Scalar, FuncSymbol, Linear, Power, ExpNode)):
        return e
    if isinstance(e, Compose):
        return _canon_compose(canonicalize(e.outer), canonicalize(e.inner))
    if isinstance(e, Apply):
        return _canon_apply(canonicalize(e.func), tuple(canonicalize(a) for a in e.args))
    if isinstance(e, Diff):
        return _canon_diff(
            canonicalize(e.target),
            tuple(canonicalize(b) for b in e.base),
            tuple(canonicalize(d) for d in e.directions),
            e.slots,
        )
    if isinstance(e, Sum):
        return _canon_sum([canonicalize(t) for t in e.terms])
    if isinstance(e, Product):
        return _canon_product([canonicalize(f) for f in e.factors])
    raise StructuralError(f"unknown node kind {type(e).__name__}")


def structural_equal(a: Expr, b: Expr) -> bool:
    return canonicalize(a) == canonicalize(b)


def _canon_compose(outer: Expr, inner: Expr) -> Expr:
    if isinstance(outer, Compose):
        # right-nest: (a o b) o c -> a o (b o c)
        return _canon_compose(outer.outer, _canon_compose(outer.inner, inner))
    if isinstance(outer, Power) and outer.exponent == 1:
        return inner
    arity_of(outer)
    arity_of(inner)
    if arity_of(outer) != 1:
        raise StructuralError("outer function of a composition must take one argument")
    return Compose(outer, inner)


def _canon_apply(func: Expr, args: tuple) -> Expr:
    if not is_function(func):
        raise StructuralError(f"cannot apply non-function {type(func).__name__}")
    if arity_of(func) != len(args):
        raise StructuralError(
            f"arity mismatch: {_describe(func)} takes {arity_of(func)} argument(s), got {len(args)}"
        )
    if isinstance(func, Compose):
        return _canon_apply(func.outer, (_canon_apply(func.inner, args),))
    if isinstance(func, (Sum, Product)):
        return canonicalize(at_point(func, *args))
    (arg,) = args if len(args) == 1 else (None,)
    if isinstance(func, Power):
        if func.exponent == 1:
            return arg
        if isinstance(arg, Scalar) and arg.is_exact:
            return Scalar(arg.value ** func.exponent)
    if isinstance(func, ExpNode) and arg == ZERO:
        return ONE
    if isinstance(func, Linear):
        if isinstance(arg, Sum):
            return _canon_sum([_canon_apply(func, (t,)) for t in arg.terms])
        coef, rest = split_coefficient(arg)
        if coef == 0:
            return ZERO
        if coef != 1:
            return _canon_product([Scalar(coef), _canon_apply(func, (rest,))])
    return Apply(func, args)


def _canon_diff(target: Expr, base: tuple, directions: tuple, slots: tuple) -> Expr:
    if not is_function(target):
        raise StructuralError("differential target must be a function expression")
    if arity_of(target) != len(base):
        raise StructuralError(
            f"arity mismatch: {_describe(target)} takes {arity_of(target)} argument(s), got {len(base)}"
        )
    if not directions:
        return _canon_apply(target, base)

    # multilinearity in each direction slot
    for i, d in enumerate(directions):
        if d == ZERO:
            return ZERO
        if isinstance(d, Sum):
            return _canon_sum([
                _canon_diff(target, base, directions[:i] + (t,) + directions[i + 1:], slots)
                for t in d.terms
            ])
        coef, rest = split_coefficient(d)
        if coef != 1:
            inner = _canon_diff(target, base, directions[:i] + (rest,) + directions[i + 1:], slots)
            return _canon_product([Scalar(coef), inner])

    m = len(directions)
    if isinstance(target, ExpNode):
        return _canon_product([_canon_apply(target, base), *directions])
    if isinstance(target, Power):
        k = target.exponent
        if m > k:
            return ZERO
        falling = math.perm(k, m)
        return _canon_product([Scalar(falling), canonicalize(power_of(base[0], k - m)), *directions])
    if isinstance(target, Linear):
        if m > 1:
            return ZERO
        return _canon_apply(target, directions)

    pairs = sorted(zip(slots, directions), key=lambda p: (p[0], p[1].sort_key))
    return Diff(target, base, tuple(d for _, d in pairs), tuple(s for s, _ in pairs))


def split_coefficient(e: Expr) -> tuple:
    """Split a canonical term into ``(numeric coefficient, remaining expression)``."""
    if isinstance(e, Scalar):
        return e.value, ONE
    if isinstance(e, Product) and isinstance(e.factors[0], Scalar):
        rest = e.factors[1:]
        return e.factors[0].value, rest[0] if len(rest) == 1 else Product(rest)
    return Fraction(1), e


def _canon_sum(terms: list) -> Expr:
    flat = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        else:
            flat.append(t)

    coefs: dict = {}
    for t in flat:
        c, rest = split_coefficient(t)
        coefs[rest] = coefs.get(rest, 0) + c

    out = []
    for rest, c in coefs.items():
        if c == 0:
            continue
        if rest == ONE:
            out.append(Scalar(c))
        elif c == 1 and not isinstance(c, float):
            out.append(rest)
        else:
            factors = rest.factors if isinstance(rest, Product) else (rest,)
            out.append(Product((Scalar(c),) + factors))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda t: t.sort_key)
    return Sum(tuple(out))


def _canon_product(factors: list) -> Expr:
    flat = []
    for f in factors:
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)

    sums = [f for f in flat if isinstance(f, Sum)]
    if sums:
        rest = [f for f in flat if not isinstance(f, Sum)]
        expanded = [
            _canon_product(rest + list(choice))
            for choice in cartesian(*(s.terms for s in sums))
        ]
        return _canon_sum(expanded)

    coef = Fraction(1)
    others = []
    for f in flat:
        if isinstance(f, Scalar):
            coef = coef * f.value
        else:
            others.append(f)
    if coef == 0:
        return ZERO
    if not others:
        return Scalar(coef)
    others.sort(key=lambda t: t.sort_key)
    if coef == 1 and not isinstance(coef, float):
        return others[0] if len(others) == 1 else Product(tuple(others))
    return Product((Scalar(coef),) + tuple(others))


def _describe(func: Expr) -> str:
    if isinstance(func, (FuncSymbol, Linear)):
        return func.name
    return type(func).__name__


# ---------------------------------------------------------------------------
# JSON-like tree serialization


def _scalar_text(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return repr(v)


def to_tree(e: Expr) -> dict:
    """Serialize ``e`` to nested dicts/lists of plain JSON types."""
    if isinstance(e, PointVar):
        return {"kind": "PointVar", "name": e.name}
    if isinstance(e, DirectionVar):
        return {"kind": "DirectionVar", "index": e.index}
    if isinstance(e, Scalar):
        return {"kind": "Scalar", "value": _scalar_text(e.value), "exact": e.is_exact}
    if isinstance(e, FuncSymbol):
        return {"kind": "FuncSymbol", "name": e.name, "arity": e.arity}
    if isinstance(e, Linear):
        return {"kind": "Linear", "name": e.name}
    if isinstance(e, Power):
        return {"kind": "Power", "exponent": e.exponent}
    if isinstance(e, ExpNode):
        return {"kind": "ExpNode"}
    if isinstance(e, Sum):
        return {"kind": "Sum", "children": [to_tree(t) for t in e.terms]}
    if isinstance(e, Product):
        return {"kind": "Product", "children": [to_tree(f) for f in e.factors]}
    if isinstance(e, Compose):
        return {"kind": "Compose", "children": [to_tree(e.outer), to_tree(e.inner)]}
    if isinstance(e, Apply):
        return {"kind": "Apply", "func": to_tree(e.func), "args": [to_tree(a) for a in e.args]}
    if isinstance(e, Diff):
        return {
            "kind": "Diff",
            "order": e.order,
            "target": to_tree(e.target),
            "base": [to_tree(b) for b in e.base],
            "directions": [to_tree(d) for d in e.directions],
            "slots": list(e.slots),
        }
    raise StructuralError(f"unknown node kind {type(e).__name__}")


def from_tree(tree: dict) -> Expr:
    kind = tree.get("kind")
    if kind == "PointVar":
        return PointVar(tree["name"])
    if kind == "DirectionVar":
        return DirectionVar(int(tree["index"]))
    if kind == "Scalar":
        text = tree["value"]
        return Scalar(Fraction(text) if tree.get("exact", True) else float(text))
    if kind == "FuncSymbol":
        return FuncSymbol(tree["name"], int(tree.get("arity", 1)))
    if kind == "Linear":
        return Linear(tree["name"])
    if kind == "Power":
        return Power(int(tree["exponent"]))
    if kind == "ExpNode":
        return ExpNode()
    if kind == "Sum":
        return Sum(tuple(from_tree(c) for c in tree["children"]))
    if kind == "Product":
        return Product(tuple(from_tree(c) for c in tree["children"]))
    if kind == "Compose":
        outer, inner = tree["children"]
        return Compose(from_tree(outer), from_tree(inner))
    if kind == "Apply":
        return Apply(from_tree(tree["func"]), tuple(from_tree(a) for a in tree["args"]))
    if kind == "Diff":
        d = Diff(
            from_tree(tree["target"]),
            tuple(from_tree(b) for b in tree["base"]),
            tuple(from_tree(x) for x in tree["directions"]),
            tuple(tree["slots"]),
        )
        if "order" in tree and tree["order"] != d.order:
            raise StructuralError("order does not match the number of directions")
        return d
    raise StructuralError(f"unknown node kind {kind!r}")
