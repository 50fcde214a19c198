"""Text syntax for expressions: a printer and a recursive-descent parser.

Grammar (lowest to highest precedence)::

    sum      := prod ('+' prod)*
    prod     := comp ('*' comp)*
    comp     := postfix ('o' comp)?               composition, right-assoc
    postfix  := primary ('(' args ')')*           application
    primary  := number | '-' primary | name | 'exp' | 'pow[' int ']'
              | 'lin[' name ']' | '(' sum ')' | dterm | request
    dterm    := 'D' ['{' ints '}'] (name | '(' sum ')') '(' args ';' args ')'
    request  := 'D[' ints ']' sum '@' name

``dterm`` is an unevaluated differential such as ``Dg(x;e1)``; ``request``
asks for the chain differential of an expression and is evaluated while
parsing.  Names ``e1, e2, ...`` are directions, names in ``points`` are
point variables and every other name is a function symbol.  Names may not
start with ``D`` and ``o`` is reserved.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

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
    canonicalize,
)

DEFAULT_POINTS = ("x", "y", "z")


class DSLSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# printing

_PREC = {Sum: 1, Product: 2, Compose: 3}


def _wrap(e: Expr, min_prec: int) -> str:
    text = serialize(e)
    if _PREC.get(type(e), 10) < min_prec:
        return f"({text})"
    return text


def _scalar_text(v) -> str:
    return str(v) if isinstance(v, Fraction) else repr(v)


def _func_head(func: Expr) -> str:
    if isinstance(func, (FuncSymbol, Linear, Power, ExpNode)):
        return serialize(func)
    return f"({serialize(func)})"


def serialize(e: Expr) -> str:
    """Render ``e`` in the DSL syntax understood by ``parse``."""
    if isinstance(e, PointVar):
        return e.name
    if isinstance(e, DirectionVar):
        return f"e{e.index}"
    if isinstance(e, Scalar):
        return _scalar_text(e.value)
    if isinstance(e, FuncSymbol):
        return e.name
    if isinstance(e, Linear):
        return f"lin[{e.name}]"
    if isinstance(e, Power):
        return f"pow[{e.exponent}]"
    if isinstance(e, ExpNode):
        return "exp"
    if isinstance(e, Sum):
        return " + ".join(_wrap(t, 2) for t in e.terms)
    if isinstance(e, Product):
        return " * ".join(_wrap(f, 3) for f in e.factors)
    if isinstance(e, Compose):
        return f"{_wrap(e.outer, 4)} o {_wrap(e.inner, 3)}"
    if isinstance(e, Apply):
        return f"{_func_head(e.func)}({','.join(serialize(a) for a in e.args)})"
    if isinstance(e, Diff):
        slots = ""
        if len(e.base) > 1:
            slots = "{" + ",".join(map(str, e.slots)) + "}"
        base = ",".join(serialize(b) for b in e.base)
        dirs = ",".join(serialize(d) for d in e.directions)
        return f"D{slots}{_func_head(e.target)}({base};{dirs})"
    raise StructuralError(f"unknown node kind {type(e).__name__}")


# ---------------------------------------------------------------------------
# lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+/\d+|(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\]{},;+*@-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # number, name, D, punct, end
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind == "ws":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = pos + tok.rindex("\n") + 1
        elif kind == "name" and tok.startswith("D"):
            toks.append(_Tok("D", "D", line, col))
            if len(tok) > 1:
                toks.append(_Tok("name", tok[1:], line, col + 1))
        else:
            toks.append(_Tok(kind, tok, line, col))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


# ---------------------------------------------------------------------------
# parsing

_DIRECTION_RE = re.compile(r"e([1-9]\d*)$")
_RESERVED = {"o", "exp", "pow", "lin"}


class _Parser:
    def __init__(self, text: str, points):
        self.toks = _tokenize(text)
        self.i = 0
        self.points = set(points)
        # names after '@' are point variables wherever they occur
        for a, b in zip(self.toks, self.toks[1:]):
            if a.text == "@" and b.kind == "name":
                self.points.add(b.text)

    # -- helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.tok
        return DSLSyntaxError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "punct" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def take_name(self) -> _Tok:
        tok = self.tok
        if tok.kind != "name":
            raise self.error(f"expected a name, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def take_int(self) -> int:
        tok = self.tok
        if tok.kind != "number":
            raise self.error(f"expected an integer, found {tok.text or 'end of input'!r}")
        if not tok.text.isdigit():
            raise self.error(f"expected an integer, found {tok.text!r}")
        self.i += 1
        return int(tok.text)

    def int_list(self, close: str) -> list:
        out = [self.take_int()]
        while self.accept(","):
            out.append(self.take_int())
        self.expect(close)
        return out

    # -- grammar
    def parse(self) -> Expr:
        e = self.sum()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def sum(self) -> Expr:
        terms = [self.prod()]
        while self.accept("+"):
            terms.append(self.prod())
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def prod(self) -> Expr:
        factors = [self.comp()]
        while self.accept("*"):
            factors.append(self.comp())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def comp(self) -> Expr:
        start = self.tok
        outer = self.postfix()
        if self.tok.kind == "name" and self.tok.text == "o":
            self.i += 1
            inner_tok = self.tok
            inner = self.comp()
            return Compose(self.as_function(outer, start), self.as_function(inner, inner_tok))
        return outer

    def postfix(self) -> Expr:
        start = self.tok
        e = self.primary()
        while self.tok.kind == "punct" and self.tok.text == "(":
            self.i += 1
            args = self.args()
            self.expect(")")
            e = Apply(self.as_function(e, start, len(args)), tuple(args))
        return e

    def args(self) -> list:
        out = [self.sum()]
        while self.accept(","):
            out.append(self.sum())
        return out

    def as_function(self, e: Expr, tok: _Tok, arity: int = 1) -> Expr:
        if isinstance(e, FuncSymbol):
            return FuncSymbol(e.name, arity)
        if isinstance(e, PointVar):
            raise self.error(f"{e.name!r} is a point variable, not a function", tok)
        if isinstance(e, (DirectionVar, Scalar, Apply, Diff)):
            raise self.error("expected a function expression", tok)
        return e

    def primary(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            return Scalar(_number(tok.text))
        if tok.kind == "punct" and tok.text == "-":
            self.i += 1
            if self.tok.kind == "number":
                num = self.tok
                self.i += 1
                return Scalar(-_number(num.text))
            return Product((Scalar(-1), self.postfix()))
        if tok.kind == "punct" and tok.text == "(":
            self.i += 1
            e = self.sum()
            self.expect(")")
            return e
        if tok.kind == "D":
            self.i += 1
            if self.accept("["):
                return self.request()
            return self.dterm()
        if tok.kind == "name":
            self.i += 1
            name = tok.text
            if name == "exp":
                return ExpNode()
            if name == "pow":
                self.expect("[")
                ktok = self.tok
                if ktok.kind != "number" or not ktok.text.isdigit() or int(ktok.text) < 1:
                    raise self.error(f"power exponent must be a positive integer, found {ktok.text!r}", ktok)
                self.i += 1
                self.expect("]")
                return Power(int(ktok.text))
            if name == "lin":
                self.expect("[")
                ntok = self.take_name()
                self.expect("]")
                return Linear(ntok.text)
            if name == "o":
                raise self.error("'o' needs a left operand", tok)
            m = _DIRECTION_RE.match(name)
            if m:
                return DirectionVar(int(m.group(1)))
            if name in self.points:
                return PointVar(name)
            return FuncSymbol(name)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def request(self) -> Expr:
        from .engine import nth_chain_diff

        dirs = self.int_list("]")
        body_tok = self.tok
        body = self.sum()
        if not self.accept("@"):
            raise self.error("differentiation request needs '@ <point>'")
        point = self.take_name()
        try:
            return nth_chain_diff(body, PointVar(point.text), dirs)
        except (ValueError, StructuralError) as exc:
            raise self.error(str(exc), body_tok) from None

    def dterm(self) -> Expr:
        slots = None
        if self.accept("{"):
            slots = self.int_list("}")
        tok = self.tok
        if self.accept("("):
            target = self.sum()
            self.expect(")")
        else:
            name = self.take_name()
            if name.text in _RESERVED:
                target = {"exp": ExpNode()}.get(name.text)
                if target is None:
                    raise self.error(f"unknown construct 'D{name.text}'", name)
            else:
                target = FuncSymbol(name.text)
        self.expect("(")
        base = self.args()
        self.expect(";")
        dirs = self.args()
        self.expect(")")
        if isinstance(target, FuncSymbol):
            target = FuncSymbol(target.name, len(base))
        target = self.as_function(target, tok, len(base))
        try:
            return Diff(target, tuple(base), tuple(dirs), None if slots is None else tuple(slots))
        except StructuralError as exc:
            raise self.error(str(exc), tok) from None


def _number(text: str):
    if "/" in text:
        return Fraction(text)
    if any(c in text for c in ".eE"):
        return float(text)
    return int(text)


def parse(text: str, points=DEFAULT_POINTS) -> Expr:
    """Parse DSL text into a canonical expression.

    Raises ``DSLSyntaxError`` (with line and column) on malformed input.
    """
    parser = _Parser(text, points)
    e = parser.parse()
    try:
        return canonicalize(e)
    except StructuralError as exc:
        raise DSLSyntaxError(str(exc), 1, 1) from None
