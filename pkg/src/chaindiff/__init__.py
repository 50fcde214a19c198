"""Symbolic chain differentials with a numeric limit oracle."""

from .combinatorics import bell, complement, partitions, stirling2, subsets
from .dsl import parse, serialize
from .engine import RuleTrace, chain_diff, faa_di_bruno, leibniz, nth_chain_diff, total_diff
from .expr import (
    Apply,
    Compose,
    Diff,
    DiffTerm,
    DirectionVar,
    ExpNode,
    Expr,
    FuncSymbol,
    Linear,
    PointVar,
    Power,
    Product,
    Scalar,
    Sum,
    canonicalize,
    free_symbols,
    structural_equal,
)
from .numeric import (
    ConcreteFunc,
    ConcreteSpace,
    EvalContext,
    chain_diff_numeric,
    evaluate,
    gateaux_numeric,
    nth_diff_numeric,
    partial_diff_numeric,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "Apply",
    "Compose",
    "ConcreteFunc",
    "ConcreteSpace",
    "Diff",
    "DiffTerm",
    "DirectionVar",
    "EvalContext",
    "ExpNode",
    "Expr",
    "FuncSymbol",
    "Linear",
    "PointVar",
    "Power",
    "Product",
    "RuleTrace",
    "Scalar",
    "Sum",
    "bell",
    "canonicalize",
    "chain_diff",
    "chain_diff_numeric",
    "complement",
    "evaluate",
    "faa_di_bruno",
    "free_symbols",
    "gateaux_numeric",
    "leibniz",
    "nth_chain_diff",
    "nth_diff_numeric",
    "parse",
    "partial_diff_numeric",
    "partitions",
    "serialize",
    "stirling2",
    "structural_equal",
    "subsets",
    "total_diff",
    "verify",
]
