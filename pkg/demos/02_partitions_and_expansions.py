# %% [markdown]
# # Set partitions and the higher-order chain rule
#
# The n-th differential of a composition has one term per set partition of
# the direction indices; the product rule has one term per subset.

# %%
import math

import numpy as np
from numpy.polynomial import Polynomial

from chaindiff import (
    Compose,
    EvalContext,
    ExpNode,
    FuncSymbol,
    PointVar,
    bell,
    evaluate,
    faa_di_bruno,
    leibniz,
    nth_chain_diff,
    partitions,
    serialize,
    stirling2,
    structural_equal,
)
from chaindiff import fixtures

x = PointVar("x")
f, g = FuncSymbol("f"), FuncSymbol("g")

# %%
for p in partitions(4):
    print(p)
print("Bell numbers:", [bell(n) for n in range(9)])
print("S(6, k):", [stirling2(6, k) for k in range(7)])

# %% [markdown]
# Before simplification the expansion has exactly bell(n) summands.

# %%
for n in range(1, 7):
    raw = faa_di_bruno(f, g, x, list(range(1, n + 1)), canonical=False)
    print(n, len(raw.terms))

# %% [markdown]
# The closed forms agree with the recursive definition.

# %%
for n in range(1, 5):
    dirs = list(range(1, n + 1))
    same_chain = structural_equal(nth_chain_diff(Compose(f, g), x, dirs), faa_di_bruno(f, g, x, dirs))
    same_product = structural_equal(nth_chain_diff(f(x) * g(x), x, dirs), leibniz(f, g, x, dirs))
    print(n, same_chain, same_product)

print(serialize(leibniz(f, g, x, [1, 2])))

# %% [markdown]
# On the real line with unit directions, the expansion of exp o p is the
# ordinary n-th derivative, which elementary calculus gives as q_n exp(p)
# with q_0 = 1 and q_{k+1} = q_k' + p' q_k.

# %%
coeffs = [0.3, -1.2, 0.5, 0.4]
p = Polynomial(coeffs)
q = Polynomial([1.0])
ctx = EvalContext({"g": fixtures.scalar_polynomial(coeffs, "g")}, {"x": 0.7}, {i: 1.0 for i in range(1, 5)})
for n in range(1, 5):
    q = q.deriv() + p.deriv() * q
    symbolic = evaluate(faa_di_bruno(ExpNode(), g, x, list(range(1, n + 1))), ctx)
    classical = q(0.7) * math.exp(p(0.7))
    print(f"n={n}: {symbolic:.12f} {classical:.12f} diff={abs(symbolic - classical):.1e}")

assert np.isclose(symbolic, classical)
