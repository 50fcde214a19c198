# %% [markdown]
# # Checking symbolic results numerically
#
# Concrete functionals on R^2 and on a grid of 32 points, limit estimates
# along several sequences, and nested central differences.

# %%
import numpy as np

from chaindiff import (
    Compose,
    ConcreteSpace,
    EvalContext,
    ExpNode,
    FuncSymbol,
    PointVar,
    Power,
    chain_diff,
    chain_diff_numeric,
    evaluate,
    faa_di_bruno,
    gateaux_numeric,
    nth_chain_diff,
    nth_diff_numeric,
    serialize,
)
from chaindiff import fixtures
from chaindiff.numeric import as_concrete, verify

x = PointVar("x")
g = FuncSymbol("g")

# %% [markdown]
# The chain differential must not depend on how t and the direction approach
# their limits.  Smooth functions agree across schemes; |x| at 0 does not.

# %%
explin = fixtures.exp_linear([1.0, 1.0])
rep = chain_diff_numeric(explin, np.zeros(2), np.array([1.0, 0.0]))
print(rep.scheme_names)
print(rep.per_scheme_estimates, rep.converged)

# the alternating scheme's tail jumps between -1 and +1
rep = chain_diff_numeric(fixtures.absolute_value(), 0.0, 1.0)
print(rep.max_scheme_disagreement, rep.converged)

# %% [markdown]
# Homogeneity in the direction.

# %%
quad = fixtures.quadratic_functional([[2.0, 0.5], [0.5, 1.0]])
x0, eta = np.array([0.3, -0.2]), np.array([1.0, 2.0])
base = gateaux_numeric(quad, x0, eta).estimate
for alpha in (-2, -1, 0.5, 3):
    print(alpha, gateaux_numeric(quad, x0, alpha * eta).estimate, alpha * base)

# %% [markdown]
# A functional on grid functions: the exponential of the mean square,
# mu -> exp(sum_i w_i mu(t_i)^2).

# %%
grid = ConcreteSpace.grid(32)
t = grid.nodes
ctx = EvalContext(
    {"g": fixtures.norm_squared(grid, "g")},
    {"x": np.sin(np.pi * t)},
    {1: t, 2: np.cos(t), 3: np.ones_like(t)},
)
target = Compose(ExpNode(), g)
for n in (1, 2, 3):
    dirs = list(range(1, n + 1))
    symbolic = faa_di_bruno(ExpNode(), g, x, dirs)
    nested = nth_diff_numeric(as_concrete(target, ctx), ctx.point_values["x"], [ctx.direction_values[i] for i in dirs])
    print(n, evaluate(symbolic, ctx), nested)

# %% [markdown]
# `verify` packages the comparison into a report.

# %%
expr = Compose(Power(3), g)
sym = chain_diff(expr, x, 1)
ctx = EvalContext({"g": fixtures.linear_functional(2.0, name="g")}, {"x": 1.0}, {1: 1.0})
print(serialize(sym), verify(sym, as_concrete(expr, ctx), ctx).to_dict())

sym2 = nth_chain_diff(Compose(ExpNode(), Compose(Power(2), g)), x, [1, 2])
ctx2 = EvalContext({"g": fixtures.exp_linear([0.5, -0.5], name="g")}, {"x": np.array([0.1, 0.2])},
                   {1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0])})
report = verify(sym2, as_concrete(Compose(ExpNode(), Compose(Power(2), g)), ctx2), ctx2, tol=1e-4)
print(report.passed, report.residual)
