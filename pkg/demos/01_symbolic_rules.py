# %% [markdown]
# # Symbolic chain differentials
#
# Build expressions, differentiate them and look at the canonical output.

# %%
from chaindiff import (
    Compose,
    ExpNode,
    FuncSymbol,
    Linear,
    PointVar,
    Power,
    chain_diff,
    nth_chain_diff,
    parse,
    serialize,
    total_diff,
)

x = PointVar("x")
f, g = FuncSymbol("f"), FuncSymbol("g")

# %% [markdown]
# Closed forms stay closed: exp, powers and linear maps have their own rules,
# while an abstract outer function falls back to the chain rule.

# %%
for outer in (ExpNode(), Power(3), Linear("ell"), f):
    expr = Compose(outer, g)
    print(f"{serialize(expr):>12}  ->  {serialize(chain_diff(expr, x, 1))}")

# %% [markdown]
# Higher orders fold the first-order operator over distinct directions.

# %%
print(serialize(nth_chain_diff(Compose(ExpNode(), g), x, [1, 2])))
print(serialize(nth_chain_diff(Compose(f, g), x, [1, 2, 3])))

# %% [markdown]
# The text syntax accepts the same expressions; `D[...] expr @ point`
# differentiates while parsing.

# %%
print(serialize(parse("D[1,2] (pow[2] o g) @ x")))
print(serialize(parse("b(x) * (a(x) + 2) + a(x) * b(x)")))

# %% [markdown]
# A function of two arguments differentiates into partials, one per slot.

# %%
F = FuncSymbol("F", 2)
print(serialize(total_diff(F, [x, PointVar("y")], [1, 2])))
print(serialize(chain_diff(F(x, g(x)), x, 1)))

# %% [markdown]
# Every rewrite can be traced.

# %%
trace = []
chain_diff(Compose(ExpNode(), Compose(Power(2), g)), x, 1, trace)
for step in trace:
    print(f"{step.applied_rule.value:<16} {serialize(step.input):<22} -> {serialize(step.output)}")
