import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from chaindiff import fixtures
from chaindiff.engine import chain_diff, faa_di_bruno, nth_chain_diff
from chaindiff.expr import (
    Apply,
    Compose,
    Diff,
    DirectionVar,
    ExpNode,
    FuncSymbol,
    Linear,
    PointVar,
    Power,
    Product,
    Scalar,
)
from chaindiff.numeric import (
    R,
    ConcreteSpace,
    EvalContext,
    EvaluationError,
    SequenceScheme,
    alternating_scheme,
    as_concrete,
    chain_diff_numeric,
    close_enough,
    default_schemes,
    evaluate,
    gateaux_numeric,
    geometric_scheme,
    nth_diff_numeric,
    partial_diff_numeric,
    relative_residual,
    verify,
    with_perturbation,
)

x = PointVar("x")
g = FuncSymbol("g")
e1, e2 = DirectionVar(1), DirectionVar(2)
R2 = ConcreteSpace.euclidean(2)
A = np.array([1.0, 1.0])


def ctx_for(point, *dirs, **bindings):
    return EvalContext(bindings, {"x": point}, {i: d for i, d in enumerate(dirs, start=1)})


class TestSpaces:
    def test_validation(self):
        with pytest.raises(ValueError):
            ConcreteSpace.euclidean(0)
        with pytest.raises(ValueError):
            ConcreteSpace.grid(1)

    def test_grid_weights_integrate_constants(self):
        G = ConcreteSpace.grid(16)
        assert_allclose(G.weights.sum(), 1.0)
        assert G.nodes.shape == (16,)
        assert G.contains(np.zeros(16)) and not G.contains(np.zeros(3))

    def test_space_mismatch(self):
        ell = fixtures.linear_functional(A)
        with pytest.raises(EvaluationError):
            ell(np.zeros(3))


class TestEvaluate:
    def test_exp_of_zero(self):
        assert evaluate(Apply(ExpNode(), (Scalar(0),)), EvalContext({})) == 1

    def test_linear_differential(self):
        ctx = ctx_for(np.zeros(2), np.array([1.0, 0.0]), g=fixtures.linear_functional(A, name="g"))
        assert evaluate(Diff(g, (x,), (e1,)), ctx) == 1

    def test_exp_chain_value(self):
        ctx = ctx_for(np.zeros(2), np.array([1.0, 0.0]), g=fixtures.linear_functional(A, name="g"))
        e = Product((Apply(ExpNode(), (Apply(g, (x,)),)), Diff(g, (x,), (e1,))))
        val = evaluate(e, ctx)
        target = lambda p: math.exp(A @ p)  # noqa: E731
        h = 1e-5
        eta = np.array([1.0, 0.0])
        central = (target(h * eta) - target(-h * eta)) / (2 * h)
        assert abs(val - 1) < 1e-12
        assert abs(central - val) <= 1e-8

    def test_linear_map_binding_by_coefficients(self):
        ctx = ctx_for(np.array([2.0, -1.0]), a=np.array([3.0, 4.0]))
        assert evaluate(Apply(Linear("a"), (x,)), ctx) == 2.0

    def test_unbound(self):
        with pytest.raises(EvaluationError):
            evaluate(Apply(g, (x,)), ctx_for(1.0))
        with pytest.raises(EvaluationError):
            evaluate(e1, EvalContext({"g": fixtures.absolute_value()}))

    def test_numeric_fallback_switch(self):
        ctx = ctx_for(0.5, 1.0, g=fixtures.absolute_value("g"))
        assert_allclose(evaluate(Diff(g, (x,), (e1,)), ctx), 1.0, rtol=1e-8)
        strict = EvalContext(ctx.bindings, ctx.point_values, ctx.direction_values, numeric_fallback=False)
        with pytest.raises(EvaluationError):
            evaluate(Diff(g, (x,), (e1,)), strict)

    def test_function_without_point(self):
        with pytest.raises(EvaluationError):
            evaluate(g, ctx_for(1.0, g=fixtures.absolute_value("g")))


class TestGateaux:
    @pytest.mark.parametrize("x0", [np.zeros(2), np.array([0.3, -2.0])])
    def test_linear_exact_at_every_step(self, x0):
        eta = np.array([0.5, 2.0])
        ell = fixtures.linear_functional(A)
        scheme = geometric_scheme(extrapolation="none")
        rep = gateaux_numeric(ell, x0, eta, scheme)
        assert rep.converged
        # every quotient is exact up to the round-off of f(x + t*eta) - f(x)
        for m in range(scheme.max_m + 1):
            t = scheme.theta(m)
            q = (ell(x0 + t * eta) - ell(x0)) / t
            assert abs(q - 2.5) <= 16 * np.finfo(float).eps * (1 + abs(ell(x0))) / abs(t)
        assert rep.estimate == pytest.approx(2.5, abs=1e-8)

    def test_norm_squared_orthogonal(self):
        q = fixtures.norm_squared(R2)
        rep = gateaux_numeric(q, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert rep.converged
        assert abs(rep.estimate) < 1e-10

    @pytest.mark.parametrize("alpha", [-2, -1, 0.5, 3])
    @pytest.mark.parametrize(
        "fn",
        [
            fixtures.exp_linear(A),
            fixtures.quadratic_functional([[2.0, 0.5], [0.5, 1.0]], [1.0, -1.0], 0.3),
            fixtures.linear_functional(A),
        ],
        ids=["explinear", "quadratic", "linear"],
    )
    def test_homogeneity(self, fn, alpha):
        rng = np.random.default_rng(7)
        for _ in range(5):
            x0, eta = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            base = gateaux_numeric(fn, x0, eta).estimate
            scaled = gateaux_numeric(fn, x0, alpha * eta).estimate
            assert close_enough(scaled, alpha * base, 1e-6)

    def test_rejects_perturbed_scheme(self):
        with pytest.raises(ValueError):
            gateaux_numeric(fixtures.linear_functional(A), np.zeros(2), A, default_schemes(A)[1])


class TestChainDiffNumeric:
    def test_exp_linear(self):
        f = fixtures.exp_linear(A)
        rep = chain_diff_numeric(f, np.zeros(2), np.array([1.0, 0.0]))
        assert rep.converged
        assert_allclose(rep.per_scheme_estimates, 1.0, rtol=1e-6)

    def test_linear(self):
        rep = chain_diff_numeric(fixtures.linear_functional(A), np.array([0.2, 0.1]), np.array([1.0, -3.0]))
        assert rep.converged
        assert rep.estimate == pytest.approx(-2.0, abs=1e-8)

    def test_absolute_value_at_zero(self):
        rep = chain_diff_numeric(fixtures.absolute_value(), 0.0, 1.0)
        assert not rep.converged
        assert rep.max_scheme_disagreement > rep.tolerance_used

    def test_absolute_value_away_from_zero(self):
        rep = chain_diff_numeric(fixtures.absolute_value(), -0.7, 1.0)
        assert rep.converged
        assert rep.estimate == pytest.approx(-1.0)

    def test_report_invariant(self):
        for fn, x0 in [(fixtures.absolute_value(), 0.0), (fixtures.exp_linear(2.0), 0.1)]:
            rep = chain_diff_numeric(fn, x0, 1.0)
            assert rep.converged == (rep.max_scheme_disagreement <= rep.tolerance_used)
            d = rep.to_dict()
            assert set(d) >= {"estimate", "per_scheme_estimates", "max_scheme_disagreement", "converged"}

    def test_scheme_requirements(self):
        f = fixtures.exp_linear(1.0)
        with pytest.raises(ValueError):
            chain_diff_numeric(f, 0.0, 1.0, [geometric_scheme()])
        with pytest.raises(ValueError):
            chain_diff_numeric(f, 0.0, 1.0, [geometric_scheme(), alternating_scheme()])
        with pytest.raises(ValueError):
            chain_diff_numeric(f, 0.0, 1.0, [geometric_scheme(), with_perturbation(geometric_scheme(), 1.0)])

    def test_scheme_validation(self):
        with pytest.raises(ValueError):
            SequenceScheme("bad", lambda m: 0.1, extrapolation="cubic")
        with pytest.raises(ValueError):
            chain_diff_numeric(
                fixtures.exp_linear(1.0), 0.0, 1.0,
                [SequenceScheme("zero", lambda m: 0.0), with_perturbation(alternating_scheme(), 1.0)],
            )

    def test_grid_space(self):
        G = ConcreteSpace.grid(16)
        integral = fixtures.grid_integral(G)
        mu = np.sin(np.pi * G.nodes)
        eta = G.nodes**2
        rep = chain_diff_numeric(integral, mu, eta)
        assert rep.converged
        assert rep.estimate == pytest.approx(float(G.weights @ eta), rel=1e-9)

    @pytest.mark.parametrize(
        "fn",
        [
            fixtures.exp_linear(A),
            fixtures.quadratic_functional([[1.0, 0.2], [0.0, 2.0]]),
            fixtures.linear_functional(A),
        ],
        ids=["explinear", "quadratic", "linear"],
    )
    def test_sequence_robustness(self, fn):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x0, eta = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
            rep = chain_diff_numeric(fn, x0, eta, tol=1e-5)
            assert rep.converged
            assert close_enough(rep.estimate, fn.differential(x0, [eta]), 1e-5)


class TestPartials:
    def setup_method(self):
        self.F = fixtures.inner_product(R)

    def test_slots(self):
        assert partial_diff_numeric(self.F, (2.0, 3.0), 1, 1.0).estimate == pytest.approx(3.0)
        assert partial_diff_numeric(self.F, (2.0, 3.0), 2, 1.0).estimate == pytest.approx(2.0)

    def test_total_is_sum_of_partials(self):
        total = chain_diff_numeric(self.F, (2.0, 3.0), (1.0, 1.0))
        assert total.converged
        assert total.estimate == pytest.approx(5.0)

    def test_slot_range(self):
        with pytest.raises(ValueError):
            partial_diff_numeric(self.F, (2.0, 3.0), 3, 1.0)


class TestNthDiffNumeric:
    def test_second_order_exp_linear(self):
        f = fixtures.exp_linear(A)
        val = nth_diff_numeric(f, np.zeros(2), [np.array([1.0, 0.0]), np.array([0.0, 1.0])], order=2)
        assert val == pytest.approx(1.0, rel=1e-6)

    def test_first_order_is_gateaux(self):
        f = fixtures.exp_linear(A)
        x0, eta = np.array([0.1, 0.2]), np.array([0.4, -0.3])
        assert nth_diff_numeric(f, x0, [eta]) == pytest.approx(gateaux_numeric(f, x0, eta).estimate, rel=1e-6)

    def test_symmetry(self):
        f = fixtures.quadratic_functional([[1.0, 3.0], [-1.0, 2.0]])
        u, v = np.array([1.0, 2.0]), np.array([-0.5, 1.0])
        a = nth_diff_numeric(f, np.zeros(2), [u, v])
        b = nth_diff_numeric(f, np.zeros(2), [v, u])
        assert relative_residual(a, b) < 1e-6

    def test_unsupported_order(self):
        with pytest.raises(ValueError, match="unsupported order"):
            nth_diff_numeric(fixtures.exp_linear(1.0), 0.0, [1.0] * 5)
        with pytest.raises(ValueError):
            nth_diff_numeric(fixtures.exp_linear(1.0), 0.0, [1.0], order=2)

    @pytest.mark.parametrize("n", range(1, 5))
    def test_scalar_exp_orders(self, n):
        f = fixtures.exp_linear(1.0)
        assert nth_diff_numeric(f, 0.3, [1.0] * n) == pytest.approx(math.exp(0.3), rel=1e-6)

    def test_zero_direction(self):
        assert nth_diff_numeric(fixtures.exp_linear(A), np.zeros(2), [np.zeros(2)]) == 0.0

    def test_vector_valued(self):
        P = fixtures.pointwise_power(3, ConcreteSpace.grid(4))
        mu = np.linspace(0.5, 1.0, 4)
        out = nth_diff_numeric(P, mu, [np.ones(4), np.ones(4)])
        assert_allclose(out, 6 * mu, rtol=1e-6)


class TestVerify:
    def test_cubic_of_linear(self):
        expr = Compose(Power(3), Linear("a"))
        sym = chain_diff(expr, x, 1)
        ctx = EvalContext({"a": 2.0}, {"x": 1.0}, {1: 1.0})
        assert evaluate(sym, ctx) == pytest.approx(24.0)
        rep = verify(sym, as_concrete(expr, ctx), ctx)
        assert rep.passed
        assert rep.residual < 1e-8
        assert rep.converged

    def test_zero_direction(self):
        expr = Compose(ExpNode(), Linear("a"))
        sym = chain_diff(expr, x, 1)
        ctx = EvalContext({"a": A}, {"x": np.array([0.2, 0.1])}, {1: np.zeros(2)})
        rep = verify(sym, as_concrete(expr, ctx), ctx)
        assert rep.actual == 0 and rep.expected == 0 and rep.passed

    def test_third_order_scalar_cubic(self):
        p = FuncSymbol("p")
        dirs = [1, 2, 3]
        sym = faa_di_bruno(ExpNode(), p, x, dirs)
        ctx = EvalContext(
            {"p": fixtures.scalar_polynomial([0.1, -0.4, 0.3, 0.2], "p")},
            {"x": 0.4},
            {1: 1.0, 2: 1.0, 3: 1.0},
        )
        rep = verify(sym, as_concrete(Compose(ExpNode(), p), ctx), ctx, tol=1e-3)
        assert rep.passed

    def test_failure_is_reported(self):
        expr = Compose(ExpNode(), Linear("a"))
        wrong = Product((Scalar(2), chain_diff(expr, x, 1)))
        ctx = EvalContext({"a": 1.0}, {"x": 0.0}, {1: 1.0})
        rep = verify(wrong, as_concrete(expr, ctx), ctx)
        assert not rep.passed
        d = rep.to_dict()
        assert d["expected"] == pytest.approx(1.0) and d["actual"] == pytest.approx(2.0)

    def test_second_order_linear_chain(self):
        expr = Compose(ExpNode(), Linear("a"))
        sym = nth_chain_diff(expr, x, [1, 2])
        ctx = EvalContext({"a": A}, {"x": np.zeros(2)}, {1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0])})
        rep = verify(sym, as_concrete(expr, ctx), ctx)
        assert rep.passed and rep.actual == pytest.approx(1.0)


def test_linearity_in_direction():
    """Evaluating a differential at a*u + b*v equals a*(at u) + b*(at v)."""
    expr = Compose(ExpNode(), Compose(Power(2), Linear("a")))
    sym = nth_chain_diff(expr, x, [1, 2])
    rng = np.random.default_rng(11)
    for _ in range(10):
        x0, u, v, w = (rng.uniform(-1, 1, 2) for _ in range(4))
        al, be = rng.uniform(-2, 2, 2)
        base = EvalContext({"a": A}, {"x": x0}, {2: w})
        mixed = evaluate(sym, base.with_directions({1: al * u + be * v}))
        split = al * evaluate(sym, base.with_directions({1: u})) + be * evaluate(sym, base.with_directions({1: v}))
        assert close_enough(mixed, split, 1e-12)
