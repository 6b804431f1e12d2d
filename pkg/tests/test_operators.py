import dataclasses

import numpy as np
import pytest

from hilfer_picard.operators import (
    SampledFunction,
    caputo,
    differential_residual,
    hilfer,
    integral_residual,
    rl_derivative,
    rl_integral,
)
from hilfer_picard.picard import Problem, SolverConfig, solve
from hilfer_picard.quadrature import jacobi_rule, make_mesh
from hilfer_picard.special import gamma

ALPHAS = [0.3, 0.5, 0.7]
EXAMPLE = dict(a=0.0, alpha=0.5, beta_type=0.5, x0=3.0, h=10.0, b=8.0, k=-1.0 / 3.0)
EXAMPLE_RHS = "t^(-1/3)*(1 + t*(x^4)^(1/3))"
REDUCED_M = 25.46378099626247073281899714394372916171


def vectorize(F):
    return lambda s: np.array([F(si) for si in np.atleast_1d(s)])


@pytest.mark.parametrize("alpha", ALPHAS + [1.5])
def test_rl_integral_constant(alpha):
    a, t = 0.5, 1.7
    assert rl_integral(np.ones_like, a, t, alpha) == pytest.approx((t - a) ** alpha / gamma(alpha + 1), rel=1e-13)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("p", [1.0, 2.0, -0.3, 0.45])
def test_rl_integral_power(alpha, p):
    a, t = -1.0, 0.2
    val = rl_integral(lambda s: (s - a) ** p, a, t, alpha, q=p)
    assert val == pytest.approx(gamma(p + 1) / gamma(p + alpha + 1) * (t - a) ** (p + alpha), rel=1e-13)


def test_rl_integral_prebuilt_rule_and_errors():
    rule = jacobi_rule(-0.5, 2.0, 8)
    val = rl_integral(lambda s: s**2, 0.0, 1.0, 0.5, rule)
    assert val == pytest.approx(gamma(3) / gamma(3.5), rel=1e-13)
    with pytest.raises(ValueError):
        rl_integral(np.ones_like, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        rl_integral(np.ones_like, 0.0, 1.0, 0.3, rule)


def test_semigroup_on_polynomials():
    f = lambda s: 1 + s + s**2  # noqa: E731
    inner = vectorize(lambda s: rl_integral(f, 0.0, s, 0.4))
    composed = rl_integral(inner, 0.0, 0.9, 0.3, q=0.4)
    direct = rl_integral(f, 0.0, 0.9, 0.7)
    assert composed == pytest.approx(direct, abs=1e-8)
    # I^(1/2) I^(1/2) s^2 = I^1 s^2 = s^3 / 3
    half = vectorize(lambda s: rl_integral(lambda u: u**2, 0.0, s, 0.5, q=2.0))
    assert rl_integral(half, 0.0, 1.0, 0.5, q=2.5) == pytest.approx(1 / 3, abs=1e-8)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_rl_derivative_power_rules(alpha):
    a, t = 0.0, 0.5
    assert abs(rl_derivative(lambda s: (s - a) ** (alpha - 1), a, t, alpha, q=alpha - 1)) <= 1e-6
    assert rl_derivative(np.ones_like, a, t, alpha) == pytest.approx(t ** (-alpha) / gamma(1 - alpha), rel=1e-6)
    assert rl_derivative(lambda s: s**2, a, t, alpha) == pytest.approx(2 / gamma(3 - alpha) * t ** (2 - alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_rl_derivative_inverts_integral(alpha):
    f = lambda s: 2 - s + 3 * s**2  # noqa: E731
    F = vectorize(lambda s: rl_integral(f, 0.0, s, alpha, q=0.0) if s > 0 else 0.0)
    for t in (0.2, 0.5, 0.9):
        # I^alpha f ~ s^alpha near 0; the derivative recovers f
        assert rl_derivative(F, 0.0, t, alpha, q=alpha) == pytest.approx(f(t), abs=1e-5)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_caputo_power_rules(alpha):
    a, t = 0.0, 0.5
    assert caputo(lambda s: np.full_like(s, 4.0), a, t, alpha) == pytest.approx(0.0, abs=1e-12)
    assert caputo(lambda s: s, a, t, alpha) == pytest.approx(t ** (1 - alpha) / gamma(2 - alpha), rel=1e-8)
    exact = caputo(lambda s: s**2, a, t, alpha, df=lambda s: 2 * s)
    assert exact == pytest.approx(rl_derivative(lambda s: s**2, a, t, alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("f", [lambda s: s**2, np.exp], ids=["square", "exp"])
def test_hilfer_interpolates(alpha, f):
    a, t = 0.0, 0.5
    assert abs(hilfer(f, a, t, alpha, 0.0) - rl_derivative(f, a, t, alpha)) <= 1e-5
    assert abs(hilfer(f, a, t, alpha, 1.0) - caputo(f, a, t, alpha)) <= 1e-5


@pytest.mark.parametrize("alpha, beta_type", [(0.5, 0.5), (0.3, 0.2), (0.7, 0.9)])
def test_hilfer_annihilates_initial_power(alpha, beta_type):
    gam = alpha + beta_type * (1 - alpha)
    val = hilfer(lambda s: s ** (gam - 1), 0.0, 0.5, alpha, beta_type, q=gam - 1)
    assert abs(val) <= 1e-6


def test_hilfer_power_rule():
    # D^{alpha,beta} s^2 = Gamma(3)/Gamma(3-alpha) s^(2-alpha) for every type beta
    alpha, t = 0.5, 0.5
    for beta_type in (0.25, 0.5, 0.75):
        val = hilfer(lambda s: s**2, 0.0, t, alpha, beta_type)
        assert val == pytest.approx(2 / gamma(3 - alpha) * t ** (2 - alpha), rel=1e-5)


def test_operator_argument_errors():
    with pytest.raises(ValueError):
        rl_derivative(np.ones_like, 0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        caputo(np.ones_like, 0.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        hilfer(np.ones_like, 0.0, 0.5, 0.5, 1.5)
    with pytest.raises(ValueError):
        rl_derivative(np.ones_like, 0.0, 0.0, 0.5)


def test_sampled_function_rejects_nonfinite():
    mesh = make_mesh(0.0, 1.0, 4)
    assert SampledFunction(mesh, np.zeros(5), 0.25).w == 0.25
    with pytest.raises(ValueError):
        SampledFunction(mesh, np.array([0.0, 1.0, np.nan, 2.0, 3.0]))


def test_residual_zero_rhs():
    p = Problem(rhs="0", **EXAMPLE)
    assert integral_residual(p, solve(p, verify=False)) == 0.0


@pytest.fixture(scope="module")
def linear():
    p = Problem(a=0.0, alpha=0.5, beta_type=0.5, x0=1.0, h=1.0, b=50.0, k=-0.25, rhs="x")
    sol = solve(p, SolverConfig(N=128, Q=64, tol=1e-8, l_override=0.5), M=51.0, A=1.0)
    return p, sol


def test_residual_linear(linear):
    p, sol = linear
    assert integral_residual(p, sol) <= 1e-6
    assert integral_residual(p, sol, jacobi_rule(p.alpha - 1, p.k, 96)) <= 1e-6


def test_residual_threaded_matches(linear, monkeypatch):
    p, sol = linear
    seq = integral_residual(p, sol)
    monkeypatch.setenv("HP_THREADS", "3")
    assert integral_residual(p, sol) == seq


def test_differential_residual_diagnostic(linear):
    p, sol = linear
    # nested finite differences; only a coarse spot check
    assert differential_residual(p, sol, 0.25) <= 1e-3


@pytest.fixture(scope="module")
def example_solutions():
    p = Problem(rhs=EXAMPLE_RHS, **EXAMPLE)
    coarse = solve(p, SolverConfig(N=64, Q=16, tol=1e-12), M=REDUCED_M, keep_history=True)
    fine = solve(p, SolverConfig(N=128, Q=32, tol=1e-12), M=REDUCED_M)
    return p, coarse, fine


def test_unconverged_iterate_has_larger_residual(example_solutions):
    p, coarse, _ = example_solutions
    one_step = dataclasses.replace(coarse, y=coarse.history[1])
    assert integral_residual(p, one_step) > coarse.residual_sup


def test_example_residual_decreases_under_refinement(example_solutions):
    _, coarse, fine = example_solutions
    assert fine.residual_sup < coarse.residual_sup
