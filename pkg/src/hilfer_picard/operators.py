"""Numerical Riemann-Liouville, Caputo and Hilfer operators of order in (0, 1),
plus residual checks of computed solutions.

Integrals go through Gauss-Jacobi rules; the ordinary derivatives inside the
Riemann-Liouville and Hilfer operators are central differences of the
computed fractional integral, with a step proportional to ``t - a``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

from .quadrature import JacobiRule, Mesh, frac_integral_weighted, jacobi_rule, thread_count
from .special import log_gamma

if TYPE_CHECKING:
    from .picard import Problem, Solution

__all__ = [
    "SampledFunction",
    "rl_integral",
    "rl_derivative",
    "caputo",
    "hilfer",
    "integral_residual",
    "differential_residual",
]

Func = Callable[[np.ndarray], np.ndarray]

FD_REL_STEP = 1e-4


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Mesh samples ``values_j = (t_j - a)^w F(t_j)`` of a function ``F``."""

    mesh: Mesh
    values: np.ndarray = field(repr=False)
    w: float = 0.0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sampled values must be finite")


def rl_integral(
    f: Func,
    a: float,
    t: float,
    alpha: float,
    rule: JacobiRule | None = None,
    *,
    q: float = 0.0,
    n: int = 64,
) -> float:
    r"""Riemann-Liouville integral :math:`I_{a^+}^\alpha f(t)`.

    ``q`` is the known endpoint exponent of ``f`` (``f(s) ~ (s-a)^q``); it is
    moved into the quadrature weight so the rule only sees ``f / (s-a)^q``.
    A prebuilt ``rule`` overrides ``q`` and ``n``.
    """
    if not alpha > 0:
        raise ValueError(f"order must be positive, got {alpha!r}")
    if rule is None:
        rule = jacobi_rule(alpha - 1.0, q, n)
    q = rule.q

    def g(s):
        return np.asarray(f(s), dtype=float) * (s - a) ** (-q)

    return math.exp(-log_gamma(alpha)) * frac_integral_weighted(g, a, t, alpha, q, rule)


def _step(a: float, t: float, rel: float) -> float:
    dist = t - a
    if not dist > 0 or dist * rel <= 4.0 * np.finfo(float).eps * max(1.0, abs(t)):
        raise ValueError(f"t={t!r} too close to a={a!r} for a finite-difference stencil")
    return dist * rel


def _central(F: Callable[[float], float], a: float, t: float, rel: float = FD_REL_STEP) -> float:
    d = _step(a, t, rel)
    return (F(t + d) - F(t - d)) / (2.0 * d)


def rl_derivative(f: Func, a: float, t: float, alpha: float, *, q: float = 0.0, n: int = 64) -> float:
    r"""Riemann-Liouville derivative :math:`\frac{d}{dt} I_{a^+}^{1-\alpha} f(t)`, ``0 < alpha < 1``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return _central(lambda tau: rl_integral(f, a, tau, 1.0 - alpha, q=q, n=n), a, t)


def caputo(
    f: Func,
    a: float,
    t: float,
    alpha: float,
    df: Func | None = None,
    *,
    q: float = 0.0,
    n: int = 64,
) -> float:
    r"""Caputo derivative :math:`I_{a^+}^{1-\alpha} f'(t)`, ``0 < alpha < 1``.

    ``df`` is the derivative of ``f``; without it ``f'`` is taken by central
    differences at the quadrature nodes. ``q`` is the endpoint exponent of ``f'``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if df is None:
        def df(s):
            d = 1e-5 * (s - a)
            return (np.asarray(f(s + d)) - np.asarray(f(s - d))) / (2.0 * d)
    return rl_integral(df, a, t, 1.0 - alpha, q=q, n=n)


def hilfer(
    f: Func,
    a: float,
    t: float,
    alpha: float,
    beta_type: float,
    *,
    q: float = 0.0,
    q_out: float | None = None,
    n: int = 64,
) -> float:
    r"""Hilfer derivative :math:`I^{\beta(1-\alpha)} \frac{d}{dt} I^{(1-\beta)(1-\alpha)} f(t)`.

    ``q`` is the endpoint exponent of ``f``. The outer integral factors
    ``(s-a)^{q_out}`` out of the differentiated inner integral; by default
    ``q_out = q + (1-beta)(1-alpha) - 1``, the exponent of that derivative
    for a pure power ``f``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 0.0 <= beta_type <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta_type!r}")
    inner = (1.0 - beta_type) * (1.0 - alpha)
    outer = beta_type * (1.0 - alpha)

    if inner > 0:
        def G(tau):
            return rl_integral(f, a, tau, inner, q=q, n=n)
    else:
        def G(tau):
            return float(f(np.asarray(tau)))

    def dG(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return np.array([_central(G, a, si) for si in s])

    if outer == 0:
        return float(dG(t)[0])
    if q_out is None:
        q_out = q + inner - 1.0
        if q_out <= -1.0:
            q_out = 0.0
    return rl_integral(dG, a, t, outer, q=q_out, n=n)


def integral_residual(p: Problem, sol: Solution, rule: JacobiRule | None = None) -> float:
    """Sup over interior mesh points of the defect in the Volterra equation.

    ``|y_j - x0 - (t_j-a)^(1-gamma)/Gamma(alpha) int_a^{t_j} (t_j-s)^(alpha-1) f(s, x(s)) ds|``,
    with ``x`` rebuilt from ``sol`` and the integral taken by a single
    Gauss-Jacobi rule over ``[a, t_j]`` with ``2 Q`` nodes by default, a
    different quadrature from the one used while solving.
    """
    from .picard import weighted_rhs

    if rule is None:
        rule = jacobi_rule(p.alpha - 1.0, p.k, 2 * sol.config.Q)
    inv_gamma = math.exp(-log_gamma(p.alpha))
    t = np.asarray(sol.mesh.points)

    def g(s):
        return weighted_rhs(p, s, sol.weighted(s))

    def defect(j: int) -> float:
        integral = frac_integral_weighted(g, p.a, t[j], p.alpha, p.k, rule)
        rhs = p.x0 + (t[j] - p.a) ** (1.0 - p.gamma_w) * inv_gamma * integral
        return abs(sol.y[j] - rhs)

    rows = range(1, len(t))
    workers = thread_count()
    if workers > 0:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            defects = list(pool.map(defect, rows))
    else:
        defects = [defect(j) for j in rows]
    return float(max(defects))


def differential_residual(p: Problem, sol: Solution, t: float, n: int = 64) -> float:
    """Diagnostic ``|D^{alpha,beta} x(t) - f(t, x(t))|`` at an interior point.

    Much less accurate than :func:`integral_residual` because of the nested
    finite difference; intended for spot checks only.
    """
    from .expr import evaluate

    x = sol  # Solution is callable and returns x(s)
    lhs = hilfer(
        x, p.a, t, p.alpha, p.beta_type, q=p.gamma_w - 1.0, q_out=p.mu + p.k - 1.0, n=n
    )
    rhs = evaluate(p.rhs, t, float(sol(t)))
    return abs(lhs - rhs)
