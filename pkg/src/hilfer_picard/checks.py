"""Self-check suites run by ``hilfer-picard verify``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import special
from .operators import caputo, hilfer, rl_derivative, rl_integral
from .picard import Problem, SolverConfig, solve
from .quadrature import jacobi_rule

__all__ = ["CheckResult", "SUITES", "run_suite"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    measured: float
    threshold: float
    passed: bool


def _check(suite: str, name: str, measured: float, threshold: float) -> CheckResult:
    return CheckResult(suite, name, float(measured), float(threshold), bool(measured <= threshold))


def _strict(suite: str, name: str, measured: float, threshold: float) -> CheckResult:
    return CheckResult(suite, name, float(measured), float(threshold), bool(measured < threshold))


def gamma_suite() -> list[CheckResult]:
    out = []
    for x in (0.5, 1.5, 3.7):
        ref = special.gamma(x)
        prev = math.inf
        for m in (10**2, 10**3, 10**4, 10**5):
            err = abs(special.gamma_limit(x, m) - ref) / ref
            # each row must improve on the previous one; the last must reach 1e-4
            limit = min(prev, 1e-4) if m == 10**5 else prev
            out.append(_strict("gamma", f"gauss product x={x} m={m:.0e}", err, limit))
            prev = err
    rng = np.random.default_rng(0)
    worst = max(
        abs(special.gamma(x + 1) - x * special.gamma(x)) / (x * special.gamma(x))
        for x in rng.uniform(0.1, 50.0, 200)
    )
    out.append(_check("gamma", "recurrence Gamma(x+1) = x Gamma(x)", worst, 1e-12))
    return out


def quadrature_suite() -> list[CheckResult]:
    out = []
    for p, q, n in ((-0.5, -1 / 3, 40), (0.0, 0.0, 16), (-0.25, -0.75 + 1e-3, 16), (-0.5, -1 / 3, 8)):
        rule = jacobi_rule(p, q, n)
        worst = max(
            abs(np.dot(rule.weights, rule.nodes**j) / special.beta(p + 1, q + j + 1) - 1.0)
            for j in range(2 * n)
        )
        out.append(_check("quadrature", f"moments p={p:.4g} q={q:.4g} n={n}", worst, 1e-10))
    return out


def operators_suite() -> list[CheckResult]:
    out = []
    a, t = 0.0, 0.5
    funcs = {"(s-a)^2": lambda s: (s - a) ** 2, "exp(s-a)": lambda s: np.exp(s - a)}
    for label, f in funcs.items():
        for alpha in (0.3, 0.5, 0.7):
            d0 = abs(hilfer(f, a, t, alpha, 0.0) - rl_derivative(f, a, t, alpha))
            d1 = abs(hilfer(f, a, t, alpha, 1.0) - caputo(f, a, t, alpha))
            out.append(_check("operators", f"beta=0 vs RL, f={label}, alpha={alpha}", d0, 1e-5))
            out.append(_check("operators", f"beta=1 vs Caputo, f={label}, alpha={alpha}", d1, 1e-5))
    f2 = lambda s: s**2  # noqa: E731
    semigroup = abs(
        rl_integral(lambda s: np.array([rl_integral(f2, 0.0, si, 0.5, q=2.0) for si in np.atleast_1d(s)]),
                    0.0, 1.0, 0.5, q=2.5)
        - 1.0 / 3.0
    )
    out.append(_check("operators", "semigroup I^1/2 I^1/2 s^2 = s^3/3 at 1", semigroup, 1e-8))
    return out


def oracle_suite() -> list[CheckResult]:
    alpha = beta_type = 0.5
    gam = alpha + beta_type * (1 - alpha)
    p = Problem(a=0.0, alpha=alpha, beta_type=beta_type, x0=1.0, h=1.0, b=50.0, k=gam - 1.0, rhs="x")
    sol = solve(p, SolverConfig(N=128, Q=64, tol=1e-10, l_override=0.5), M=51.0, A=1.0)
    ref = np.array([special.gamma(gam) * special.mittag_leffler2(alpha, gam, tt**alpha) for tt in sol.t])
    return [
        _check("oracle", "linear problem vs Mittag-Leffler", float(np.max(np.abs(sol.y - ref))), 1e-6),
        _check("oracle", "linear problem integral residual", sol.residual_sup, 1e-6),
    ]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "gamma": gamma_suite,
    "quadrature": quadrature_suite,
    "operators": operators_suite,
    "oracle": oracle_suite,
}


def run_suite(selector: str = "all") -> list[CheckResult]:
    if selector == "all":
        return [r for suite in SUITES.values() for r in suite()]
    if selector not in SUITES:
        raise ValueError(f"unknown suite {selector!r}; choose from all, {', '.join(SUITES)}")
    return SUITES[selector]()


def format_table(results: list[CheckResult]) -> str:
    width = max((len(r.name) for r in results), default=10)
    lines = [f"{'suite':<11} {'check':<{width}} {'measured':>12} {'threshold':>10}  result"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        measured = f"{r.measured:.3e}" if math.isfinite(r.measured) else str(r.measured)
        lines.append(f"{r.suite:<11} {r.name:<{width}} {measured:>12} {r.threshold:>10.1e}  {status}")
    return "\n".join(lines)
