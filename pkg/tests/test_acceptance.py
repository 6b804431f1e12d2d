"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line with the measured
quantities, visible even when pytest captures output.
"""

import io
import math
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from conftest import LINEAR_CONFIG
from hilfer_picard.cli import EXAMPLE_PROBLEM, EXAMPLE_RHS, cmd_example, example_report, main
from hilfer_picard.operators import caputo, hilfer, rl_derivative
from hilfer_picard.picard import (
    Problem,
    SolverConfig,
    bound_u,
    bound_u0,
    compute_l,
    phi0,
    picard_step,
    ratio_u,
    solve,
)
from hilfer_picard.quadrature import KernelQuadrature, jacobi_rule, make_mesh
from hilfer_picard.special import beta, gamma, gamma_limit, mittag_leffler2


@pytest.fixture
def verdict(capsys):
    def report(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return report


@pytest.fixture(scope="module")
def excursions():
    # (label, max |y - x0| over all iterates, b) from every solve in criteria 3-7
    return []


def linear_problem(b=50.0):
    return Problem(a=0.0, alpha=0.5, beta_type=0.5, x0=1.0, h=1.0, b=b, k=-0.25, rhs="x")


@pytest.fixture(scope="module")
def linear_solution():
    p = linear_problem()
    sol = solve(p, SolverConfig(N=128, Q=64, tol=1e-10, l_override=0.5), M=51.0, A=1.0, keep_history=True)
    return p, sol


def test_criterion_1_gamma_limit(verdict):
    start = time.perf_counter()
    ok = True
    worst_final = 0.0
    for x in (0.5, 1.5, 3.7):
        ref = gamma(x)
        errs = [abs(gamma_limit(x, m) - ref) / ref for m in (10**2, 10**3, 10**4, 10**5)]
        ok &= all(b < a for a, b in zip(errs, errs[1:]))
        worst_final = max(worst_final, errs[-1])
    elapsed = time.perf_counter() - start
    ok &= worst_final <= 1e-4 and elapsed < 1.0
    verdict(1, "Gamma limit", ok, f"monotone decrease, worst rel err at m=1e5 {worst_final:.2e}, {elapsed:.3f} s")


def test_criterion_2_quadrature_exactness(verdict):
    start = time.perf_counter()
    p, q, n = -0.5, -1.0 / 3.0, 40
    rule = jacobi_rule(p, q, n)
    worst = max(abs(np.dot(rule.weights, rule.nodes**j) / beta(p + 1, q + j + 1) - 1) for j in range(2 * n))
    elapsed = time.perf_counter() - start
    verdict(2, "Jacobi moments j<=79", worst <= 1e-10 and elapsed < 1.0, f"worst rel err {worst:.2e}, {elapsed:.3f} s")


def test_criterion_3_power_law_fixed_point(verdict, excursions):
    c = 2.5
    p = Problem(rhs=f"{gamma(0.5) * c!r}*t^(-1/3)", **EXAMPLE_PROBLEM)
    sol = solve(p, SolverConfig(N=128, Q=32, tol=1e-12))
    exact = p.x0 + c * sol.t ** (p.mu + p.k) * beta(p.alpha, p.k + 1)
    err = float(np.max(np.abs(sol.y - exact)))
    its = sol.report.iterations
    excursions.append(("power law", max(r.excursion for r in sol.report.records), p.b))
    verdict(3, "power-law fixed point", its <= 2 and err < 1e-10, f"{its} iteration(s), sup error {err:.2e}")


def test_criterion_4_mittag_leffler(verdict, linear_solution, excursions):
    p, sol = linear_solution
    g = p.gamma_w
    ref = np.array([gamma(g) * mittag_leffler2(p.alpha, g, t**p.alpha) for t in sol.t])
    err = float(np.max(np.abs(sol.y - ref)))
    series_err = 0.0
    for n in range(6):
        partial = sum(gamma(g) / gamma(g + j * p.alpha) * sol.t ** (j * p.alpha) for j in range(n + 1))
        series_err = max(series_err, float(np.max(np.abs(sol.history[n] - partial))))
    excursions.append(("linear", max(float(np.max(np.abs(y - p.x0))) for y in sol.history), p.b))
    ok = sol.report.converged and err <= 1e-6 and series_err <= 1e-7
    verdict(4, "Mittag-Leffler oracle", ok, f"converged err {err:.2e}, iterates 0..5 vs series {series_err:.2e}")


def test_criterion_5_bound_ledger(verdict, linear_solution):
    p, sol = linear_solution
    M, A, l = sol.hypotheses.M, sol.hypotheses.A, sol.l_used
    recs = sol.report.records
    worst = recs[0].d / bound_u0(p, M, l)
    for rec in recs[2:]:
        worst = max(worst, rec.d / bound_u(p, M, A, l, rec.n - 2))
    ratios = [ratio_u(p, A, l, n) for n in range(51)]
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    first_half = next((n for n, r in enumerate(ratios) if r < 0.5), None)
    ok = worst <= 1.01 and decreasing and first_half is not None
    verdict(5, "bound ledger", ok, f"max d/bound {worst:.3g}, ratio decreasing {decreasing}, ratio<1/2 from n={first_half}")


def test_criterion_6_hilfer_interpolation(verdict):
    f = lambda s: s**2  # noqa: E731
    worst_rl = worst_c = 0.0
    for alpha in (0.3, 0.5, 0.7):
        worst_rl = max(worst_rl, abs(hilfer(f, 0.0, 0.5, alpha, 0.0) - rl_derivative(f, 0.0, 0.5, alpha)))
        worst_c = max(worst_c, abs(hilfer(f, 0.0, 0.5, alpha, 1.0) - caputo(f, 0.0, 0.5, alpha)))
    ok = worst_rl <= 1e-5 and worst_c <= 1e-5
    verdict(6, "type 0 / type 1 limits", ok, f"vs RL {worst_rl:.2e}, vs Caputo {worst_c:.2e}")


@pytest.fixture(scope="module")
def example():
    rep = example_report(refine=True)
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cmd_example(refine=True)
    return rep, code, buf.getvalue()


def test_criterion_7_example(verdict, example, excursions):
    rep, code, text = example
    p = Problem(rhs=EXAMPLE_RHS, **EXAMPLE_PROBLEM)
    tube_ok = rep["tube"] == (-5.0, 11.0) and "E = [-5, 11]" in text
    M = rep["M_reduced"]
    m_ok = float(f"{M:.3g}") == float(f"{25.46:.3g}") and M == pytest.approx(1 + 11 ** (4 / 3), rel=1e-12)
    l_ok = rep["l"] == compute_l(p, M) and f"{rep['l']:.10g}" in text and "0.4" in text
    coarse, fine = rep["solutions"]
    res_ok = (
        coarse.config.N == 256 and coarse.config.Q == 64 and coarse.report.converged
        and coarse.residual_sup <= 1e-4 and fine.residual_sup < coarse.residual_sup
    )
    for sol in rep["solutions"]:
        excursions.append((f"example N={sol.config.N}", max(r.excursion for r in sol.report.records), p.b))
    ok = tube_ok and m_ok and l_ok and res_ok and code == 0
    verdict(
        7,
        "singular example",
        ok,
        f"E {rep['tube']}, M {M:.6g}, l {rep['l']:.6g} (published 0.4 not reproduced), "
        f"residual {coarse.residual_sup:.2e} -> {fine.residual_sup:.2e}",
    )


def test_criterion_8_confinement(verdict, excursions, write_config, tmp_path):
    # iterates built directly here as well, in case criteria 3-7 ran in isolation
    p = linear_problem()
    mesh = make_mesh(0.0, 0.5, 32)
    quad = KernelQuadrature(mesh, p.alpha, p.k, 16)
    it = phi0(p, mesh)
    worst = 0.0
    for _ in range(10):
        it = picard_step(p, it, quad)
        worst = max(worst, float(np.max(np.abs(it.y - p.x0))) / p.b)
    labels = []
    for label, excursion, b in excursions:
        worst = max(worst, excursion / b)
        labels.append(label)
    text = LINEAR_CONFIG.replace("b = 50", "b = 0.05").replace("M = 51", "M = 1e-6").replace("l_override = 0.5\n", "")
    code = main(["solve", str(write_config(text)), "-o", str(tmp_path / "out")])
    ok = worst <= 1.0 and code == 3 and len(labels) >= 4
    verdict(8, "confinement", ok, f"max |y-x0|/b {worst:.3g} over {len(labels) + 1} solves, shrunk-b exit code {code}")


def test_criterion_9_determinism(verdict, write_config, tmp_path):
    path = write_config(LINEAR_CONFIG)
    codes = [main(["solve", str(path), "-o", str(tmp_path / name)]) for name in ("a", "b")]
    same = all(
        (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in ("solution.csv", "iterations.csv")
    )
    verdict(9, "determinism", codes == [0, 0] and same, f"exit codes {codes}, bit-identical CSVs {same}")
