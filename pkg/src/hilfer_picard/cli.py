"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 no convergence,
3 iterate left the tube E, 4 right-hand side domain error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import checks
from .config import RunConfig, load_config, with_numerics
from .errors import (
    ConfigError,
    ConfinementError,
    ExprDomainError,
    ExprError,
    NonConvergenceError,
)
from .picard import (
    IterationReport,
    Problem,
    Solution,
    SolverConfig,
    compute_l,
    estimate_A,
    estimate_M,
    solve,
)

log = logging.getLogger("hilfer_picard")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_CONFINEMENT = 3
EXIT_DOMAIN = 4

# built-in example: D^{1/2,1/2} x = t^(-1/3) [1 + t x^(4/3)], t^(1/4) x -> 3
EXAMPLE_PROBLEM = dict(a=0.0, alpha=0.5, beta_type=0.5, x0=3.0, h=10.0, b=8.0, k=-1.0 / 3.0)
EXAMPLE_RHS = "t^(-1/3)*(1 + t*(x^4)^(1/3))"
# same right-hand side with the factor t dropped and x replaced by the weighted value t^(1/4) x
EXAMPLE_RHS_REDUCED = "t^(-1/3)*(1 + ((t^(1/4)*x)^4)^(1/3))"
EXAMPLE_CLAIMED_L = 0.4


def _fmt(v: float) -> str:
    return f"{v:.16e}"


def _write_atomic(path: Path, rows: list[list], header: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_solution_csv(sol: Solution, path: Path) -> None:
    rows = [[_fmt(t), _fmt(y), _fmt(x)] for t, y, x in zip(sol.t, sol.y, sol.x)]
    _write_atomic(path, rows, ["t", "y", "x"])


def write_iterations_csv(report: IterationReport, path: Path) -> None:
    rows = [
        [r.n, _fmt(r.d), _fmt(r.u), _fmt(r.ratio), _fmt(r.tail), _fmt(r.excursion)]
        for r in report.records
    ]
    _write_atomic(path, rows, ["n", "d_n", "u_n", "ratio", "tail_bound", "excursion"])


def _summary(problem: Problem, status: str, sol: Solution | None = None, **extra) -> dict:
    out = {
        "status": status,
        "rhs": problem.rhs_text,
        "gamma": problem.gamma_w,
        "mu": problem.mu,
    }
    if sol is not None:
        out.update(
            M=sol.hypotheses.M,
            M_source=sol.hypotheses.M_source,
            A=sol.hypotheses.A,
            A_source=sol.hypotheses.A_source,
            l_formula=sol.l_formula,
            l=sol.l_used,
            residual_sup=sol.residual_sup,
            iterations=sol.report.iterations,
            notes=sol.notes,
        )
    out.update(extra)
    return out


def _write_summary(summary: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, path)


def _print_summary(summary: dict) -> None:
    for key in ("status", "rhs", "gamma", "mu", "M", "A", "l_formula", "l", "residual_sup", "iterations", "wall_time"):
        if key in summary:
            value = summary[key]
            text = f"{value:.10g}" if isinstance(value, float) else str(value)
            print(f"{key:>13} = {text}")
    for note in summary.get("notes", []):
        print(f"         note: {note}")


def run_solve(cfg: RunConfig, out_dir: Path | None) -> tuple[int, Solution | None, dict]:
    """Solve one configured problem and write its outputs; returns (exit code, solution, summary)."""
    p = cfg.problem
    start = time.perf_counter()
    sol = None
    try:
        sol = solve(p, cfg.solver, M=cfg.M, A=cfg.A)
        code, status = EXIT_OK, "converged"
        summary = _summary(p, status, sol)
    except NonConvergenceError as exc:
        code, status = EXIT_NONCONVERGENCE, "no-convergence"
        summary = _summary(p, status, error=str(exc))
        if out_dir is not None and exc.report is not None:
            write_iterations_csv(exc.report, out_dir / "iterations.csv")
    except ConfinementError as exc:
        code, status = EXIT_CONFINEMENT, "left-tube"
        summary = _summary(p, status, error=str(exc), t=exc.t, iteration=exc.iteration)
    except ExprDomainError as exc:
        code, status = EXIT_DOMAIN, "rhs-domain-error"
        summary = _summary(p, status, error=str(exc))
    summary["wall_time"] = time.perf_counter() - start
    if out_dir is not None:
        if sol is not None:
            write_solution_csv(sol, out_dir / "solution.csv")
            write_iterations_csv(sol.report, out_dir / "iterations.csv")
        _write_summary(summary, out_dir / "summary.json")
    return code, sol, summary


def cmd_solve(config: str, output: str | None = None) -> int:
    cfg = load_config(config)
    out_dir = Path(output or cfg.output_dir or ".")
    code, _, summary = run_solve(cfg, out_dir)
    _print_summary(summary)
    if "error" in summary:
        print(f"error: {summary['error']}", file=sys.stderr)
    print(f"outputs written to {out_dir}")
    return code


def example_report(refine: bool = True) -> dict:
    """Constants and solves for the built-in example problem."""
    p = Problem(rhs=EXAMPLE_RHS, **EXAMPLE_PROBLEM)
    reduced = Problem(rhs=EXAMPLE_RHS_REDUCED, **EXAMPLE_PROBLEM)
    M_reduced = estimate_M(reduced)
    M_full = estimate_M(p)
    l_reduced = compute_l(p, M_reduced)
    report = {
        "problem": p,
        "tube": p.tube,
        "M_reduced": M_reduced,
        "M_closed_form": 1.0 + 11.0 ** (4.0 / 3.0),
        "M_full": M_full,
        "l": l_reduced,
        "l_full": compute_l(p, M_full),
        "A": estimate_A(p, t_max=l_reduced),
        "claimed_l": EXAMPLE_CLAIMED_L,
        "solutions": [],
    }
    levels = [(256, 64), (512, 128)] if refine else [(256, 64)]
    for N, Q in levels:
        sol = solve(p, SolverConfig(N=N, Q=Q, tol=1e-12), M=M_reduced)
        report["solutions"].append(sol)
    return report


def cmd_example(refine: bool = True, output: str | None = None) -> int:
    rep = example_report(refine)
    p = rep["problem"]
    lo, hi = rep["tube"]
    print("D^{1/2,1/2} x(t) = t^(-1/3) [1 + t x(t)^(4/3)],  t^(1/4) x(t) -> 3,  h = 10, b = 8")
    print(f"  gamma = {p.gamma_w:g}, mu = {p.mu:g}, k = {p.k:.10g}, 1/(mu+k) = {1.0 / (p.mu + p.k):.10g}")
    print(f"  E = [{lo:g}, {hi:g}]")
    print(f"  M (t-factor dropped, max of 1 + y^(4/3) at y = {hi:g}) = {rep['M_reduced']:.10g}"
          f"   [1 + 11^(4/3) = {rep['M_closed_form']:.10g}]")
    print(f"  M (full t-dependence, sampled over (0, h] x E)    = {rep['M_full']:.10g}")
    print(f"  l from the interval formula with M = {rep['M_reduced']:.4f}: {rep['l']:.10g}")
    print(f"  l from the interval formula with M = {rep['M_full']:.4f}: {rep['l_full']:.10g}")
    print(f"  note: the published value l ~ {rep['claimed_l']} is NOT reproduced by the formula"
          f" (ratio {rep['claimed_l'] / rep['l']:.3g})")
    print(f"  A (sampled over (0, l] x E) = {rep['A']:.10g}")
    prev = None
    ok = True
    for sol in rep["solutions"]:
        cfg = sol.config
        print(f"  solve N={cfg.N} Q={cfg.Q}: {sol.report.iterations} iterations, "
              f"integral residual {sol.residual_sup:.3e}, y(l) = {sol.y[-1]:.12g}")
        ok &= sol.report.converged and sol.residual_sup <= 1e-4
        if prev is not None:
            decreased = sol.residual_sup < prev
            print(f"  residual decreased under refinement: {'yes' if decreased else 'NO'}")
            ok &= decreased
        prev = sol.residual_sup
    if output:
        out_dir = Path(output)
        base = rep["solutions"][0]
        write_solution_csv(base, out_dir / "solution.csv")
        write_iterations_csv(base.report, out_dir / "iterations.csv")
    return EXIT_OK if ok else EXIT_NONCONVERGENCE


def cmd_verify(selector: str = "all") -> int:
    results = checks.run_suite(selector)
    print(checks.format_table(results))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else 1


SWEEP_AXES = ("N", "Q", "alpha")


def run_sweep(cfg: RunConfig, axis: str, values: list[float]) -> list[dict]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    rows = []
    sols = []
    for value in values:
        if axis == "alpha":
            try:
                run_cfg = dataclasses.replace(cfg, problem=dataclasses.replace(cfg.problem, alpha=float(value)))
            except ValueError as exc:
                rows.append(dict(value=value, status=f"invalid: {exc}"))
                sols.append(None)
                continue
        else:
            run_cfg = with_numerics(cfg, **{axis: int(value)})
        try:
            code, sol, summary = run_solve(run_cfg, None)
        except ValueError as exc:
            code, sol, summary = EXIT_CONFIG, None, {"status": f"invalid: {exc}"}
        rows.append(
            dict(
                value=value,
                status=summary["status"],
                iterations=summary.get("iterations", ""),
                residual_sup=summary.get("residual_sup", math.nan),
                wall_time=summary["wall_time"] if "wall_time" in summary else math.nan,
            )
        )
        sols.append(sol)

    good = [s for s in sols if s is not None]
    if axis != "alpha" and good:
        finest = max(good, key=lambda s: (s.config.N, s.config.Q))
        coarse = min(good, key=lambda s: s.config.N)
        probe = coarse.t
        ref = finest.weighted(probe)
        for row, sol in zip(rows, sols):
            row["sup_change"] = float(np.max(np.abs(sol.weighted(probe) - ref))) if sol is not None else math.nan
    else:
        for row in rows:
            row["sup_change"] = math.nan
    return rows


def cmd_sweep(config: str, axis: str, values: list[float], output: str | None = None) -> int:
    cfg = load_config(config)
    rows = run_sweep(cfg, axis, values)
    out_dir = Path(output or cfg.output_dir or ".")
    header = ["parameter", "value", "status", "iterations", "residual_sup", "sup_change_vs_finest", "wall_time"]
    csv_rows = [
        [axis, repr(r["value"]), r["status"], r.get("iterations", ""), _fmt(r.get("residual_sup", math.nan)),
         _fmt(r["sup_change"]), _fmt(r.get("wall_time", math.nan))]
        for r in rows
    ]
    _write_atomic(out_dir / "sweep.csv", csv_rows, header)
    for line in [header] + csv_rows:
        print(",".join(str(c) for c in line))
    return EXIT_OK if all(r["status"] == "converged" for r in rows) else EXIT_NONCONVERGENCE


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1: code 2 is reserved for non-convergence
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hilfer-picard", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve a configured problem")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="output directory (default: config [output] dir or .)")

    e = sub.add_parser("example", help="reproduce the built-in singular example")
    e.add_argument("--no-refine", action="store_true", help="skip the refined (N, Q doubled) solve")
    e.add_argument("-o", "--output", help="also write CSVs of the base solve here")

    v = sub.add_parser("verify", help="run self-check suites")
    v.add_argument("selector", nargs="?", default="all", choices=["all", *checks.SUITES])

    w = sub.add_parser("sweep", help="convergence study over one parameter")
    w.add_argument("config")
    w.add_argument("--axis", required=True, choices=SWEEP_AXES)
    w.add_argument("--values", required=True, type=_values)
    w.add_argument("-o", "--output")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.output)
        if args.command == "example":
            return cmd_example(refine=not args.no_refine, output=args.output)
        if args.command == "verify":
            return cmd_verify(args.selector)
        return cmd_sweep(args.config, args.axis, args.values, args.output)
    except (ConfigError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN if isinstance(exc, ExprDomainError) else EXIT_CONFIG
    except ConfinementError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFINEMENT
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
