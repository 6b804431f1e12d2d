"""Run configuration files.

INI-style sections with ``key = value`` lines::

    [problem]
    a = 0
    alpha = 0.5
    beta = 0.5
    x0 = 3
    h = 10
    b = 8
    k = -1/3
    rhs = t^(-1/3)*(1 + t*(x^4)^(1/3))

    [hypotheses]      # optional; missing constants are sampled
    M = 25.46

    [numerics]        # optional
    N = 256
    Q = 64
    tol = 1e-12

    [output]          # optional
    dir = out

Numeric values may be simple constant expressions such as ``-1/3``.
Unknown sections and keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ExprError
from .expr import compile_expr, evaluate
from .picard import Problem, SolverConfig

__all__ = ["RunConfig", "load_config", "parse_config", "dump_config"]

_PROBLEM_KEYS = {"a", "alpha", "beta", "x0", "h", "b", "k", "rhs"}
_HYP_KEYS = {"m", "a"}
_NUMERIC_KEYS = {
    "n": ("N", int),
    "r": ("r", float),
    "q": ("Q", int),
    "tol": ("tol", float),
    "max_iter": ("max_iter", int),
    "l_override": ("l_override", float),
    "n_t": ("n_t", int),
    "n_x": ("n_x", int),
}
_OUTPUT_KEYS = {"dir"}
_SECTIONS = {"problem", "hypotheses", "numerics", "output"}


@dataclass(frozen=True)
class RunConfig:
    problem: Problem
    solver: SolverConfig
    M: float | None = None
    A: float | None = None
    output_dir: str | None = None


def _number(section: str, key: str, raw: str) -> float:
    # constant expressions only: any use of t or x evaluates to a different
    # value at the two probe points below
    try:
        e = compile_expr(raw)
        v0 = evaluate(e, 0.5, 0.5)
        v1 = evaluate(e, 0.25, 0.75)
    except ExprError as exc:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as a number: {exc}") from exc
    if v0 != v1 or not math.isfinite(v0):
        raise ConfigError(f"[{section}] {key}: {raw!r} is not a finite constant")
    return float(v0)


def _integer(section: str, key: str, raw: str) -> int:
    value = _number(section, key, raw)
    if value != int(value):
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}")
    return int(value)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), empty_lines_in_values=False
    )
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ConfigError(f"{source}: unknown section(s): {', '.join(sorted(unknown))}")
    if not cp.has_section("problem"):
        raise ConfigError(f"{source}: missing [problem] section")

    def keys(section: str, allowed: set[str]) -> dict[str, str]:
        if not cp.has_section(section):
            return {}
        items = dict(cp.items(section))
        bad = set(items) - allowed
        if bad:
            raise ConfigError(f"{source}: [{section}] unknown key(s): {', '.join(sorted(bad))}")
        return items

    prob = keys("problem", _PROBLEM_KEYS)
    missing = _PROBLEM_KEYS - set(prob)
    if missing:
        raise ConfigError(f"{source}: [problem] missing key(s): {', '.join(sorted(missing))}")
    try:
        rhs = compile_expr(prob["rhs"])
    except ExprError as exc:
        raise ConfigError(f"{source}: [problem] rhs: {exc}") from exc
    values = {key: _number("problem", key, prob[key]) for key in _PROBLEM_KEYS - {"rhs"}}
    try:
        problem = Problem(
            a=values["a"],
            alpha=values["alpha"],
            beta_type=values["beta"],
            x0=values["x0"],
            h=values["h"],
            b=values["b"],
            k=values["k"],
            rhs=rhs,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: [problem] {exc}") from exc

    hyp = keys("hypotheses", _HYP_KEYS)
    M = _number("hypotheses", "M", hyp["m"]) if "m" in hyp else None
    A = _number("hypotheses", "A", hyp["a"]) if "a" in hyp else None

    num = keys("numerics", set(_NUMERIC_KEYS))
    solver_kwargs = {}
    for key, raw in num.items():
        field_name, kind = _NUMERIC_KEYS[key]
        solver_kwargs[field_name] = _integer("numerics", key, raw) if kind is int else _number("numerics", key, raw)
    try:
        solver = SolverConfig(**solver_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{source}: [numerics] {exc}") from exc

    out = keys("output", _OUTPUT_KEYS)
    return RunConfig(problem, solver, M, A, out.get("dir"))


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def dump_config(cfg: RunConfig) -> str:
    """Render ``cfg`` back to config-file text (17 significant digits)."""
    p = cfg.problem
    fmt = lambda v: repr(float(v))  # noqa: E731
    lines = [
        "[problem]",
        f"a = {fmt(p.a)}",
        f"alpha = {fmt(p.alpha)}",
        f"beta = {fmt(p.beta_type)}",
        f"x0 = {fmt(p.x0)}",
        f"h = {fmt(p.h)}",
        f"b = {fmt(p.b)}",
        f"k = {fmt(p.k)}",
        f"rhs = {p.rhs_text}",
    ]
    if cfg.M is not None or cfg.A is not None:
        lines.append("\n[hypotheses]")
        if cfg.M is not None:
            lines.append(f"M = {fmt(cfg.M)}")
        if cfg.A is not None:
            lines.append(f"A = {fmt(cfg.A)}")
    lines.append("\n[numerics]")
    for key, (field_name, _) in _NUMERIC_KEYS.items():
        value = getattr(cfg.solver, field_name)
        if value is not None:
            lines.append(f"{key} = {value!r}")
    if cfg.output_dir:
        lines.append(f"\n[output]\ndir = {cfg.output_dir}")
    return "\n".join(lines) + "\n"


def with_numerics(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, **changes))
