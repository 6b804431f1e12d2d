r"""Picard successive approximation for singular Hilfer initial value problems.

The problem

.. math::

    D_{a^+}^{\alpha,\beta} x(t) = f(t, x(t)),\qquad
    \lim_{t\to a^+} (t-a)^{1-\gamma} x(t) = x_0,\qquad
    \gamma = \alpha + \beta(1-\alpha),

is solved through its Volterra form
:math:`x(t) = x_0 (t-a)^{\gamma-1} + I_{a^+}^\alpha f(\cdot, x)(t)`.
All iterates are stored in the weighted variable
:math:`y(t) = (t-a)^{1-\gamma} x(t)`, which stays bounded at ``t = a``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfinementError, DegenerateLipschitzError, NonConvergenceError
from .expr import Expr, compile_expr, evaluate, to_source
from .quadrature import KernelQuadrature, Mesh, interp_eval, make_mesh
from .special import log_beta, log_gamma

log = logging.getLogger(__name__)

__all__ = [
    "Problem",
    "DerivedParams",
    "Hypotheses",
    "SolverConfig",
    "WeightedIterate",
    "IterationRecord",
    "IterationReport",
    "Solution",
    "derive_params",
    "weighted_rhs",
    "estimate_M",
    "estimate_A",
    "compute_l",
    "phi0",
    "picard_step",
    "bound_u0",
    "bound_u",
    "ratio_u",
    "tail_bound",
    "solve",
]

#: relative slack on the tube radius, absorbs rounding when a bound is attained exactly
CONFINEMENT_SLACK = 1e-10
INTERP_ORDER = 3


@dataclass(frozen=True)
class Problem:
    """Initial value problem data.

    ``rhs`` may be given as source text; it is parsed on construction.
    ``h`` bounds the time horizon and ``b`` the radius of the tube
    ``|y - x0| <= b`` in which ``|f(t, (t-a)^(gamma-1) y)| <= M (t-a)^k``
    is assumed to hold.
    """

    a: float
    alpha: float
    beta_type: float
    x0: float
    h: float
    b: float
    k: float
    rhs: Expr

    def __post_init__(self) -> None:
        if isinstance(self.rhs, str):
            object.__setattr__(self, "rhs", compile_expr(self.rhs))
        for name in ("a", "alpha", "beta_type", "x0", "h", "b", "k"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 <= self.beta_type <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta_type!r}")
        if not self.h > 0.0:
            raise ValueError(f"h must be positive, got {self.h!r}")
        if not self.b > 0.0:
            raise ValueError(f"b must be positive, got {self.b!r}")
        if not self.mu + self.k > 0.0:
            raise ValueError(
                f"k = {self.k!r} must exceed beta(1-alpha) - 1 = {-self.mu!r}"
            )

    @property
    def gamma_w(self) -> float:
        return self.alpha + self.beta_type * (1.0 - self.alpha)

    @property
    def mu(self) -> float:
        return 1.0 - self.beta_type * (1.0 - self.alpha)

    @property
    def rhs_text(self) -> str:
        return to_source(self.rhs)

    @property
    def tube(self) -> tuple[float, float]:
        """Range ``[x0 - b, x0 + b]`` of admissible weighted values."""
        return (self.x0 - self.b, self.x0 + self.b)


class DerivedParams(NamedTuple):
    gamma_w: float
    mu: float


def derive_params(p: Problem) -> DerivedParams:
    return DerivedParams(p.gamma_w, p.mu)


@dataclass(frozen=True)
class Hypotheses:
    """Growth bound ``M`` and Lipschitz constant ``A`` with their provenance."""

    M: float
    A: float
    M_source: str = "user"
    A_source: str = "user"


@dataclass(frozen=True)
class SolverConfig:
    N: int = 128
    r: float = 2.0
    Q: int = 32
    tol: float = 1e-10
    max_iter: int = 500
    l_override: float | None = None
    n_t: int = 201
    n_x: int = 201

    def __post_init__(self) -> None:
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.Q < 1:
            raise ValueError("Q must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.l_override is not None and not self.l_override > 0:
            raise ValueError("l_override must be positive")


@dataclass(frozen=True, eq=False)
class WeightedIterate:
    """Mesh values ``y_j = (t_j - a)^(1-gamma) phi_n(t_j)`` of the n-th iterate."""

    mesh: Mesh
    y: np.ndarray = field(repr=False)
    n: int = 0

    def __call__(self, s):
        return interp_eval(self.mesh, self.y, s, order=INTERP_ORDER)


@dataclass(frozen=True)
class IterationRecord:
    n: int
    d: float  # sup_j |y^(n)_j - y^(n-1)_j|
    u: float  # a-priori bound on d
    ratio: float  # u_{n+1} / u_n
    tail: float  # a-priori bound on sup |y_inf - y^(n)|
    excursion: float  # sup_j |y^(n)_j - x0|
    seconds: float


@dataclass
class IterationReport:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    status: str = "running"

    @property
    def iterations(self) -> int:
        return len(self.records)


@dataclass(eq=False)
class Solution:
    problem: Problem
    hypotheses: Hypotheses
    config: SolverConfig
    l_formula: float
    l_used: float
    mesh: Mesh
    y: np.ndarray = field(repr=False)
    report: IterationReport
    residual_sup: float = math.nan
    notes: list[str] = field(default_factory=list)
    history: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.mesh.points)

    @property
    def x(self) -> np.ndarray:
        """Reconstructed ``x(t_j)``; undefined (nan) at ``t_0 = a`` unless gamma = 1."""
        p = self.problem
        out = np.full_like(self.y, np.nan)
        tt = self.t
        out[1:] = (tt[1:] - p.a) ** (p.gamma_w - 1.0) * self.y[1:]
        if p.gamma_w == 1.0:
            out[0] = self.y[0]
        return out

    def weighted(self, s):
        return interp_eval(self.mesh, self.y, s, order=INTERP_ORDER)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return (s - self.problem.a) ** (self.problem.gamma_w - 1.0) * self.weighted(s)


def weighted_rhs(p: Problem, s, y):
    """``(s-a)^(-k) f(s, (s-a)^(gamma-1) y)``: the bounded integrand for ``s > a``."""
    s = np.asarray(s, dtype=float)
    d = s - p.a
    return d ** (-p.k) * evaluate(p.rhs, s, d ** (p.gamma_w - 1.0) * np.asarray(y, dtype=float))


def _sample_grid(p: Problem, n_t: int, n_x: int, t_max: float | None):
    span = p.h if t_max is None else float(t_max)
    if not span > 0:
        raise ValueError("sampling interval must have positive length")
    t = p.a + span * np.arange(1, n_t + 1) / n_t
    xh = np.linspace(p.x0 - p.b, p.x0 + p.b, n_x)
    return t[:, None], xh[None, :]


def estimate_M(p: Problem, n_t: int = 201, n_x: int = 201, t_max: float | None = None) -> float:
    """Sampled growth constant: max of ``(t-a)^(-k) |f(t, (t-a)^(gamma-1) y)|``.

    ``t`` runs over ``n_t`` points of ``(a, a + h]`` (or ``(a, a + t_max]``),
    ``y`` over ``n_x`` points of ``[x0 - b, x0 + b]``. A sampled maximum is a
    lower bound on the true supremum.
    """
    t, xh = _sample_grid(p, n_t, n_x, t_max)
    return float(np.max(np.abs(weighted_rhs(p, t, xh))))


def estimate_A(p: Problem, n_t: int = 201, n_x: int = 201, t_max: float | None = None) -> float:
    """Sampled Lipschitz constant of ``y -> (t-a)^(-k) f(t, (t-a)^(gamma-1) y)``.

    Only neighbouring grid values are differenced: any wider difference
    quotient is a weighted mean of neighbouring ones, so the maximum over all
    pairs is the same.
    """
    if n_x < 2:
        raise ValueError("need at least two x samples")
    t, xh = _sample_grid(p, n_t, n_x, t_max)
    g = weighted_rhs(p, t, xh)
    slopes = np.abs(np.diff(g, axis=1)) / np.diff(xh, axis=1)
    A = float(np.max(slopes))
    if not A > 0.0:
        raise DegenerateLipschitzError(
            "sampled Lipschitz constant is 0: the right-hand side does not depend on x"
        )
    return A


def compute_l(p: Problem, M: float) -> float:
    """Length of the guaranteed existence interval.

    ``min(h, (b Gamma(alpha) / (M B(alpha, k+1)))^(1/(mu+k)))``; ``h`` when ``M = 0``.
    """
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M!r}")
    if M == 0:
        return p.h
    log_base = math.log(p.b) + log_gamma(p.alpha) - math.log(M) - log_beta(p.alpha, p.k + 1.0)
    return min(p.h, math.exp(log_base / (p.mu + p.k)))


def phi0(p: Problem, mesh: Mesh) -> WeightedIterate:
    return WeightedIterate(mesh, np.full(mesh.N + 1, p.x0), 0)


def picard_step(p: Problem, prev: WeightedIterate, quad: KernelQuadrature) -> WeightedIterate:
    """One application of the Volterra operator in the weighted variable.

    ``y_j = x0 + (t_j-a)^(1-gamma) / Gamma(alpha) * int_a^{t_j} (t_j-s)^(alpha-1) f(s, x(s)) ds``
    with ``x(s)`` rebuilt from ``prev`` between mesh points. Raises
    :class:`ConfinementError` if the new iterate leaves ``|y - x0| <= b``.
    """
    mesh = prev.mesh
    if quad.mesh is not mesh:
        raise ValueError("quadrature was built for a different mesh")
    if abs(quad.alpha - p.alpha) > 1e-14 or abs(quad.k - p.k) > 1e-14:
        raise ValueError("quadrature exponents do not match (alpha, k)")
    s = quad.nodes
    g = weighted_rhs(p, s, prev(s))
    integrals = quad.apply(g)

    t = np.asarray(mesh.points)
    y = np.empty_like(prev.y)
    y[0] = p.x0
    scale = (t[1:] - p.a) ** (1.0 - p.gamma_w) * math.exp(-log_gamma(p.alpha))
    y[1:] = p.x0 + scale * integrals[1:]

    dev = np.abs(y - p.x0)
    j = int(np.argmax(dev))
    if dev[j] > p.b * (1.0 + CONFINEMENT_SLACK):
        raise ConfinementError(float(t[j]), float(dev[j]), p.b, prev.n + 1)
    return WeightedIterate(mesh, y, prev.n + 1)


# --- a-priori bounds --------------------------------------------------------


def bound_u0(p: Problem, M: float, l: float) -> float:
    """Bound on ``sup |y_1 - y_0|``: ``M l^(mu+k) B(alpha, k+1) / Gamma(alpha)``."""
    if M == 0:
        return 0.0
    expo = p.alpha + p.k + 1.0 - p.gamma_w
    return math.exp(
        math.log(M) + expo * math.log(l) + log_beta(p.alpha, p.k + 1.0) - log_gamma(p.alpha)
    )


def _log_bound_u(p: Problem, M: float, A: float, l: float, n: int) -> float:
    expo = p.alpha + p.k + 1.0 - p.gamma_w
    lg_alpha = log_gamma(p.alpha)
    total = (n + 1) * math.log(A) + math.log(M) + (n + 2) * expo * math.log(l)
    for i in range(n + 2):
        total += log_beta(p.alpha, (i + 1) * p.k + i * (p.alpha + 1.0 - p.gamma_w) + 1.0) - lg_alpha
    return total


def bound_u(p: Problem, M: float, A: float, l: float, n: int) -> float:
    r"""A-priori bound on ``sup |y_{n+2} - y_{n+1}|``.

    .. math::

        A^{n+1} M l^{(n+2)(\alpha+k+1-\gamma)}
        \prod_{i=0}^{n+1} \frac{B(\alpha, (i+1)k + i(\alpha+1-\gamma) + 1)}{\Gamma(\alpha)}

    accumulated in log space.
    """
    if n < 0:
        raise ValueError("n must be >= 0; use bound_u0 for the first difference")
    if A == 0 or M == 0:
        return 0.0
    return math.exp(_log_bound_u(p, M, A, l, n))


def _ratio_args(p: Problem, n: int) -> tuple[float, float]:
    num = (n + 3) * p.k + (n + 2) * (p.alpha + 1.0 - p.gamma_w) + 1.0
    den = (n + 3) * (p.k + p.alpha) + (n + 2) * (1.0 - p.gamma_w) + 1.0
    if not (num > 0 and den > 0):
        raise ValueError(f"non-positive Gamma argument in bound ratio at n={n}: {num}, {den}")
    return num, den


def ratio_u(p: Problem, A: float, l: float, n: int) -> float:
    """``bound_u(n+1) / bound_u(n)`` in closed form.

    ``A l^(alpha+k+1-gamma) Gamma(z) / Gamma(z + alpha)`` with
    ``z = (n+3)k + (n+2)(alpha+1-gamma) + 1``; tends to 0 as ``n`` grows.
    """
    num, den = _ratio_args(p, n)
    if A == 0:
        return 0.0
    expo = p.alpha + p.k + 1.0 - p.gamma_w
    return math.exp(math.log(A) + expo * math.log(l) + log_gamma(num) - log_gamma(den))


def tail_bound(p: Problem, M: float, A: float, l: float, n: int, max_terms: int = 100_000) -> float:
    """Bound on ``sum_{m >= n} bound_u(m)``.

    Terms are added until the ratio drops below 1/2; the remainder is then
    bounded geometrically (the ratio is decreasing in ``m``).
    """
    if A == 0 or M == 0:
        return 0.0
    log_u = _log_bound_u(p, M, A, l, n)
    total = 0.0
    for m in range(n, n + max_terms):
        if log_u > 700.0:
            return math.inf
        u = math.exp(log_u)
        total += u
        r = ratio_u(p, A, l, m)
        if r < 0.5:
            return total + u * r / (1.0 - r)
        log_u += math.log(r)
    return math.inf


# --- driver -----------------------------------------------------------------


def _resolve_constants(p: Problem, cfg: SolverConfig, M, A) -> tuple[Hypotheses, float, float, list[str]]:
    notes = []
    if M is None:
        M = estimate_M(p, cfg.n_t, cfg.n_x)
        M_source = "sampled-estimate"
        notes.append("M is a sampled maximum over (a, a+h] x E, i.e. a lower bound on the true supremum")
    else:
        M_source = "user"
    if M < 0:
        raise ValueError(f"M must be >= 0, got {M!r}")
    l_formula = compute_l(p, M)
    l_used = l_formula
    if cfg.l_override is not None:
        if cfg.l_override > l_formula * (1.0 + 1e-12):
            raise ValueError(
                f"l_override = {cfg.l_override!r} exceeds the existence interval l = {l_formula!r}"
            )
        l_used = float(cfg.l_override)
    if A is None:
        try:
            A = estimate_A(p, cfg.n_t, cfg.n_x, t_max=l_used)
            A_source = "sampled-estimate"
            notes.append("A is a sampled difference quotient over (a, a+l] x E, i.e. a lower bound")
        except DegenerateLipschitzError:
            A = 0.0
            A_source = "degenerate"
            notes.append("right-hand side independent of x: solved as a single fractional integral")
    else:
        A_source = "user"
        if not A > 0:
            raise ValueError(f"A must be > 0, got {A!r}")
    return Hypotheses(float(M), float(A), M_source, A_source), l_formula, l_used, notes


def solve(
    p: Problem,
    cfg: SolverConfig | None = None,
    M: float | None = None,
    A: float | None = None,
    *,
    keep_history: bool = False,
    verify: bool = True,
) -> Solution:
    """Iterate the Picard map from ``phi_0`` until it has provably settled.

    Stops once both the observed change ``d_n`` and the a-priori tail bound
    on ``sup |y_inf - y_n|`` are at most ``cfg.tol``. ``M`` and ``A`` are
    sampled from the right-hand side when not given; ``A`` is sampled over
    ``(a, a+l]`` only, where the Lipschitz hypothesis is needed.
    """
    cfg = cfg or SolverConfig()
    hyp, l_formula, l_used, notes = _resolve_constants(p, cfg, M, A)
    M, A = hyp.M, hyp.A
    mesh = make_mesh(p.a, l_used, cfg.N, cfg.r)
    quad = KernelQuadrature(mesh, p.alpha, p.k, cfg.Q)

    report = IterationReport()
    it = phi0(p, mesh)
    history = [it.y.copy()] if keep_history else None
    degenerate = A == 0.0
    for n in range(1, cfg.max_iter + 1):
        t0 = time.perf_counter()
        nxt = picard_step(p, it, quad)
        d = float(np.max(np.abs(nxt.y - it.y)))
        if n == 1:
            u = bound_u0(p, M, l_used)
            u_next = bound_u(p, M, A, l_used, 0)
            ratio = u_next / u if u > 0 else 0.0
        else:
            u = bound_u(p, M, A, l_used, n - 2)
            ratio = ratio_u(p, A, l_used, n - 2)
        tail = 0.0 if degenerate else tail_bound(p, M, A, l_used, n - 1)
        excursion = float(np.max(np.abs(nxt.y - p.x0)))
        report.records.append(
            IterationRecord(n, d, u, ratio, tail, excursion, time.perf_counter() - t0)
        )
        log.debug("iteration %d: d=%.3e u=%.3e tail=%.3e", n, d, u, tail)
        it = nxt
        if history is not None:
            history.append(it.y.copy())
        if degenerate or (d <= cfg.tol and tail <= cfg.tol):
            report.converged = True
            report.status = "converged"
            break
    else:
        report.status = "max_iter"
        raise NonConvergenceError(
            f"no convergence within {cfg.max_iter} iterations "
            f"(last d={report.records[-1].d:.3e}, tail bound={report.records[-1].tail:.3e})",
            report,
        )

    sol = Solution(
        problem=p,
        hypotheses=hyp,
        config=cfg,
        l_formula=l_formula,
        l_used=l_used,
        mesh=mesh,
        y=it.y,
        report=report,
        notes=notes,
        history=history,
    )
    if verify:
        from .operators import integral_residual

        sol.residual_sup = integral_residual(p, sol)
    return sol
