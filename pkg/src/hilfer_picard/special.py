"""Gamma, Beta and Mittag-Leffler functions on the positive reals."""

from __future__ import annotations

import math

import numpy as np

from .errors import NonConvergenceError

__all__ = [
    "log_gamma",
    "gamma",
    "log_beta",
    "beta",
    "gamma_limit",
    "log_gamma_limit",
    "mittag_leffler2",
]


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return value


def log_gamma(x: float) -> float:
    """Natural logarithm of the Gamma function for ``x > 0``."""
    return math.lgamma(_check_positive("x", x))


def gamma(x: float) -> float:
    return math.exp(log_gamma(x))


def log_beta(x: float, y: float) -> float:
    x = _check_positive("x", x)
    y = _check_positive("y", y)
    # sum ordered so that log_beta(x, y) == log_beta(y, x) bit for bit
    lo, hi = (x, y) if x <= y else (y, x)
    return (math.lgamma(lo) + math.lgamma(hi)) - math.lgamma(x + y)


def beta(x: float, y: float) -> float:
    r"""Euler Beta function :math:`B(x, y) = \Gamma(x)\Gamma(y)/\Gamma(x+y)`."""
    return math.exp(log_beta(x, y))


def log_gamma_limit(x: float, m: int) -> float:
    """Logarithm of the m-th Gauss product ``m^x m! / (x (x+1) ... (x+m))``.

    Rewritten as ``x ln m - ln x - sum_{i=1}^m log1p(x/i)`` so nothing
    overflows and no Gamma evaluation is involved.
    """
    x = _check_positive("x", x)
    m = int(m)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    i = np.arange(1, m + 1, dtype=float)
    return x * math.log(m) - math.log(x) - math.fsum(np.log1p(x / i))


def gamma_limit(x: float, m: int) -> float:
    """Gauss product approximation of Gamma(x); converges like O(1/m)."""
    return math.exp(log_gamma_limit(x, m))


def mittag_leffler2(
    alpha: float,
    beta_param: float,
    z: float,
    tol: float = 1e-15,
    max_terms: int = 10_000,
) -> float:
    r"""Two-parameter Mittag-Leffler function by direct power series.

    .. math:: E_{\alpha,\beta}(z) = \sum_{j \ge 0} \frac{z^j}{\Gamma(\alpha j + \beta)}

    Summation stops before term ``j`` once the whole remaining tail is below
    ``tol / 4``. The term ratio ``|z| Gamma(alpha j + beta) / Gamma(alpha j +
    alpha + beta)`` decreases in ``j`` (log-convexity of Gamma), so once it
    drops below 1 the tail is bounded by a geometric series. Only meant for
    moderate ``|z|``.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    _check_positive("beta_param", beta_param)
    _check_positive("tol", tol)
    z = float(z)
    if z == 0.0:
        return math.exp(-math.lgamma(beta_param))

    log_abs_z = math.log(abs(z))
    log_stop = math.log(tol / 4.0)
    negative = z < 0.0
    terms = []
    for j in range(max_terms):
        log_term = j * log_abs_z - math.lgamma(alpha * j + beta_param)
        log_ratio = log_abs_z + math.lgamma(alpha * j + beta_param) - math.lgamma(alpha * (j + 1) + beta_param)
        if log_ratio < 0.0 and log_term - math.log1p(-math.exp(log_ratio)) < log_stop:
            return math.fsum(terms)
        term = math.exp(log_term)
        terms.append(-term if (negative and j % 2) else term)
    raise NonConvergenceError(
        f"Mittag-Leffler series did not reach tol={tol} within {max_terms} terms (z={z})"
    )
