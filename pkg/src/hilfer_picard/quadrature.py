r"""Gauss-Jacobi rules and weakly singular fractional integrals.

Every fractional integral in the package has the form

.. math:: \int_a^t (t-s)^{\alpha-1} (s-a)^k g(s)\,ds

with bounded ``g``. After ``s = a + (t-a)u`` both endpoint singularities become
the Jacobi weight :math:`(1-u)^{\alpha-1}u^k` on ``[0, 1]``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .special import log_beta

__all__ = [
    "JacobiRule",
    "Mesh",
    "KernelQuadrature",
    "jacobi_rule",
    "frac_integral_weighted",
    "make_mesh",
    "interp_eval",
    "thread_count",
]

_EXPONENT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class JacobiRule:
    """Gauss rule for the weight ``(1-u)^p u^q`` on ``[0, 1]``."""

    p: float
    q: float
    n_nodes: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, g(self.nodes)))


def _recurrence(p: float, q: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Monic Jacobi recurrence on [-1, 1] for (1-x)^p (1+x)^q, then mapped to [0, 1].
    k = np.arange(n, dtype=float)
    s = 2.0 * k + p + q
    diag = np.empty(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag[:] = (q * q - p * p) / (s * (s + 2.0))
    diag[0] = (q - p) / (p + q + 2.0)

    j = np.arange(1, n, dtype=float)
    sj = 2.0 * j + p + q
    off2 = np.empty(n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        off2[:] = 4.0 * j * (j + p) * (j + q) * (j + p + q) / (sj * sj * (sj + 1.0) * (sj - 1.0))
    if n > 1:
        # j = 1 has a removable 0/0 when p + q = -1
        off2[0] = 4.0 * (1.0 + p) * (1.0 + q) / ((2.0 + p + q) ** 2 * (3.0 + p + q))
    return 0.5 * (1.0 + diag), 0.5 * np.sqrt(off2)


@lru_cache(maxsize=256)
def _jacobi_rule_cached(p: float, q: float, n: int) -> JacobiRule:
    d, e = _recurrence(p, q, n)
    if n == 1:
        nodes = d.copy()
        vecs = np.ones((1, 1))
    else:
        nodes, vecs = eigh_tridiagonal(d, e)
    weights = math.exp(log_beta(p + 1.0, q + 1.0)) * vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return JacobiRule(p=p, q=q, n_nodes=n, nodes=nodes, weights=weights)


def jacobi_rule(p: float, q: float, n: int) -> JacobiRule:
    """Golub-Welsch rule with ``n`` nodes for ``(1-u)^p u^q`` on ``[0, 1]``.

    Exact for polynomials of degree ``2n - 1``. Rules are cached and immutable.
    """
    p, q, n = float(p), float(q), int(n)
    if not (p > -1.0 and q > -1.0):
        raise ValueError(f"Jacobi exponents must exceed -1, got p={p!r}, q={q!r}")
    if n < 1:
        raise ValueError(f"need at least one node, got n={n}")
    return _jacobi_rule_cached(p, q, n)


def frac_integral_weighted(
    g: Callable[[np.ndarray], np.ndarray],
    a: float,
    t: float,
    alpha: float,
    k: float,
    rule: JacobiRule,
) -> float:
    r"""Approximate :math:`\int_a^t (t-s)^{\alpha-1}(s-a)^k g(s)\,ds` with one rule.

    ``rule`` must carry exponents ``(alpha - 1, k)``; ``g`` is called once
    with the array of mapped nodes.
    """
    if abs(rule.p - (alpha - 1.0)) > _EXPONENT_TOL or abs(rule.q - k) > _EXPONENT_TOL:
        raise ValueError(
            f"rule exponents ({rule.p}, {rule.q}) do not match (alpha-1, k) = ({alpha - 1.0}, {k})"
        )
    if not t > a:
        raise ValueError(f"need t > a, got a={a!r}, t={t!r}")
    length = t - a
    s = a + length * rule.nodes
    return length ** (alpha + k) * float(np.dot(rule.weights, np.asarray(g(s), dtype=float)))


@dataclass(frozen=True, eq=False)
class Mesh:
    """Graded mesh ``t_j = a + l (j/N)^r`` on ``[a, a + l]``."""

    a: float
    l: float
    points: np.ndarray = field(repr=False)
    grading: float = 1.0

    @property
    def N(self) -> int:
        return len(self.points) - 1

    def coordinate(self, s: np.ndarray) -> np.ndarray:
        """Fractional mesh index of ``s``; mesh points sit at integers."""
        rel = np.clip((np.asarray(s, dtype=float) - self.a) / self.l, 0.0, 1.0)
        return self.N * rel ** (1.0 / self.grading)


def make_mesh(a: float, l: float, N: int, r: float = 2.0) -> Mesh:
    if not l > 0:
        raise ValueError(f"interval length must be positive, got {l!r}")
    if int(N) < 2:
        raise ValueError(f"need N >= 2, got {N}")
    if not r >= 1.0:
        raise ValueError(f"grading exponent must be >= 1, got {r!r}")
    N = int(N)
    pts = a + l * (np.arange(N + 1) / N) ** r
    pts[0] = a
    pts[-1] = a + l
    pts.setflags(write=False)
    return Mesh(a=float(a), l=float(l), points=pts, grading=float(r))


def interp_eval(mesh: Mesh, values, s, order: int = 1):
    """Continuous extension of mesh values.

    ``order=1`` is piecewise linear in ``t``. ``order=3`` is piecewise cubic
    Lagrange interpolation in the graded coordinate (where the mesh is
    uniform), using the four mesh points around each segment.
    """
    values = np.asarray(values, dtype=float)
    pts = mesh.points
    if values.shape != pts.shape:
        raise ValueError(f"expected {pts.shape[0]} values, got {values.shape}")
    s_arr = np.asarray(s, dtype=float)
    lo, hi = pts[0], pts[-1]
    slack = 1e-12 * max(1.0, abs(hi))
    if np.any(s_arr < lo - slack) or np.any(s_arr > hi + slack):
        raise ValueError(f"evaluation point outside mesh span [{lo}, {hi}]")

    if order == 1:
        out = np.interp(s_arr, pts, values)
    elif order == 3:
        N = mesh.N
        xi = mesh.coordinate(s_arr)
        width = min(4, N + 1)
        start = np.clip(np.floor(xi).astype(int) - 1, 0, N + 1 - width)
        z = xi - start
        out = np.zeros_like(xi)
        for m in range(width):
            basis = np.ones_like(xi)
            for n in range(width):
                if n != m:
                    basis *= (z - n) / (m - n)
            out += basis * values[start + m]
        # the graded coordinate of a mesh point is not always an exact integer
        exact = np.isin(s_arr, pts)
        if np.any(exact):
            idx = np.searchsorted(pts, s_arr[exact])
            out[exact] = values[idx]
    else:
        raise ValueError(f"unsupported interpolation order {order}")
    return float(out) if np.ndim(out) == 0 else out


def thread_count() -> int:
    """Worker threads for intra-step parallelism from ``HP_THREADS`` (0 = sequential)."""
    raw = os.environ.get("HP_THREADS", "0").strip() or "0"
    try:
        return max(0, int(raw))
    except ValueError:
        return 0


class KernelQuadrature:
    r"""Composite product rule for :math:`\int_a^{t_j}(t_j-s)^{\alpha-1}(s-a)^k g(s)\,ds`
    at every point of a mesh.

    ``[a, t_j]`` is split along the mesh. The first segment carries the
    ``(s-a)^k`` singularity in a Jacobi weight, the last one the
    ``(t_j-s)^{\alpha-1}`` singularity; interior segments use Gauss-Legendre
    with the (smooth there) kernel folded into the weights. ``g`` is sampled
    once per call at :attr:`nodes`; :meth:`apply` maps those samples to the
    integrals at ``t_0, ..., t_N`` (the value at ``t_0 = a`` is 0).
    """

    #: cache row weights when their total size stays below this many floats
    cache_limit = 12_000_000

    def __init__(self, mesh: Mesh, alpha: float, k: float, n_nodes: int) -> None:
        self.mesh = mesh
        self.alpha = float(alpha)
        self.k = float(k)
        self.n_nodes = Q = int(n_nodes)
        a = mesh.a
        t = np.asarray(mesh.points, dtype=float)
        N = mesh.N
        h = np.diff(t)
        am1 = self.alpha - 1.0

        # row 1: both singularities on [a, t_1]
        both = jacobi_rule(am1, self.k, Q)
        s_row1 = a + h[0] * both.nodes
        self._w_row1 = h[0] ** (self.alpha + self.k) * both.weights

        # first segment for rows j >= 2
        left = jacobi_rule(0.0, self.k, Q)
        s_first = a + h[0] * left.nodes
        self._w_first_base = h[0] ** (1.0 + self.k) * left.weights

        # interior segments 1 .. N-2
        legendre = jacobi_rule(0.0, 0.0, Q)
        if N > 2:
            s_mid = (t[1 : N - 1, None] + h[1 : N - 1, None] * legendre.nodes[None, :]).ravel()
            w_mid = (h[1 : N - 1, None] * legendre.weights[None, :]).ravel()
            self._w_mid_base = w_mid * (s_mid - a) ** self.k
        else:
            s_mid = np.empty(0)
            self._w_mid_base = np.empty(0)

        # last segment [t_{j-1}, t_j] for rows j >= 2
        right = jacobi_rule(am1, 0.0, Q)
        s_last = (t[1:N, None] + h[1:, None] * right.nodes[None, :])
        self._w_last = (h[1:, None] ** self.alpha * right.weights[None, :]) * (s_last - a) ** self.k
        s_last = s_last.ravel()

        self._s_first = s_first
        self._s_mid = s_mid
        self._sizes = (Q, Q, s_mid.size, s_last.size)
        self.nodes = np.concatenate([s_row1, s_first, s_mid, s_last])
        self.nodes.setflags(write=False)

        self._row_cache: dict[int, tuple[np.ndarray, np.ndarray]] | None = None
        if Q * N * N // 2 <= self.cache_limit:
            self._row_cache = {j: self._row_weights(j) for j in range(2, N + 1)}

    def _row_weights(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        tj = self.mesh.points[j]
        am1 = self.alpha - 1.0
        w_first = self._w_first_base * (tj - self._s_first) ** am1
        n_mid = (j - 2) * self.n_nodes
        s = self._s_mid[:n_mid]
        w_mid = self._w_mid_base[:n_mid] * (tj - s) ** am1
        return w_first, w_mid

    def _row(self, j: int, g_first, g_mid, g_last) -> float:
        if self._row_cache is not None:
            w_first, w_mid = self._row_cache[j]
        else:
            w_first, w_mid = self._row_weights(j)
        n_mid = w_mid.size
        return (
            float(np.dot(w_first, g_first))
            + float(np.dot(w_mid, g_mid[:n_mid]))
            + float(np.dot(self._w_last[j - 2], g_last[j - 2]))
        )

    def apply(self, gvals: np.ndarray) -> np.ndarray:
        gvals = np.asarray(gvals, dtype=float)
        if gvals.shape != self.nodes.shape:
            raise ValueError(f"expected {self.nodes.size} samples, got {gvals.shape}")
        n1, nf, nm, nl = self._sizes
        g_row1 = gvals[:n1]
        g_first = gvals[n1 : n1 + nf]
        g_mid = gvals[n1 + nf : n1 + nf + nm]
        g_last = gvals[n1 + nf + nm :].reshape(-1, self.n_nodes)

        N = self.mesh.N
        out = np.zeros(N + 1)
        out[1] = float(np.dot(self._w_row1, g_row1))
        rows = range(2, N + 1)
        workers = thread_count()
        if workers > 0 and N > 8:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                vals = list(pool.map(lambda j: self._row(j, g_first, g_mid, g_last), rows))
            out[2:] = vals
        else:
            for j in rows:
                out[j] = self._row(j, g_first, g_mid, g_last)
        return out
