"""Exact finite-N numerics for Markov networks.

The single-walker survival ``S(t) = P(tau > t)`` is ``1 . exp(Qt^T t) rho_t``,
where ``Qt`` is the generator with all target rows and columns deleted.  It
is evaluated by uniformization: with ``mu = max q(i)`` and the substochastic
``P = I + Qt / mu``,

    S(t) = sum_k Pois(k; mu t) <1, (P^T)^k rho_t>.

The absorbed mass ``F = 1 - S`` is accumulated from its own non-negative
series so that it keeps full relative precision when it is tiny, which is
exactly where extreme statistics live.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse
from scipy.sparse.linalg import splu
from scipy.special import betainc, betaincc, betaln, gammaln
from scipy.stats import poisson

from .asymptotics import extreme_law
from .errors import ModeError, NumericalError
from .geodesic import geodesic_summary
from .network import Mode, Network, Query, validate

__all__ = [
    "ReducedSystem",
    "SurvivalCurve",
    "ExactSolver",
    "survival",
    "survival_curve",
    "fpt_density",
    "extreme_cdf",
    "extreme_sf",
    "extreme_pdf",
    "extreme_moment_exact",
]

DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class ReducedSystem:
    """Target-deleted generator and initial vector."""

    Qtilde: sparse.csr_matrix
    rho_tilde: np.ndarray
    exit_rate: np.ndarray
    keep: np.ndarray

    @classmethod
    def build(cls, network: Network, query: Query) -> "ReducedSystem":
        if network.mode is not Mode.MARKOV:
            raise ModeError("exact numerics need a Markov network; use monte_carlo for general mode")
        validate(network, query).raise_if_failed()
        keep = ~query.target_mask
        Q = network.generator()
        Qt = Q[keep][:, keep].tocsr()
        to_target = np.asarray(Q[keep][:, ~keep].sum(axis=1)).ravel()
        return cls(Qt, np.asarray(query.rho)[keep], to_target, keep)


@dataclass(frozen=True)
class SurvivalCurve:
    grid: np.ndarray
    values: np.ndarray
    trunc_error: float


class ExactSolver:
    """Uniformization engine for one network/query pair.

    The power series ``<1, (P^T)^k rho_t>`` is computed lazily and cached,
    so repeated evaluations at different times share the matrix-vector work.

    Parameters
    ----------
    eps : float
        Absolute truncation tolerance for each survival value.
    """

    def __init__(self, network: Network, query: Query, eps: float = DEFAULT_EPS):
        if not 0 < eps <= 1e-3:
            raise ValueError("eps must lie in (0, 1e-3]")
        self.network = network
        self.query = query
        self.eps = float(eps)
        self.system = ReducedSystem.build(network, query)
        q = -self.system.Qtilde.diagonal()
        self.mu = float(q.max()) if q.size and q.max() > 0 else 1.0
        n = q.size
        self._PT = (sparse.identity(n, format="csr") + self.system.Qtilde / self.mu).T.tocsr()
        self._exit = self.system.exit_rate / self.mu
        self._v = self.system.rho_tilde.astype(float).copy()
        # Series buffers grow by doubling; only the first ``_len`` entries are valid.
        self._s = np.empty(64)  # surviving mass after k uniformized steps
        self._f = np.empty(64)  # absorbed mass after k steps
        self._a = np.empty(64)  # mass absorbed at step k -> k + 1
        self._s[0], self._f[0] = float(self._v.sum()), 0.0
        self._len = 1
        self._first = None      # first k with f_k > 0
        self._summary = None
        while self._first is None and self._len <= n + 2:
            self._extend(self._len)

    # -- series -----------------------------------------------------------

    def _grow(self, size):
        cap = self._s.size
        while cap < size:
            cap *= 2
        if cap > self._s.size:
            for name in ("_s", "_f", "_a"):
                buf = np.empty(cap)
                old = getattr(self, name)
                buf[:old.size] = old
                setattr(self, name, buf)

    def _extend(self, K):
        if self._len > K + 1:
            return
        self._grow(K + 2)
        s, f, a_buf = self._s, self._f, self._a
        v, PT, ex = self._v, self._PT, self._exit
        i = self._len - 1
        while i + 1 <= K + 1:
            a = float(v @ ex)
            a_buf[i] = a
            f[i + 1] = f[i] + a
            if self._first is None and a > 0:
                self._first = i + 1
            v = PT @ v
            s[i + 1] = float(v.sum())
            i += 1
        self._v = v
        self._len = i + 1

    def _window(self, x):
        """Index range ``[lo, hi]`` of Poisson(x) terms to keep."""
        if x == 0:
            return 0, 0
        hi = int(poisson.isf(self.eps / 2.0, x)) + 1
        first = self._first if self._first is not None else 1
        # Extra terms keep relative accuracy of F when the window sits below the first absorption.
        hi = max(hi, int(first + 40 + x + 10.0 * math.sqrt(x)))
        lo = max(0, int(x - 40.0 * math.sqrt(x) - 50.0))
        return lo, hi

    def _weights(self, x, lo, hi):
        k = np.arange(lo, hi + 1, dtype=float)
        if x == 0:
            return np.array([1.0])
        return np.exp(k * math.log(x) - x - gammaln(k + 1.0))

    def _eval(self, t):
        """Return ``(S, F, density)`` at a scalar time ``t >= 0``."""
        if t < 0:
            raise ValueError("time must be non-negative")
        x = self.mu * t
        lo, hi = self._window(x)
        self._extend(hi)
        w = self._weights(x, lo, hi)
        s = self._s[lo:hi + 1]
        f = self._f[lo:hi + 1]
        a = self._a[lo:hi + 1]
        S = float(w @ s)
        F = float(w @ f)
        dens = self.mu * float(w @ a)
        return min(max(S, 0.0), 1.0), min(max(F, 0.0), 1.0), max(dens, 0.0)

    def _vec(self, t, which):
        t = np.asarray(t, dtype=float)
        out = np.array([self._eval(float(ti))[which] for ti in t.reshape(-1)])
        return out.reshape(t.shape) if t.ndim else float(out[0])

    # -- single walker ----------------------------------------------------

    def survival(self, t):
        return self._vec(t, 0)

    def cdf(self, t):
        """``P(tau <= t)`` accumulated directly (no cancellation at small t)."""
        return self._vec(t, 1)

    def density(self, t):
        return self._vec(t, 2)

    def curve(self, grid) -> SurvivalCurve:
        grid = np.asarray(grid, dtype=float)
        return SurvivalCurve(grid, np.asarray(self.survival(grid)), self.eps)

    # -- order statistics -------------------------------------------------

    @staticmethod
    def _log_s(S, F):
        return math.log1p(-F) if F < 0.5 else (math.log(S) if S > 0 else -math.inf)

    def _order_sf(self, N, k, S, F):
        if k == 1:
            return math.exp(N * self._log_s(S, F))
        if F < 0.5:
            return float(betaincc(k, N - k + 1, F))
        return float(betainc(N - k + 1, k, S))

    def _order_cdf(self, N, k, S, F):
        if k == 1:
            return -math.expm1(N * self._log_s(S, F))
        if F < 0.5:
            return float(betainc(k, N - k + 1, F))
        return float(betaincc(N - k + 1, k, S))

    def _order_pdf(self, N, k, S, F, dens):
        if dens == 0 or (k > 1 and F == 0):
            return 0.0
        logf = (k - 1) * (math.log(F) if k > 1 else 0.0) + (N - k) * self._log_s(S, F) - betaln(k, N - k + 1)
        return dens * math.exp(logf)

    def extreme_sf(self, N, k, t):
        _check_order(N, k)
        return self._map(t, lambda S, F, _: self._order_sf(N, k, S, F))

    def extreme_cdf(self, N, k, t):
        _check_order(N, k)
        return self._map(t, lambda S, F, _: self._order_cdf(N, k, S, F))

    def extreme_pdf(self, N, k, t):
        _check_order(N, k)
        return self._map(t, lambda S, F, g: self._order_pdf(N, k, S, F, g))

    def _map(self, t, fn):
        t = np.asarray(t, dtype=float)
        out = np.array([fn(*self._eval(float(ti))) for ti in t.reshape(-1)])
        return out.reshape(t.shape) if t.ndim else float(out[0])

    # -- moments ----------------------------------------------------------

    @property
    def summary(self):
        if self._summary is None:
            self._summary = geodesic_summary(self.network, self.query)
        return self._summary

    def can_be_trapped(self) -> bool:
        """True if part of the initial mass may never reach the target."""
        net, qry = self.network, self.query
        live = net.can_reach(qry.targets)
        # Walks stop at targets, so only explore from non-target nodes.
        reach = _reachable_avoiding(net, qry.support, qry.target_mask)
        return bool(np.any(reach & ~live))

    def moment(self, N, k=1, m=1.0, eps=1e-10):
        """``E[T_{k,N}^m]`` by adaptive quadrature of ``m t^(m-1) P(T_{k,N} > t)``.

        A single walker with integer ``m`` uses the phase-type identity instead.

        The integration variable is rescaled by the asymptotic scale
        ``(A N)^(-1/d)``; pieces are log-spaced over ``[1e-3, 1e3]`` times that
        scale and then extended until the integrand is negligible.
        """
        _check_order(N, k)
        if not m > 0:
            raise ValueError("moment order must be positive")
        if self.can_be_trapped():
            raise NumericalError("infinite moment: some walkers never reach the target",
                                 code="infinite_moment")
        if N == 1 and float(m).is_integer():
            return self._phase_type_moment(int(m))
        scale = extreme_law(self.summary, N, k).scale

        def g(u):
            S, F, _ = self._eval(scale * u)
            return self._order_sf(N, k, S, F)

        def quad(fn, a, b):
            val, err = integrate.quad(fn, a, b, epsabs=0.0, epsrel=eps, limit=200)
            return val

        u0 = 1e-3
        # m u^(m-1) du = dv with v = u^m removes the endpoint singularity for m < 1.
        total = quad(lambda v: g(v ** (1.0 / m)), 0.0, u0 ** m)
        # Log-spaced pieces: the integrand in w = log u is m e^(m w) g(e^w).
        h = lambda w: m * math.exp(m * w) * g(math.exp(w))  # noqa: E731
        step = math.log(10.0) / 4.0
        w = math.log(u0)
        w_core = math.log(1e3)
        quiet = 0
        for _ in range(2000):
            piece = quad(h, w, w + step)
            total += piece
            w += step
            if w >= w_core:
                if piece <= 1e-17 * total and g(math.exp(w)) < 1e-15:
                    quiet += 1
                    if quiet >= 2:
                        break
                else:
                    quiet = 0
        else:
            raise NumericalError("moment quadrature did not converge", code="quadrature_failure")
        return total * scale ** m


    def _phase_type_moment(self, m):
        """``E[tau^m] = m! rho_t^T (-Qt)^(-m) 1`` by repeated sparse solves."""
        lu = splu((-self.system.Qtilde).tocsc())
        x = np.ones(self.system.Qtilde.shape[0])
        for _ in range(m):
            x = lu.solve(x)
        return float(math.factorial(m) * (self.system.rho_tilde @ x))


def _reachable_avoiding(net: Network, seeds, stop_mask):
    from collections import deque

    seen = np.zeros(net.node_count, dtype=bool)
    dq = deque()
    for s in seeds:
        seen[s] = True
        dq.append(int(s))
    w = net.edge_weight()
    while dq:
        u = dq.popleft()
        if stop_mask[u]:
            continue
        for kk in range(net.indptr[u], net.indptr[u + 1]):
            v = net.dst[kk]
            if w[kk] > 0 and not seen[v]:
                seen[v] = True
                dq.append(int(v))
    return seen


def _check_order(N, k):
    if not (isinstance(N, (int, np.integer)) and isinstance(k, (int, np.integer))):
        if float(N) != int(N) or float(k) != int(k):
            raise ValueError("N and k must be integers")
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")


# -- functional front end -------------------------------------------------


def survival(network, query, t, eps=DEFAULT_EPS):
    """``P(tau > t)`` with absolute truncation error at most ``eps``."""
    return ExactSolver(network, query, eps).survival(t)


def survival_curve(network, query, grid, eps=DEFAULT_EPS) -> SurvivalCurve:
    return ExactSolver(network, query, eps).curve(grid)


def fpt_density(network, query, t, eps=DEFAULT_EPS):
    """Density of the single first passage time, ``-dS/dt``."""
    return ExactSolver(network, query, eps).density(t)


def extreme_cdf(network, query, N, k, t, eps=DEFAULT_EPS):
    """``P(T_{k,N} <= t)``."""
    return ExactSolver(network, query, eps).extreme_cdf(N, k, t)


def extreme_sf(network, query, N, k, t, eps=DEFAULT_EPS):
    return ExactSolver(network, query, eps).extreme_sf(N, k, t)


def extreme_pdf(network, query, N, k, t, eps=DEFAULT_EPS):
    return ExactSolver(network, query, eps).extreme_pdf(N, k, t)


def extreme_moment_exact(network, query, N, k=1, m=1.0, eps=1e-10):
    """``E[T_{k,N}^m]`` with relative quadrature tolerance ``eps``."""
    return ExactSolver(network, query, min(DEFAULT_EPS, eps * 1e-2)).moment(N, k, m, eps)
