"""Large-N limiting laws for the k-th fastest first passage time.

For ``N`` searchers the k-th fastest time is approximated by
``t_min + s * Z`` where ``s = (A N)^(-1/p)``, ``p = d * r`` is the short-time
exponent and ``Z`` is generalized-Gamma with survival ``Gamma(k, z^p) / Gamma(k)``.
For ``k = 1`` this is a Weibull law.  Everything here is the *asymptotic*
approximation; exact finite-N results live in :mod:`xfpt.exact`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from .errors import ModeError
from .geodesic import GeodesicSummary, log_constant
from .network import Mode, Network, max_rate

__all__ = [
    "ExtremeLaw",
    "MomentReport",
    "extreme_law",
    "asymptotic_moment",
    "short_time_coefficient",
    "regime_threshold",
    "convolution_coefficient",
    "weibull_cdf",
    "weibull_pdf",
]


def weibull_cdf(z, shape):
    """CDF of Weibull(1, shape): ``1 - exp(-z^shape)``."""
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    return -np.expm1(-z ** shape)


def weibull_pdf(z, shape):
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shape * z ** (shape - 1.0) * np.exp(-z ** shape)
    return np.where(z > 0, out, shape if shape == 1 else 0.0)


class ExtremeLaw:
    """Asymptotic law of the k-th fastest of ``N`` first passage times.

    Parameters
    ----------
    A : float
        Short-time coefficient.  Pass ``log_A`` instead when ``A`` overflows.
    d : int
        Geodesic jump count.
    N, k : int
    t_min : float
        Offset (minimum possible passage time).
    r : float
        Short-time exponent of each waiting law; the shape parameter is ``d * r``.
    """

    asymptotic = True

    def __init__(self, A=None, d=1, N=1, k=1, t_min=0.0, r=1.0, log_A=None):
        if N < 1 or k < 1:
            raise ValueError("need N >= 1 and k >= 1")
        if log_A is None:
            if not A > 0:
                raise ValueError("A must be positive")
            log_A = math.log(A)
        self.log_A = float(log_A)
        self.A = math.exp(self.log_A) if self.log_A < 709 else math.inf
        self.d = int(d)
        self.N = int(N)
        self.k = int(k)
        self.t_min = float(t_min)
        self.r = float(r)
        self.shape = self.d * self.r
        self.log_scale = -(self.log_A + math.log(self.N)) / self.shape
        self.scale = math.exp(self.log_scale)

    def _z(self, t):
        t = np.asarray(t, dtype=float)
        return np.maximum(t - self.t_min, 0.0) / self.scale

    def cdf(self, t):
        x = self._z(t) ** self.shape
        if self.k == 1:
            return -np.expm1(-x)
        return gammainc(self.k, x)

    def sf(self, t):
        x = self._z(t) ** self.shape
        if self.k == 1:
            return np.exp(-x)
        return gammaincc(self.k, x)

    def pdf(self, t):
        z = self._z(t)
        p, k = self.shape, self.k
        with np.errstate(divide="ignore", invalid="ignore"):
            logpdf = (math.log(p) + (p * k - 1.0) * np.log(z) - z ** p - gammaln(k) - self.log_scale)
        out = np.exp(logpdf)
        # Density at the offset is finite only when p*k == 1.
        if p * k == 1.0:
            out = np.where(z > 0, out, 1.0 / self.scale)
        return np.where(np.asarray(t, dtype=float) >= self.t_min, out, 0.0)

    def quantile(self, q, tol=1e-12):
        """Invert the CDF by bisection in ``log x`` on the incomplete gamma function."""
        if not 0.0 < q < 1.0:
            if q == 0.0:
                return self.t_min
            if q == 1.0:
                return math.inf
            raise ValueError("quantile level must lie in [0, 1]")
        k = self.k
        if q < 0.5:
            f = lambda x: gammainc(k, x) - q  # noqa: E731
        else:
            f = lambda x: (1.0 - q) - gammaincc(k, x)  # noqa: E731
        lo, hi = -745.0, 1.0
        while f(math.exp(hi)) < 0:
            hi *= 2.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if f(math.exp(mid)) < 0:
                lo = mid
            else:
                hi = mid
        x = math.exp(0.5 * (lo + hi))
        return self.t_min + self.scale * x ** (1.0 / self.shape)

    def moment(self, m):
        """``E[(T - t_min)^m] ~ Gamma(k + m/p) / Gamma(k) * s^m``."""
        return math.exp(gammaln(self.k + m / self.shape) - gammaln(self.k) + m * self.log_scale)

    @property
    def mean(self):
        return self.moment(1.0)

    @property
    def variance(self):
        return self.moment(2.0) - self.moment(1.0) ** 2

    @property
    def first_order_mean(self):
        """First-order mean of ``T`` itself, ``t_min + E[T - t_min]``."""
        return self.t_min + self.mean

    def __repr__(self):
        return (f"ExtremeLaw(asymptotic, A={self.A:.6g}, d={self.d}, r={self.r:g}, N={self.N}, "
                f"k={self.k}, t_min={self.t_min:g}, scale={self.scale:.6g})")


@dataclass(frozen=True)
class MomentReport:
    """Asymptotic moment of ``T_{k,N} - t_min`` (``shifted`` is True when ``t_min > 0``)."""

    m: float
    value: float
    mean: float
    variance: float
    t_min: float = 0.0
    shifted: bool = False
    first_order_mean: float = math.nan
    asymptotic: bool = True


def extreme_law(summary: GeodesicSummary, N: int, k: int = 1) -> ExtremeLaw:
    return ExtremeLaw(d=summary.d, N=N, k=k, t_min=summary.t_min, r=summary.r, log_A=summary.log_A)


def asymptotic_moment(summary: GeodesicSummary, N: int, k: int = 1, m: float = 1.0) -> MomentReport:
    law = extreme_law(summary, N, k)
    return MomentReport(
        m=float(m),
        value=law.moment(m),
        mean=law.mean,
        variance=law.variance,
        t_min=law.t_min,
        shifted=law.t_min > 0,
        first_order_mean=law.first_order_mean,
    )


def short_time_coefficient(summary: GeodesicSummary):
    """Return ``(A, exponent)`` with ``P(tau <= t_min + t) ~ A t**exponent``."""
    return summary.A, summary.exponent


def convolution_coefficient(lams, r):
    """Short-time constant of a sum of independent delays with ``P(X_i <= t) ~ lam_i t^r``."""
    lams = np.asarray(lams, dtype=float)
    return math.exp(log_constant(float(np.log(lams).sum()), lams.size, r))


def regime_threshold(summary: GeodesicSummary, network: Network) -> float:
    """Searcher count ``N* = d! (max_i q(i))^d / Lambda``.

    The Weibull regime is reached for ``N`` much larger than ``N*``.  Only
    defined for Markov networks.
    """
    if network.mode is not Mode.MARKOV:
        raise ModeError("regime threshold is not available for general-mode networks")
    qmax = max_rate(network)
    d = summary.d
    return math.exp(gammaln(d + 1.0) + d * math.log(qmax) - summary.log_Lambda)
