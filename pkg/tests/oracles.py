"""Independent reference computations used by the tests.

Nothing here calls the uniformization engine or the geodesic DP; each
oracle recomputes its quantity by a different method.
"""
import math

import mpmath as mp
import numpy as np
from scipy import integrate
from scipy.linalg import expm


def dense_survival(network, query, t):
    """``1 . expm(Qt^T t) rho_t`` by dense scaling and squaring."""
    Q = network.generator().toarray()
    keep = ~query.target_mask
    Qt = Q[np.ix_(keep, keep)]
    rho = np.asarray(query.rho)[keep]
    return float(np.ones(keep.sum()) @ expm(Qt.T * t) @ rho)


def erlang_survival(d, t):
    """``P(Erlang(d, 1) > t)`` in closed form."""
    return math.exp(-t) * sum(t ** j / math.factorial(j) for j in range(d))


def erlang_extreme_mean(d, N, dps=40):
    """``E[min of N Erlang(d, 1)] = int S(t)^N dt`` at ``dps`` digits."""
    mp.mp.dps = dps

    def S(t):
        return mp.exp(-t) * mp.fsum(t ** j / mp.factorial(j) for j in range(d))

    scale = (mp.mpf(N) / mp.factorial(d)) ** (-mp.mpf(1) / d)
    pts = [0] + [scale * 10 ** (e / 2) for e in range(-6, 7)] + [mp.inf]
    return float(mp.quad(lambda t: S(t) ** N, pts))


def convolution_cdf(cdf, pdf, t):
    """CDF of ``X + Y`` for i.i.d. ``X, Y``: ``int_0^t pdf(s) cdf(t - s) ds``."""
    val, _ = integrate.quad(lambda s: pdf(s) * cdf(t - s), 0.0, t, epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def stretched_cdf(r):
    return lambda t: -math.expm1(-t ** r) if t > 0 else 0.0


def stretched_pdf(r):
    return lambda t: r * t ** (r - 1.0) * math.exp(-t ** r) if t > 0 else 0.0


def weibull_mean(d, AN):
    return math.gamma(1.0 + 1.0 / d) * AN ** (-1.0 / d)


def ks_distance(cdf_a, cdf_b, grid):
    return float(np.max(np.abs(np.asarray(cdf_a(grid)) - np.asarray(cdf_b(grid)))))
