"""Conditional passage-time moments for searchers with exponential lifetimes.

A searcher is inactivated at an independent time ``sigma ~ Exponential(gamma)``
and only successful searches (``tau < sigma``) are kept.  Integrating by parts,

    E[tau^m | tau < sigma] = (I_1 - I_2) / I_0,

    I_0 = int gamma e^(-gamma t) F(t) dt
    I_1 = int gamma t^m e^(-gamma t) F(t) dt
    I_2 = int m t^(m-1) e^(-gamma t) F(t) dt

with ``F = P(tau <= t)``.  For integer ``m`` the same ratio has a closed form
in the target-deleted generator ``Qt`` and the exit-rate vector ``r``:

    E[tau^m 1{tau < sigma}] = m! rho^T (gamma - Qt)^(-m-1) r
    P(tau < sigma)          = rho^T (gamma - Qt)^(-1) r

For fast inactivation the moment is governed by the
geodesic data alone (see :func:`conditional_moment_asymptotic`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, sparse
from scipy.sparse.linalg import splu
from scipy.special import gammaln

from .errors import NumericalError
from .exact import ExactSolver, ReducedSystem
from .geodesic import GeodesicSummary
from .network import Network, Query

__all__ = ["MortalQuery", "conditional_moment_exact", "conditional_moment_asymptotic"]

NULL_PROBABILITY = 1e-300
_U_BLOCK = 40.0


@dataclass(frozen=True)
class MortalQuery:
    """Inactivation rate ``gamma`` and moment order ``m``."""

    gamma: float
    m: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be finite and positive, got {self.gamma}")
        if not (math.isfinite(self.m) and self.m > 0):
            raise ValueError(f"moment order must be positive, got {self.m}")


def conditional_moment_exact(network: Network, query: Query, mortal: MortalQuery,
                             eps: float = 1e-10, method: str = "auto") -> float:
    """``E[tau^m | tau < sigma]`` from the exact single-walker law.

    ``method="quadrature"`` integrates the CDF as above; ``"resolvent"`` uses
    sparse solves with ``gamma - Qt`` and needs integer ``m``.  ``"auto"``
    takes the resolvent route whenever ``m`` is an integer.

    Integrals are taken in ``u = gamma t``.  The range ``[0, 40]`` is
    integrated first and further blocks of 40 are added until a block is
    below ``eps`` relative to the running total, which also covers slow
    passage (``F`` still tiny at ``u = 40``).

    Parameters
    ----------
    eps : float
        Relative quadrature tolerance; the survival series is evaluated at
        ``eps / 10``.  Quadrature cost grows with ``1 / gamma`` (the series
        must reach ``t ~ 40 / gamma``), so prefer integer ``m`` for slow
        inactivation.
    method : {"auto", "quadrature", "resolvent"}

    Raises
    ------
    ModeError
        For general-mode networks.
    NumericalError
        If ``P(tau < sigma)`` is below 1e-300 (code ``null_conditioning``).
    """
    g, m = float(mortal.gamma), float(mortal.m)
    if method not in ("auto", "quadrature", "resolvent"):
        raise ValueError(f"unknown method {method!r}")
    if method == "resolvent" and not m.is_integer():
        raise ValueError("the resolvent route needs an integer moment order")
    if method == "resolvent" or (method == "auto" and m.is_integer()):
        return _resolvent_moment(network, query, g, int(m))

    solver = ExactSolver(network, query, eps=min(eps / 10.0, 1e-3))
    F = lambda u: solver._eval(u / g)[1]  # noqa: E731

    f0 = lambda u: math.exp(-u) * F(u)  # noqa: E731
    f1 = lambda u: u ** m * math.exp(-u) * F(u)  # noqa: E731
    f2 = lambda u: m * u ** (m - 1.0) * math.exp(-u) * F(u) if u > 0 else 0.0  # noqa: E731

    def quad(fn, a, b):
        # Split at a few points so the peak of u^m e^-u is resolved.
        pts = [p for p in (1.0, 4.0, 10.0, 20.0) if a < p < b]
        val, _ = integrate.quad(fn, a, b, epsabs=0.0, epsrel=eps, limit=200, points=pts or None)
        return val

    totals = [0.0, 0.0, 0.0]
    a = 0.0
    while True:
        b = a + _U_BLOCK
        pieces = [quad(fn, a, b) for fn in (f0, f1, f2)]
        totals = [t + p for t, p in zip(totals, pieces)]
        a = b
        if totals[0] > 0 and all(p <= eps * t for p, t in zip(pieces, totals) if t > 0):
            break
        # Since F <= 1 the remaining mass is below the tail of u^m e^-u.
        if m * math.log(a) - a < -745.0:
            break
    i0, i1, i2 = totals
    if i0 < NULL_PROBABILITY:
        raise NumericalError("conditioning event numerically null", code="null_conditioning")
    return (i1 - i2) / i0 / g ** m


def _resolvent_moment(network, query, g, m):
    system = ReducedSystem.build(network, query)
    n = system.Qtilde.shape[0]
    lu = splu((g * sparse.identity(n, format="csc") - system.Qtilde).tocsc())
    # Work with the adjoint so only the row vector rho^T is propagated.
    y = lu.solve(system.rho_tilde.astype(float), trans="T")
    p_hit = float(y @ system.exit_rate)
    if not p_hit >= NULL_PROBABILITY:
        raise NumericalError("conditioning event numerically null", code="null_conditioning")
    # Rescale each step by g so the powers of the resolvent do not underflow.
    z = y * g
    for _ in range(m):
        z = lu.solve(z, trans="T") * g
    return math.factorial(m) * float(z @ system.exit_rate) / (p_hit * g) / g ** m


def conditional_moment_asymptotic(summary: GeodesicSummary, mortal: MortalQuery) -> float:
    """Fast-inactivation limit of ``E[tau^m | tau < sigma]``.

    With ``p = d r`` the short-time exponent: ``Gamma(p+m) / Gamma(p) / gamma^m``
    when ``t_min = 0`` and ``t_min^m + p m t_min^(m-1) / gamma`` otherwise.
    """
    p = summary.d * summary.r
    g, m = float(mortal.gamma), float(mortal.m)
    if summary.t_min == 0:
        return math.exp(gammaln(p + m) - gammaln(p) - m * math.log(g))
    t = summary.t_min
    return t ** m + p * m / g * t ** (m - 1.0)
