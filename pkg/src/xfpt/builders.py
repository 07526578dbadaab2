"""Small canonical networks used throughout the tests and demos."""
from __future__ import annotations

import numpy as np

from .network import Network, Query, ShiftedStretched

__all__ = ["chain", "shifted_chain", "diamond", "lattice_1d", "random_markov", "random_general"]


def chain(length: int, rate: float = 1.0, backward: float = 0.0):
    """Forward chain ``0 -> 1 -> ... -> length`` with the last node as target.

    With ``backward > 0`` every non-terminal link also gets a reverse edge.
    """
    edges = [(i, i + 1, rate) for i in range(length)]
    if backward > 0:
        edges += [(i + 1, i, backward) for i in range(length - 1)]
    net = Network.markov(length + 1, edges)
    return net, Query.point(length + 1, 0, [length])


def shifted_chain(length: int, t0: float = 1.0, c: float = 2.0, r: float = 1.0):
    """General-mode chain whose every hop waits ``ShiftedStretched(t0, c, r)``."""
    w = ShiftedStretched(t0, c, r)
    net = Network.general(length + 1, [(i, i + 1, 1.0, w) for i in range(length)])
    return net, Query.point(length + 1, 0, [length])


def diamond(r01=1.0, r13=2.0, r02=3.0, r23=4.0):
    """Two disjoint two-hop routes ``0 -> 1 -> 3`` and ``0 -> 2 -> 3``."""
    net = Network.markov(4, [(0, 1, r01), (1, 3, r13), (0, 2, r02), (2, 3, r23)])
    return net, Query.point(4, 0, [3])


def lattice_1d(d: int, D: float = 1.0, L: float = 1.0):
    """Nearest-neighbour walk on ``{-d, ..., d}`` started at the origin.

    Interior nodes jump left and right at rate ``D d^2 / L^2`` each; both
    endpoints are targets, so the first passage time is the exit time from
    ``(-L, L)`` with lattice spacing ``L / d``.  Node ``i + d`` holds site ``i``.
    """
    q = D * d * d / (L * L)
    n = 2 * d + 1
    edges = []
    for site in range(-d + 1, d):
        k = site + d
        edges.append((k, k - 1, q))
        edges.append((k, k + 1, q))
    return Network.markov(n, edges), Query.point(n, d, [0, n - 1])


def random_markov(n: int, m: int, seed: int, rate_low: float = 0.1, rate_high: float = 2.0):
    """Random Markov network with ``m`` distinct edges, source 0, target ``n - 1``.

    A forward path ``0 -> 1 -> ... -> n-1`` is always included so the target
    is reachable; the remaining edges are uniform over ordered pairs.
    """
    rng = np.random.default_rng(seed)
    pairs = {(i, i + 1) for i in range(n - 1)}
    candidates = [(i, j) for i in range(n) for j in range(n) if i != j and (i, j) not in pairs]
    extra = max(0, min(m - len(pairs), len(candidates)))
    for k in rng.choice(len(candidates), size=extra, replace=False):
        pairs.add(candidates[k])
    pairs = sorted(pairs)
    rates = rng.uniform(rate_low, rate_high, size=len(pairs))
    net = Network.markov(n, [(i, j, q) for (i, j), q in zip(pairs, rates)])
    return net, Query.point(n, 0, [n - 1])


def random_general(n: int, m: int, seed: int, t0_choices=(0.0, 0.5, 1.0), r: float = 1.0):
    """Random general-mode network with shifted waiting laws drawn from ``t0_choices``."""
    rng = np.random.default_rng(seed)
    base, query = random_markov(n, m, seed)
    q = base.out_rate
    edges = []
    for a, b, rate in zip(base.src, base.dst, base.rate):
        t0 = float(rng.choice(t0_choices))
        c = float(rng.uniform(0.5, 3.0))
        edges.append((a, b, rate / q[a], ShiftedStretched(t0, c, r)))
    return Network.general(n, edges), query
