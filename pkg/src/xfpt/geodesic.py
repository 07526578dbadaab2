"""Geodesic quantities controlling the fastest first passage times.

The fastest of many walkers follows a path that first minimises the total
minimum delay and then the number of jumps.  :func:`geodesic_summary` finds
that optimum with a lexicographic shortest-path search, restricts the graph
to the "tight" edges lying on some optimal prefix (a DAG, since the jump
count grows by one along every tight edge) and accumulates the weighted path
sum over that DAG in log space.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import NumericalError, ValidationError
from .network import Mode, Network, Query, validate

__all__ = [
    "PathRecord",
    "GeodesicSummary",
    "PathEnumeration",
    "lex_distances",
    "geodesic_summary",
    "enumerate_optimal_paths",
    "brute_force_lambda",
    "log_constant",
]

BRUTE_FORCE_LIMIT = 10_000_000


def _time_eq(a, b):
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class PathRecord:
    nodes: tuple
    d: int
    t0_sum: float
    weight: float


class PathEnumeration(NamedTuple):
    paths: list
    truncated: bool


@dataclass(frozen=True)
class GeodesicSummary:
    """Optimal-path data for a network/query pair.

    ``A`` is the short-time coefficient, ``P(tau <= t_min + t) ~ A t**(d*r)``.
    ``Lambda`` and ``A`` may overflow to ``inf`` for very long geodesics;
    ``log_Lambda`` and ``log_A`` stay finite.
    """

    t_min: float
    d: int
    Lambda: float
    log_Lambda: float
    r: float
    A: float
    log_A: float
    path_count: int
    mode: str = "markov"
    truncated: bool = False
    paths: tuple = field(default=(), repr=False)

    @property
    def exponent(self) -> float:
        return self.d * self.r

    def to_dict(self) -> dict:
        return {
            "t_min": self.t_min,
            "d": self.d,
            "lambda": self.Lambda,
            "r": self.r,
            "A": self.A,
            "path_count": self.path_count,
            "truncated": self.truncated,
        }


def log_constant(log_lambda: float, d: int, r: float = 1.0) -> float:
    """``log A`` with ``A = Gamma(r+1)^d Lambda / Gamma(d r + 1)`` (``Lambda / d!`` when ``r = 1``)."""
    return float(log_lambda + d * gammaln(r + 1.0) - gammaln(d * r + 1.0))


def _positive_edges(network: Network):
    w = network.edge_weight()
    keep = (w > 0) & (network.src != network.dst)
    return network.src[keep], network.dst[keep], w[keep], network.edge_t0()[keep]


def lex_distances(network: Network, sources, targets=()):
    """Lexicographic ``(min delay, min jumps)`` labels from a source set.

    Walks stop at ``targets``, so no edge out of a target is relaxed.

    Returns
    -------
    T : ndarray
        Minimum total delay per node (``inf`` if unreachable).
    D : ndarray of int
        Minimum jump count among minimum-delay paths (-1 if unreachable).
    """
    n = network.node_count
    src, dst, _, t0 = _positive_edges(network)
    order = np.argsort(src, kind="stable")
    src, dst, t0 = src[order], dst[order], t0[order]
    ptr = np.searchsorted(src, np.arange(n + 1))
    stop = np.zeros(n, dtype=bool)
    stop[list(targets)] = True
    T = np.full(n, np.inf)
    D = np.full(n, -1, dtype=np.int64)
    heap = []
    for s in sources:
        T[s], D[s] = 0.0, 0
        heap.append((0.0, 0, int(s)))
    heapq.heapify(heap)
    done = np.zeros(n, dtype=bool)
    while heap:
        tu, du, u = heapq.heappop(heap)
        if done[u] or tu != T[u] or du != D[u]:
            continue
        done[u] = True
        if stop[u]:
            continue
        for k in range(ptr[u], ptr[u + 1]):
            v = dst[k]
            tv, dv = tu + t0[k], du + 1
            if D[v] < 0 or (tv < T[v] and not _time_eq(tv, T[v])) or (_time_eq(tv, T[v]) and dv < D[v]):
                if done[v]:
                    continue
                T[v], D[v] = tv, dv
                heapq.heappush(heap, (tv, dv, int(v)))
    return T, D


def _optimum(network: Network, query: Query):
    report = validate(network, query)
    report.raise_if_failed()
    targets = list(query.targets)
    T, D = lex_distances(network, query.support, targets)
    reached = [t for t in targets if D[t] >= 0]
    if not reached:
        raise ValidationError("no target is reachable from the support of rho", code="unreachable_target")
    t_min = min(T[t] for t in reached)
    d = min(D[t] for t in reached if _time_eq(T[t], t_min))
    best = [t for t in reached if _time_eq(T[t], t_min) and D[t] == d]
    return T, D, float(t_min), int(d), best


def _tight_edges(network: Network, T, D, targets):
    src, dst, w, t0 = _positive_edges(network)
    stop = np.zeros(network.node_count, dtype=bool)
    stop[list(targets)] = True
    tight = []
    for a, b, wk, tk in zip(src, dst, w, t0):
        if stop[a] or D[a] < 0 or D[b] != D[a] + 1:
            continue
        if _time_eq(T[a] + tk, T[b]):
            tight.append((int(a), int(b), float(wk)))
    return tight


def geodesic_summary(network: Network, query: Query, enumerate_cap: int | None = None) -> GeodesicSummary:
    """Compute ``(t_min, d, Lambda, r, A)`` without enumerating paths.

    Parameters
    ----------
    enumerate_cap : int, optional
        If given, also list up to this many optimal paths.
    """
    T, D, t_min, d, best = _optimum(network, query)
    tight = _tight_edges(network, T, D, query.targets)
    tight.sort(key=lambda e: D[e[0]])

    n = network.node_count
    logw = np.full(n, -np.inf)
    count = [0] * n
    for s in query.support:
        logw[s] = math.log(query.rho[s])
        count[s] = 1
    # Tight edges raise the jump label by one, so sorting by D[src] is a topological order.
    incoming: dict[int, list] = {}
    for a, b, wk in tight:
        incoming.setdefault(b, []).append((a, wk))
    for v in sorted(incoming, key=lambda v: D[v]):
        terms = [logw[a] + math.log(wk) for a, wk in incoming[v]]
        logw[v] = logsumexp(terms)
        count[v] = sum(count[a] for a, _ in incoming[v])

    log_lam = float(logsumexp([logw[t] for t in best]))
    r = network.exponent()
    log_a = log_constant(log_lam, d, r)
    paths, truncated = (), False
    if enumerate_cap is not None:
        paths, truncated = enumerate_optimal_paths(network, query, enumerate_cap)
        paths = tuple(paths)
    return GeodesicSummary(
        t_min=t_min,
        d=d,
        Lambda=_safe_exp(log_lam),
        log_Lambda=log_lam,
        r=r,
        A=_safe_exp(log_a),
        log_A=log_a,
        path_count=int(sum(count[t] for t in best)),
        mode=network.mode.value,
        truncated=truncated,
        paths=paths,
    )


def _safe_exp(x):
    return math.exp(x) if x < 709.0 else math.inf


def enumerate_optimal_paths(network: Network, query: Query, cap: int) -> PathEnumeration:
    """List the optimal paths in lexicographic order of their node sequences.

    At most ``cap`` paths are returned; ``truncated`` is set when more exist.
    """
    T, D, t_min, d, best = _optimum(network, query)
    tight = _tight_edges(network, T, D, query.targets)
    succ: dict[int, list] = {}
    pred: dict[int, list] = {}
    for a, b, wk in tight:
        succ.setdefault(a, []).append((b, wk))
        pred.setdefault(b, []).append(a)
    for lst in succ.values():
        lst.sort()
    # Nodes from which an optimal target is reachable through tight edges.
    useful = set(best)
    stack = list(best)
    while stack:
        v = stack.pop()
        for a in pred.get(v, ()):
            if a not in useful:
                useful.add(a)
                stack.append(a)
    best_set = set(best)
    t0_of = {}
    if network.mode is Mode.GENERAL:
        for a, b, w in zip(network.src, network.dst, network.waiting):
            t0_of[(int(a), int(b))] = w.t0

    out = []
    truncated = False

    def walk(path, weight):
        nonlocal truncated
        if truncated:
            return
        v = path[-1]
        if len(path) - 1 == d:
            if v in best_set:
                if len(out) == cap:
                    truncated = True
                    return
                t0 = sum(t0_of.get((path[i], path[i + 1]), 0.0) for i in range(d))
                out.append(PathRecord(tuple(path), d, t0, weight))
            return
        for b, wk in succ.get(v, ()):
            if b in useful:
                path.append(b)
                walk(path, weight * wk)
                path.pop()
                if truncated:
                    return

    for s in query.support:
        if int(s) in useful:
            walk([int(s)], 1.0)
            if truncated:
                break
    return PathEnumeration(out, truncated)


def brute_force_lambda(network: Network, query: Query, max_len: int):
    """Recompute ``(t_min, d, Lambda)`` by listing every walk of up to ``max_len`` jumps.

    Exponential in ``max_len``; intended as a test oracle on small graphs.

    Raises
    ------
    NumericalError
        If more than ten million walks would be visited.
    ValidationError
        If no target is reached within ``max_len`` jumps.
    """
    src, dst, w, t0 = _positive_edges(network)
    adj: dict[int, list] = {}
    for a, b, wk, tk in zip(src, dst, w, t0):
        adj.setdefault(int(a), []).append((int(b), float(wk), float(tk)))
    targets = set(query.targets)
    hits = []
    visited = 0
    for s in query.support:
        stack = [(int(s), 0, 0.0, float(query.rho[s]))]
        while stack:
            v, length, tsum, prod = stack.pop()
            visited += 1
            if visited > BRUTE_FORCE_LIMIT:
                raise NumericalError("walk enumeration exceeded ten million walks", code="enumeration_limit")
            if length > 0 and v in targets:
                hits.append((tsum, length, prod))
            if length < max_len:
                for b, wk, tk in adj.get(v, ()):
                    stack.append((b, length + 1, tsum + tk, prod * wk))
    if not hits:
        raise ValidationError(f"no target reached within {max_len} jumps", code="unreachable_target")
    t_min = min(h[0] for h in hits)
    d = min(h[1] for h in hits if _time_eq(h[0], t_min))
    lam = math.fsum(h[2] for h in hits if _time_eq(h[0], t_min) and h[1] == d)
    return float(t_min), int(d), lam
