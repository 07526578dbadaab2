"""Trajectory simulation of searchers and extreme-order-statistic estimation.

Markov networks are simulated through their jump-chain form: the next node
is drawn from ``pi(i, .)`` and then the waiting time from the edge's law by
survival inversion.  For exponential holding times this has the same law as
the usual Gillespie step.

Each walker draws from its own counter-based stream keyed by
``(seed, replicate, walker)``, so every estimate is a pure function of the
seed and the sample indices.  Work is cut into a fixed grid of
(replicate-chunk, walker-block) tasks that does not depend on ``workers``;
the compiled kernels release the GIL and run on a thread pool.

When estimating ``T_{k,N}`` a block keeps its running k smallest hit times
and stops any walker whose clock passes the block's current k-th value.  A
block's k-th value can only be larger than the global one, so aborted
walkers are never among the k fastest and the estimate is unchanged.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import SimulationError, ValidationError
from .network import Mode, Network, Query, validate
from .rng import replicate_key, seed_key, uniform, walker_key

__all__ = [
    "SimConfig",
    "McEstimate",
    "SimArrays",
    "sample_fpt",
    "sample_fpts",
    "estimate_fpt",
    "sample_extreme",
    "sample_conditional_mortal",
]

HIT, ABORTED, CENSORED, DOOMED, GUARD = 0, 1, 2, 3, 4
JUMP_GUARD = 1_000_000_000
WALKER_BLOCK = 16384
MAX_TASKS = 64


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``time_cap`` censors any walker still searching at that time; it must be
    set when walkers can get trapped away from the target.
    """

    seed: int = 0
    workers: int = 1
    N: int = 1
    replicates: int = 1
    time_cap: float | None = None
    early_abort: bool = True

    def __post_init__(self):
        if self.workers < 1 or self.N < 1 or self.replicates < 1:
            raise ValueError("workers, N and replicates must be positive")
        if self.time_cap is not None and not self.time_cap > 0:
            raise ValueError("time_cap must be positive")


@dataclass
class McEstimate:
    """Sample mean/variance with ``stderr = std / sqrt(count)``.

    ``samples`` holds the raw values (``inf`` marks a censored sample).
    Statistics use the uncensored samples; ``censored_fraction`` says how
    many were left out.
    """

    mean: float
    variance: float
    stderr: float
    count: int
    censored_fraction: float
    samples: np.ndarray = field(default=None, repr=False)
    stats: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_samples(cls, samples, values=None, stats=None):
        samples = np.asarray(samples, dtype=float)
        values = samples if values is None else np.asarray(values, dtype=float)
        ok = np.isfinite(values)
        n = int(ok.sum())
        if n == 0:
            mean = var = se = math.nan
        else:
            v = values[ok]
            mean = float(v.mean())
            var = float(v.var(ddof=1)) if n > 1 else math.nan
            se = math.sqrt(var / n) if n > 1 else math.nan
        cf = 1.0 - n / values.size if values.size else 0.0
        return cls(mean, var, se, n, cf, samples, stats or {})

    def ecdf(self, t):
        """Empirical CDF of ``samples`` (censored samples count as larger than any t)."""
        s = np.sort(self.samples)
        return np.searchsorted(s, np.asarray(t, dtype=float), side="right") / s.size

    def to_dict(self):
        return {"mean": self.mean, "variance": self.variance, "stderr": self.stderr,
                "count": self.count, "censored_fraction": self.censored_fraction}


# ---------------------------------------------------------------------------
# Flattened network for the kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimArrays:
    indptr: np.ndarray
    dst: np.ndarray
    cum: np.ndarray
    kind: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    is_target: np.ndarray
    doomed: np.ndarray
    start_nodes: np.ndarray
    start_cum: np.ndarray

    @classmethod
    def build(cls, network: Network, query: Query) -> "SimArrays":
        validate(network, query).raise_if_failed()
        n = network.node_count
        indptr = np.asarray(network.indptr, dtype=np.int64)
        if network.mode is Mode.MARKOV:
            q = network.out_rate
            prob = network.rate / q[network.src]
            kind = np.zeros(network.edge_count, dtype=np.int64)
            params = np.zeros((network.edge_count, 3))
            params[:, 0] = q[network.src]
        else:
            prob = np.asarray(network.prob, dtype=float)
            kind = np.array([w.code for w in network.waiting], dtype=np.int64)
            params = np.array([w.params() for w in network.waiting], dtype=float).reshape(-1, 3)
        cum = np.empty(network.edge_count)
        for i in range(n):
            lo, hi = indptr[i], indptr[i + 1]
            if hi > lo:
                c = np.cumsum(prob[lo:hi])
                cum[lo:hi] = c / c[-1]
                cum[hi - 1] = 1.0
        tmask = query.target_mask
        doomed = ~network.can_reach(query.targets) & ~tmask
        support = query.support
        scum = np.cumsum(query.rho[support])
        scum = scum / scum[-1]
        scum[-1] = 1.0
        return cls(indptr, np.asarray(network.dst, dtype=np.int64), cum, kind,
                   np.ascontiguousarray(params[:, 0]), np.ascontiguousarray(params[:, 1]),
                   np.ascontiguousarray(params[:, 2]), tmask.copy(), doomed,
                   support.astype(np.int64), scum)

    def args(self):
        return (self.indptr, self.dst, self.cum, self.kind, self.p0, self.p1, self.p2,
                self.is_target, self.doomed, self.start_nodes, self.start_cum)


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True, inline="always")
def _wait(kind, p0, p1, p2, u):
    if kind == 0:
        return -math.log(u) / p0
    if kind == 1:
        return p0 + (-math.log(u) / p1) ** (1.0 / p2)
    return p1 * math.expm1(-math.log(u) / p0)


@njit(cache=True, nogil=True, inline="always")
def _walk(indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum,
          key, ctr, limit):
    """Run one walker until it hits, passes ``limit`` or is trapped.

    Returns ``(time, status)``; on ABORTED the time is the first clock
    reading beyond ``limit``.
    """
    u = uniform(key, ctr)
    ctr += 1
    j = 0
    last = start_nodes.size - 1
    while j < last and start_cum[j] < u:
        j += 1
    node = start_nodes[j]
    t = 0.0
    jumps = 0
    while True:
        if is_target[node]:
            return t, HIT
        if doomed[node]:
            return math.inf, DOOMED
        if jumps >= JUMP_GUARD:
            return t, GUARD
        lo = indptr[node]
        hi = indptr[node + 1]
        u1 = uniform(key, ctr)
        u2 = uniform(key, ctr + 1)
        ctr += 2
        e = lo
        while e < hi - 1 and cum[e] < u1:
            e += 1
        t += _wait(kind[e], p0[e], p1[e], p2[e], u2)
        if t > limit:
            return t, ABORTED
        node = dst[e]
        jumps += 1


@njit(cache=True, nogil=True)
def _fpt_block(arrs, root, rep, w0, w1, cap, out_t, out_s):
    indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum = arrs
    rkey = replicate_key(root, rep)
    for w in range(w0, w1):
        key = walker_key(rkey, w)
        t, s = _walk(indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum,
                         key, 0, cap)
        if s == ABORTED:
            s = CENSORED
            t = math.inf
        out_t[w - w0] = t
        out_s[w - w0] = s


@njit(cache=True, nogil=True)
def _extreme_block(arrs, root, r0, r1, w0, w1, k, cap, abort, out_top, out_counts):
    indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum = arrs
    for r in range(r0, r1):
        rkey = replicate_key(root, r)
        top = np.full(k, math.inf)
        counts = np.zeros(5, dtype=np.int64)
        for w in range(w0, w1):
            key = walker_key(rkey, w)
            limit = cap
            if abort and top[k - 1] < limit:
                limit = top[k - 1]
            t, s = _walk(indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum,
                         key, 0, limit)
            if s == ABORTED and t > cap:
                s = CENSORED
            counts[s] += 1
            if s == GUARD:
                break
            if s == HIT and t < top[k - 1]:
                i = k - 1
                while i > 0 and top[i - 1] > t:
                    top[i] = top[i - 1]
                    i -= 1
                top[i] = t
        out_top[r - r0, :] = top
        out_counts[r - r0, :] = counts


@njit(cache=True, nogil=True)
def _mortal_block(arrs, root, gamma, rep, w0, w1, out_t, out_s):
    indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum = arrs
    rkey = replicate_key(root, rep)
    for w in range(w0, w1):
        key = walker_key(rkey, w)
        sigma = -math.log(uniform(key, 0)) / gamma
        t, s = _walk(indptr, dst, cum, kind, p0, p1, p2, is_target, doomed, start_nodes, start_cum,
                         key, 1, sigma)
        out_t[w - w0] = t if s == HIT else math.inf
        out_s[w - w0] = s


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------


def _split(n, parts):
    edges = np.linspace(0, n, parts + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run(tasks, workers):
    if workers == 1 or len(tasks) == 1:
        for fn in tasks:
            fn()
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(fn) for fn in tasks]:
            fut.result()


def _cap(time_cap):
    return math.inf if time_cap is None else float(time_cap)


def _walker_grid(n):
    return _split(n, min(MAX_TASKS, max(1, -(-n // WALKER_BLOCK))))


def sample_fpts(network: Network, query: Query, n: int, seed: int = 0, replicate: int = 0,
                time_cap: float | None = None, workers: int = 1) -> np.ndarray:
    """First passage times of walkers ``0 .. n-1`` of one replicate stream.

    Censored walkers are reported as ``inf``.

    Raises
    ------
    SimulationError
        If a walker is trapped away from the target and ``time_cap`` is None,
        or a walker exceeds the jump guard.
    """
    arrs = SimArrays.build(network, query).args()
    root = seed_key(seed)
    cap = _cap(time_cap)
    out_t = np.empty(n)
    out_s = np.empty(n, dtype=np.int64)
    tasks = [(lambda a=a, b=b: _fpt_block(arrs, root, replicate, a, b, cap, out_t[a:b], out_s[a:b]))
             for a, b in _walker_grid(n)]
    _run(tasks, workers)
    _check_status(out_s, time_cap)
    return out_t


def _check_status(status, time_cap):
    if np.any(status == GUARD):
        raise SimulationError("a walker exceeded the jump guard", code="jump_guard")
    if time_cap is None and np.any(status == DOOMED):
        raise SimulationError("a walker was trapped away from the target; set time_cap",
                              code="trapped_walker")
    if time_cap is not None and np.any(status == DOOMED):
        status[status == DOOMED] = CENSORED


def sample_fpt(network: Network, query: Query, seed: int = 0, replicate: int = 0, index: int = 0,
               time_cap: float | None = None) -> float:
    """One first passage time from stream ``(seed, replicate, index)``; ``inf`` if censored."""
    arrs = SimArrays.build(network, query).args()
    out_t = np.empty(1)
    out_s = np.empty(1, dtype=np.int64)
    _fpt_block(arrs, seed_key(seed), replicate, index, index + 1, _cap(time_cap), out_t, out_s)
    _check_status(out_s, time_cap)
    return float(out_t[0])


def estimate_fpt(network: Network, query: Query, n: int, seed: int = 0, m: float = 1.0,
                 time_cap: float | None = None, workers: int = 1) -> McEstimate:
    """Estimate ``E[tau^m]`` from ``n`` independent walkers."""
    t = sample_fpts(network, query, n, seed=seed, time_cap=time_cap, workers=workers)
    return McEstimate.from_samples(t, t ** m)


def sample_extreme(network: Network, query: Query, N: int, k: int, config: SimConfig) -> McEstimate:
    """Per-replicate samples of the k-th fastest of ``N`` first passage times.

    Aggregation is over replicates; ``samples`` gives the empirical law of
    ``T_{k,N}`` and ``stats`` holds walker outcome counts.
    """
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    arrs = SimArrays.build(network, query).args()
    root = seed_key(config.seed)
    cap = _cap(config.time_cap)
    R = config.replicates
    wgrid = _walker_grid(N)
    rgrid = _split(R, max(1, min(R, MAX_TASKS // len(wgrid))))
    tops = np.empty((len(wgrid), R, k))
    counts = np.zeros((len(wgrid), R, 5), dtype=np.int64)
    tasks = []
    for bi, (w0, w1) in enumerate(wgrid):
        for r0, r1 in rgrid:
            tasks.append(lambda bi=bi, w0=w0, w1=w1, r0=r0, r1=r1: _extreme_block(
                arrs, root, r0, r1, w0, w1, k, cap, config.early_abort,
                tops[bi, r0:r1], counts[bi, r0:r1]))
    _run(tasks, config.workers)
    total = counts.sum(axis=0)
    if np.any(total[:, GUARD]):
        raise SimulationError("a walker exceeded the jump guard", code="jump_guard")
    if config.time_cap is None and np.any(total[:, DOOMED]):
        raise SimulationError("a walker was trapped away from the target; set time_cap",
                              code="trapped_walker")
    merged = np.sort(tops.transpose(1, 0, 2).reshape(R, -1), axis=1)[:, k - 1]
    stats = {name: int(total[:, code].sum())
             for name, code in (("hit", HIT), ("aborted", ABORTED), ("censored", CENSORED),
                                ("trapped", DOOMED))}
    return McEstimate.from_samples(merged, stats=stats)


def sample_conditional_mortal(network: Network, query: Query, gamma: float, m: float,
                              config: SimConfig) -> McEstimate:
    """Estimate ``E[tau^m | tau < sigma]`` with ``sigma ~ Exponential(gamma)``.

    Each walker draws its own ``sigma`` and is stopped once its clock passes
    it; ``N * replicates`` walkers are simulated.  ``censored_fraction`` is
    the fraction inactivated before reaching the target.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    arrs = SimArrays.build(network, query).args()
    root = seed_key(config.seed)
    N, R = config.N, config.replicates
    out_t = np.empty((R, N))
    out_s = np.empty((R, N), dtype=np.int64)
    tasks = []
    for r in range(R):
        for a, b in _walker_grid(N):
            tasks.append(lambda r=r, a=a, b=b: _mortal_block(
                arrs, root, float(gamma), r, a, b, out_t[r, a:b], out_s[r, a:b]))
    _run(tasks, config.workers)
    if np.any(out_s == GUARD):
        raise SimulationError("a walker exceeded the jump guard", code="jump_guard")
    t = out_t.reshape(-1)
    if not np.isfinite(t).any():
        raise SimulationError("no walker reached the target before inactivation; "
                              "increase sample budget or lower gamma", code="null_conditioning")
    return McEstimate.from_samples(t, t ** m)
