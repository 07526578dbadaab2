"""Finite directed networks carrying either Markov jump rates or a jump chain
with per-edge waiting-time laws.

A :class:`Network` in ``markov`` mode stores the off-diagonal generator
entries ``q(i, j)``; the diagonal is implied so that every row sums to zero.
In ``general`` mode each edge carries a jump probability ``pi(i, j)`` and a
:class:`WaitingSpec` describing how long the walker waits before making that
particular jump.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import ModeError, ValidationError

__all__ = [
    "Mode",
    "WaitingSpec",
    "Exponential",
    "ShiftedStretched",
    "Lomax",
    "Network",
    "Query",
    "Violation",
    "ValidationReport",
    "validate",
    "as_general",
    "max_rate",
]

PROB_SUM_TOL = 1e-9
RHO_SUM_TOL = 1e-12
R_TOL = 1e-12


class Mode(str, enum.Enum):
    MARKOV = "markov"
    GENERAL = "general"


# ---------------------------------------------------------------------------
# Waiting-time laws
# ---------------------------------------------------------------------------


class WaitingSpec:
    """Waiting-time distribution attached to a general-mode edge.

    Every law has an atom-free CDF that vanishes up to ``t0`` and behaves like
    ``lam * (t - t0) ** r`` just after it.  Subclasses supply closed-form
    survival inversion so that Monte Carlo sampling is a pure function of one
    uniform variate.
    """

    # Subclasses expose ``t0``, ``lam`` and ``r`` as attributes or properties.
    kind: str = ""
    code: int = -1

    def sf(self, t):
        raise NotImplementedError

    def cdf(self, t):
        return 1.0 - self.sf(t)

    def inverse_sf(self, u):
        """Return the time ``t`` with ``sf(t) == u`` for ``u`` in (0, 1]."""
        raise NotImplementedError

    def params(self) -> tuple[float, float, float]:
        """Parameters packed for the compiled sampler."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(obj: Mapping) -> "WaitingSpec":
        kind = str(obj.get("kind", "")).lower()
        try:
            if kind == "exponential":
                return Exponential(float(obj["rate"]))
            if kind in ("shifted_stretched", "shiftedstretched"):
                return ShiftedStretched(float(obj.get("t0", 0.0)), float(obj["c"]), float(obj["r"]))
            if kind == "lomax":
                return Lomax(float(obj["alpha"]), float(obj["beta"]))
        except KeyError as exc:
            raise ValidationError(f"waiting spec {kind!r} is missing parameter {exc}",
                                  code="bad_waiting_spec") from None
        raise ValidationError(f"unknown waiting kind {obj.get('kind')!r}", code="bad_waiting_spec")


@dataclass(frozen=True)
class Exponential(WaitingSpec):
    rate: float

    kind = "exponential"
    code = 0

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValidationError(f"exponential rate must be positive, got {self.rate}",
                                  code="bad_waiting_spec")

    @property
    def t0(self):
        return 0.0

    @property
    def lam(self):
        return self.rate

    @property
    def r(self):
        return 1.0

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0, 1.0, np.exp(-self.rate * np.maximum(t, 0.0)))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0, 0.0, -np.expm1(-self.rate * np.maximum(t, 0.0)))

    def inverse_sf(self, u):
        return -np.log(u) / self.rate

    def params(self):
        return (self.rate, 0.0, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class ShiftedStretched(WaitingSpec):
    """CDF ``1 - exp(-c (t - t0)^r)`` for ``t > t0``."""

    t0: float
    c: float
    r: float

    kind = "shifted_stretched"
    code = 1

    def __post_init__(self):
        ok = self.t0 >= 0 and self.c > 0 and self.r > 0
        if not ok or not all(map(math.isfinite, (self.t0, self.c, self.r))):
            raise ValidationError(
                f"shifted-stretched needs t0 >= 0, c > 0, r > 0; got {self.t0}, {self.c}, {self.r}",
                code="bad_waiting_spec")

    @property
    def lam(self):
        return self.c

    def sf(self, t):
        s = np.maximum(np.asarray(t, dtype=float) - self.t0, 0.0)
        return np.exp(-self.c * s ** self.r)

    def cdf(self, t):
        s = np.maximum(np.asarray(t, dtype=float) - self.t0, 0.0)
        return -np.expm1(-self.c * s ** self.r)

    def inverse_sf(self, u):
        return self.t0 + (-np.log(u) / self.c) ** (1.0 / self.r)

    def params(self):
        return (self.t0, self.c, self.r)

    def to_dict(self):
        return {"kind": self.kind, "t0": self.t0, "c": self.c, "r": self.r}


@dataclass(frozen=True)
class Lomax(WaitingSpec):
    """Pareto type II law with density ``alpha beta^alpha / (t + beta)^(1 + alpha)``."""

    alpha: float
    beta: float

    kind = "lomax"
    code = 2

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0) or not all(map(math.isfinite, (self.alpha, self.beta))):
            raise ValidationError(f"lomax needs alpha, beta > 0; got {self.alpha}, {self.beta}",
                                  code="bad_waiting_spec")

    @property
    def t0(self):
        return 0.0

    @property
    def lam(self):
        return self.alpha / self.beta

    @property
    def r(self):
        return 1.0

    def sf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return np.exp(-self.alpha * np.log1p(t / self.beta))

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return -np.expm1(-self.alpha * np.log1p(t / self.beta))

    def inverse_sf(self, u):
        return self.beta * np.expm1(-np.log(u) / self.alpha)

    def params(self):
        return (self.alpha, self.beta, 0.0)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "beta": self.beta}


# ---------------------------------------------------------------------------
# Network and query
# ---------------------------------------------------------------------------


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


class Network:
    """Immutable directed graph on nodes ``0 .. node_count - 1``.

    Use :meth:`markov` or :meth:`general` to build one.  Edges are stored
    sorted by ``(src, dst)``.

    Attributes
    ----------
    node_count : int
    mode : Mode
    src, dst : ndarray of int
    rate : ndarray of float or None
        Markov jump rates ``q(i, j)``.
    prob : ndarray of float or None
        General-mode jump probabilities ``pi(i, j)``.
    waiting : tuple of WaitingSpec or None
        General-mode waiting laws, aligned with ``src``.
    """

    def __init__(self, node_count, mode, src, dst, rate=None, prob=None, waiting=None):
        node_count = int(node_count)
        if node_count <= 0:
            raise ValidationError("node_count must be positive", code="bad_node_count")
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise ValidationError("src and dst lengths differ", code="bad_edges")
        if src.size and (src.min() < 0 or dst.min() < 0 or src.max() >= node_count or dst.max() >= node_count):
            raise ValidationError("edge endpoint out of range", code="node_out_of_range")
        order = np.lexsort((dst, src))
        self.node_count = node_count
        self.mode = Mode(mode)
        self.src = _frozen(src[order], np.int64)
        self.dst = _frozen(dst[order], np.int64)
        self.rate = None
        self.prob = None
        self.waiting = None
        if self.mode is Mode.MARKOV:
            rate = np.asarray(rate, dtype=float).reshape(-1)
            if rate.shape != src.shape:
                raise ValidationError("rate length does not match edges", code="bad_edges")
            self.rate = _frozen(rate[order], float)
        else:
            prob = np.asarray(prob, dtype=float).reshape(-1)
            if prob.shape != src.shape or len(waiting) != src.size:
                raise ValidationError("prob/waiting length does not match edges", code="bad_edges")
            self.prob = _frozen(prob[order], float)
            self.waiting = tuple(waiting[k] for k in order)
        self.indptr = _frozen(np.searchsorted(self.src, np.arange(node_count + 1)), np.int64)

    # -- constructors -----------------------------------------------------

    @classmethod
    def markov(cls, node_count: int, edges: Iterable[Sequence]) -> "Network":
        """Build a Markov network from ``(i, j, rate)`` triples.

        Parallel edges are merged by summing their rates.
        """
        merged: dict[tuple[int, int], float] = {}
        for i, j, q in edges:
            key = (int(i), int(j))
            merged[key] = merged.get(key, 0.0) + float(q)
        keys = list(merged)
        src = [k[0] for k in keys]
        dst = [k[1] for k in keys]
        return cls(node_count, Mode.MARKOV, src, dst, rate=[merged[k] for k in keys])

    @classmethod
    def general(cls, node_count: int, edges: Iterable[Sequence]) -> "Network":
        """Build a general network from ``(i, j, prob, WaitingSpec)`` tuples.

        Parallel edges are rejected: merging two waiting laws has no
        canonical meaning.
        """
        src, dst, prob, waiting = [], [], [], []
        seen = set()
        for i, j, p, w in edges:
            key = (int(i), int(j))
            if key in seen:
                raise ValidationError(f"parallel general-mode edge {key}", code="parallel_edge")
            seen.add(key)
            if not isinstance(w, WaitingSpec):
                w = WaitingSpec.from_dict(w)
            src.append(key[0])
            dst.append(key[1])
            prob.append(float(p))
            waiting.append(w)
        return cls(node_count, Mode.GENERAL, src, dst, prob=prob, waiting=waiting)

    # -- derived quantities -----------------------------------------------

    @property
    def edge_count(self) -> int:
        return int(self.src.size)

    @property
    def out_rate(self) -> np.ndarray:
        """Total exit rate ``q(i)`` of every node (Markov mode)."""
        if self.mode is not Mode.MARKOV:
            raise ModeError("out_rate is defined only for Markov networks")
        return np.bincount(self.src, weights=self.rate, minlength=self.node_count)

    def edge_weight(self) -> np.ndarray:
        """Per-edge factor entering path products: ``q(i,j)`` or ``pi * lam``."""
        if self.mode is Mode.MARKOV:
            return np.asarray(self.rate)
        return np.asarray(self.prob) * np.array([w.lam for w in self.waiting])

    def edge_t0(self) -> np.ndarray:
        if self.mode is Mode.MARKOV:
            return np.zeros(self.edge_count)
        return np.array([w.t0 for w in self.waiting], dtype=float)

    def exponent(self) -> float:
        """The common short-time exponent ``r`` (1 for Markov networks)."""
        if self.mode is Mode.MARKOV or not self.waiting:
            return 1.0
        return float(self.waiting[0].r)

    def generator(self) -> sparse.csr_matrix:
        """Sparse generator ``Q`` with the implied diagonal ``-q(i)``."""
        if self.mode is not Mode.MARKOV:
            raise ModeError("generator is defined only for Markov networks")
        n = self.node_count
        offdiag = sparse.csr_matrix((self.rate, (self.src, self.dst)), shape=(n, n))
        return (offdiag - sparse.diags(self.out_rate)).tocsr()

    def successors(self, i: int) -> np.ndarray:
        return self.dst[self.indptr[i]:self.indptr[i + 1]]

    def _positive_mask(self):
        w = self.rate if self.mode is Mode.MARKOV else self.prob
        return (w > 0) & (self.src != self.dst)

    def reachable_from(self, nodes: Iterable[int]) -> np.ndarray:
        """Boolean mask of nodes reachable from ``nodes`` along positive edges."""
        mask = self._positive_mask()
        adj = [[] for _ in range(self.node_count)]
        for a, b in zip(self.src[mask], self.dst[mask]):
            adj[a].append(b)
        return _bfs_mask(adj, nodes, self.node_count)

    def can_reach(self, targets: Iterable[int]) -> np.ndarray:
        """Boolean mask of nodes from which some node in ``targets`` is reachable."""
        mask = self._positive_mask()
        radj = [[] for _ in range(self.node_count)]
        for a, b in zip(self.src[mask], self.dst[mask]):
            radj[b].append(a)
        return _bfs_mask(radj, targets, self.node_count)

    def to_dict(self) -> dict:
        edges = []
        if self.mode is Mode.MARKOV:
            for a, b, q in zip(self.src, self.dst, self.rate):
                edges.append({"from": int(a), "to": int(b), "rate": float(q)})
        else:
            for a, b, p, w in zip(self.src, self.dst, self.prob, self.waiting):
                edges.append({"from": int(a), "to": int(b), "prob": float(p), "waiting": w.to_dict()})
        return {"nodes": self.node_count, "mode": self.mode.value, "edges": edges}

    def __repr__(self):
        return f"Network(node_count={self.node_count}, mode={self.mode.value!r}, edges={self.edge_count})"


def _bfs_mask(adj, seeds, n):
    seen = np.zeros(n, dtype=bool)
    queue = deque()
    for s in seeds:
        s = int(s)
        if not seen[s]:
            seen[s] = True
            queue.append(s)
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


@dataclass(frozen=True)
class Query:
    """Initial distribution over nodes plus a non-empty target set."""

    rho: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "targets", tuple(sorted({int(t) for t in self.targets})))

    @classmethod
    def point(cls, node_count: int, source: int, targets: Iterable[int]) -> "Query":
        rho = np.zeros(node_count)
        rho[source] = 1.0
        return cls(rho, tuple(targets))

    @classmethod
    def from_weights(cls, node_count: int, weights: Mapping[int, float], targets: Iterable[int],
                     tol: float = RHO_SUM_TOL) -> "Query":
        """Build from a sparse ``{node: weight}`` map, normalizing if the sum is within ``tol`` of 1."""
        rho = np.zeros(node_count)
        for k, w in weights.items():
            k = int(k)
            if not 0 <= k < node_count:
                raise ValidationError(f"rho refers to node {k} outside 0..{node_count - 1}",
                                      code="node_out_of_range")
            rho[k] += float(w)
        total = rho.sum()
        if not abs(total - 1.0) <= tol:
            raise ValidationError(f"rho sums to {total!r}, not 1", code="rho_not_normalized")
        return cls(rho / total, tuple(targets))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.rho > 0)

    @property
    def target_mask(self) -> np.ndarray:
        m = np.zeros(self.rho.size, dtype=bool)
        m[list(self.targets)] = True
        return m


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    location: object = None


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def add(self, code, message, location=None):
        self.violations.append(Violation(code, message, location))

    def raise_if_failed(self):
        if self.violations:
            first = self.violations[0]
            msg = "; ".join(f"{v.code}: {v.message}" for v in self.violations)
            raise ValidationError(msg, report=self, code=first.code)

    def to_dict(self) -> dict:
        return {"ok": self.ok,
                "violations": [{"code": v.code, "message": v.message,
                                "location": _jsonable(v.location)} for v in self.violations]}


def _jsonable(x):
    if isinstance(x, (tuple, list)):
        return [_jsonable(y) for y in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def validate(network: Network, query: Query) -> ValidationReport:
    """Check the standing assumptions on a network/query pair.

    Never raises for invalid input; every problem found is collected in the
    returned report.
    """
    rep = ValidationReport()
    n = network.node_count

    loops = np.flatnonzero(network.src == network.dst)
    for k in loops:
        rep.add("self_loop", f"self-loop on node {network.src[k]}", int(network.src[k]))

    if network.mode is Mode.MARKOV:
        bad = np.flatnonzero(~(network.rate > 0) | ~np.isfinite(network.rate))
        for k in bad:
            rep.add("nonpositive_rate", f"rate {network.rate[k]!r} on edge", (int(network.src[k]), int(network.dst[k])))
        q = network.out_rate
        resid = np.abs(network.generator().sum(axis=1).A1)
        if np.any(resid > 1e-9 * np.maximum(q, 1.0)):
            rep.add("row_sum", "generator rows do not sum to zero")
    else:
        bad = np.flatnonzero(~((network.prob > 0) & (network.prob <= 1)))
        for k in bad:
            rep.add("bad_probability", f"jump probability {network.prob[k]!r} outside (0, 1]",
                    (int(network.src[k]), int(network.dst[k])))
        sums = np.bincount(network.src, weights=network.prob, minlength=n)
        has_out = np.diff(network.indptr) > 0
        for i in np.flatnonzero(has_out & (np.abs(sums - 1.0) > PROB_SUM_TOL)):
            rep.add("prob_sum", f"jump probabilities out of node {i} sum to {sums[i]!r}", int(i))
        rs = {float(w.r) for w in network.waiting}
        if rs and max(rs) - min(rs) > R_TOL * max(rs):
            rep.add("mixed_exponent", f"waiting laws use several short-time exponents {sorted(rs)}")

    rho = query.rho
    if rho.size != n:
        rep.add("rho_size", f"rho has {rho.size} entries for {n} nodes")
        return rep
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        rep.add("negative_rho", "rho has negative or non-finite entries")
    if abs(rho.sum() - 1.0) > RHO_SUM_TOL:
        rep.add("rho_not_normalized", f"rho sums to {rho.sum()!r}")
    if not query.targets:
        rep.add("empty_targets", "target set is empty")
        return rep
    if min(query.targets) < 0 or max(query.targets) >= n:
        rep.add("node_out_of_range", "target outside node range", list(query.targets))
        return rep
    overlap = sorted(set(query.support.tolist()) & set(query.targets))
    if overlap:
        rep.add("start_on_target", f"initial distribution charges target nodes {overlap}", overlap)
    if not network.reachable_from(query.support)[list(query.targets)].any():
        rep.add("unreachable_target", "no target is reachable from the support of rho",
                list(query.targets))
    return rep


def as_general(network: Network) -> Network:
    """Rewrite a Markov network as jump chain plus exponential holding times.

    Each edge out of ``i`` gets ``pi(i, j) = q(i, j) / q(i)`` and waiting
    law ``Exponential(q(i))``.  Absorbing nodes keep no outgoing edges.
    """
    if network.mode is not Mode.MARKOV:
        raise ModeError("as_general expects a Markov network")
    q = network.out_rate
    edges = []
    for a, b, rate in zip(network.src, network.dst, network.rate):
        edges.append((a, b, rate / q[a], Exponential(float(q[a]))))
    return Network.general(network.node_count, edges)


def max_rate(network: Network) -> float:
    """Fastest total exit rate ``max_i q(i)``; 0 for an edgeless network."""
    if network.mode is not Mode.MARKOV:
        raise ModeError("max_rate is defined only for Markov networks")
    q = network.out_rate
    return float(q.max()) if q.size else 0.0
