"""Random network ensembles and convergence sweeps.

Instances have ``V`` nodes and exactly ``5V`` distinct directed edges with
i.i.d. rates uniform on ``(0, 1]``.  A uniformly drawn edge set almost always
contains nodes with no way out, and a searcher that wanders into one never
arrives, which makes every passage-time moment infinite.  By default the
edge set is therefore built as a random Hamiltonian cycle (``V`` edges,
which makes the graph strongly connected) plus ``4V`` further edges drawn
uniformly from the remaining ordered pairs.  ``strongly_connected=False``
gives the plain uniform construction.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .asymptotics import ExtremeLaw, extreme_law
from .errors import ValidationError
from .exact import ExactSolver
from .geodesic import geodesic_summary
from .network import Network, Query

__all__ = ["EnsembleSpec", "SweepResult", "generate", "convergence_sweep", "hop_distances"]

EDGES_PER_NODE = 5
RETRY_BUDGET = 100


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of one random instance.

    ``rate_law`` is fixed to ``"uniform"``: rates are i.i.d. on ``(0, 1]``.
    """

    V: int
    target_distance: int
    seed: int = 0
    rate_law: str = "uniform"
    strongly_connected: bool = True

    def __post_init__(self):
        if self.target_distance < 1:
            raise ValueError("target_distance must be at least 1")
        if self.V < self.target_distance + 1:
            raise ValueError(f"need V >= target_distance + 1, got V={self.V}")
        if self.V < EDGES_PER_NODE + 1:
            raise ValueError(f"need V >= {EDGES_PER_NODE + 1} to place {EDGES_PER_NODE}V distinct edges")
        if self.rate_law != "uniform":
            raise ValueError(f"unsupported rate law {self.rate_law!r}")


def _pair(k, V):
    """Map ``k`` in ``[0, V(V-1))`` to the k-th ordered pair without self-loop."""
    i = k // (V - 1)
    j = k % (V - 1)
    return i, j + (j >= i)


def _edge_set(rng, V, strongly_connected):
    E = EDGES_PER_NODE * V
    if not strongly_connected:
        src, dst = _pair(rng.choice(V * (V - 1), size=E, replace=False), V)
        return src, dst
    perm = rng.permutation(V)
    cyc_src, cyc_dst = perm, np.roll(perm, -1)
    cyc = set(zip(cyc_src.tolist(), cyc_dst.tolist()))
    # V extra candidates cover the at most V collisions with the cycle.
    s, d = _pair(rng.choice(V * (V - 1), size=E, replace=False), V)
    keep = np.array([(a, b) not in cyc for a, b in zip(s.tolist(), d.tolist())])
    s, d = s[keep][:E - V], d[keep][:E - V]
    return np.concatenate([cyc_src, s]), np.concatenate([cyc_dst, d])


def hop_distances(network: Network, sources=None) -> np.ndarray:
    """Unweighted jump distances (``inf`` when unreachable)."""
    n = network.node_count
    adj = csr_matrix((np.ones(network.edge_count), (network.src, network.dst)), shape=(n, n))
    return shortest_path(adj, method="D", unweighted=True, indices=sources)


def generate(spec: EnsembleSpec):
    """Draw ``(network, query)`` whose source-target jump distance is ``target_distance``.

    A random ordered pair is tried on each of up to 100 fresh graphs; if none
    has the requested distance, a pair is chosen uniformly among those at that
    distance in the last graph.

    Raises
    ------
    ValidationError
        If the last graph has no pair at the requested distance.
    """
    rng = np.random.default_rng(spec.seed)
    V, d = spec.V, spec.target_distance
    for _ in range(RETRY_BUDGET):
        src, dst = _edge_set(rng, V, spec.strongly_connected)
        rates = 1.0 - rng.random(src.size)
        net = Network.markov(V, zip(src.tolist(), dst.tolist(), rates.tolist()))
        s, t = _pair(int(rng.integers(V * (V - 1))), V)
        if hop_distances(net, [s])[0, t] == d:
            return net, Query.point(V, int(s), [int(t)])
    dist = hop_distances(net)
    cand = np.argwhere(dist == d)
    if cand.size == 0:
        raise ValidationError(f"no node pair at distance {d} after {RETRY_BUDGET} graphs",
                              code="distance_unattainable")
    s, t = cand[rng.integers(len(cand))]
    return net, Query.point(V, int(s), [int(t)])


@dataclass
class SweepResult:
    """Exact vs asymptotic mean of ``T_{k,N}`` and rescaled densities.

    ``table`` rows are ``(N, exact, theory, ratio)``.  ``density[N]`` holds
    the density of ``Z = (T_{k,N} - t_min) / s_N`` on ``z``, with ``s_N`` the
    asymptotic scale; ``limit_density`` is the large-N law of ``Z``.
    """

    k: int
    exponent: float
    table: np.ndarray
    z: np.ndarray
    density: dict = field(default_factory=dict)
    limit_density: np.ndarray = None

    @property
    def ratio(self):
        return self.table[:, 3]

    def write_table_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["N", "exact", "theory", "ratio"])
            for row in self.table:
                w.writerow([f"{int(row[0])}"] + [_fmt(x) for x in row[1:]])

    def write_density_csv(self, path):
        Ns = sorted(self.density)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["z"] + [f"density_{N}" for N in Ns] + ["weibull_density"])
            for i, z in enumerate(self.z):
                w.writerow([_fmt(z)] + [_fmt(self.density[N][i]) for N in Ns]
                           + [_fmt(self.limit_density[i])])


def _fmt(x):
    return f"{float(x):.12g}"


def convergence_sweep(source, N_grid, k: int = 1, query: Query | None = None, eps: float = 1e-10,
                      z=None, workers: int = 1) -> SweepResult:
    """Compare exact and asymptotic means of ``T_{k,N}`` over ``N_grid``.

    Parameters
    ----------
    source : EnsembleSpec or Network
        Either a spec to generate from, or a Markov network used with ``query``.
    z : array_like, optional
        Grid for the rescaled densities (default ``linspace(0, 3, 61)``).
    workers : int
        Thread count; the ``N`` values are processed independently.
    """
    if isinstance(source, EnsembleSpec):
        net, query = generate(source)
    else:
        if query is None:
            raise ValueError("query is required when a network is given")
        net = source
    summary = geodesic_summary(net, query)
    z = np.linspace(0.0, 3.0, 61) if z is None else np.asarray(z, dtype=float)
    N_grid = [int(N) for N in N_grid]

    def one(N):
        solver = ExactSolver(net, query, eps=min(eps, 1e-3))
        law = extreme_law(summary, N, k)
        exact = solver.moment(N, k, 1.0, eps=eps)
        theory = law.first_order_mean
        dens = law.scale * np.asarray(solver.extreme_pdf(N, k, law.t_min + law.scale * z))
        return (N, exact, theory, exact / theory), dens

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, N_grid))
    else:
        results = [one(N) for N in N_grid]
    limit = ExtremeLaw(log_A=0.0, d=summary.d, N=1, k=k, r=summary.r).pdf(z)
    return SweepResult(
        k=k,
        exponent=summary.exponent,
        table=np.array([row for row, _ in results], dtype=float).reshape(-1, 4),
        z=z,
        density={row[0]: dens for row, dens in results},
        limit_density=np.asarray(limit),
    )

