"""Deepfake spreading on networks as a discrete-time SIR process.

A node is *infected* while it believes and forwards the fake, and *recovers*
once it detects the fake, which happens with probability ``1 - P_e`` per
step. The effective spreading rate is ``lambda = beta / gamma`` with both
read as per-step probabilities. Local containment requires ``lambda`` at or
below a structural threshold ``lambda_c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .bounds import GanSpec, exponent
from .distributions import make_rng
from .errors import DegenerateDegrees, NoEdges, PerfectFoolability

#: ``containment_requirement`` returns this when no finite exponent suffices.
INFEASIBLE = math.inf

POWER_TOL = 1e-8
POWER_MAXITER = 100_000


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0 .. node_count - 1``.

    ``edges`` is an ``(E, 2)`` integer array with ``u < v`` in every row,
    sorted lexicographically.
    """

    node_count: int
    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.node_count < 1:
            raise ValueError("a graph needs at least one node")
        if e.size and (e.min() < 0 or e.max() >= self.node_count):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        e = e[np.lexsort((e[:, 1], e[:, 0]))]
        if e.shape[0] > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise ValueError("duplicate edges are not allowed")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @property
    def edge_count(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.node_count)

    @property
    def mean_degree(self) -> float:
        return float(self.degrees.mean())

    def adjacency(self) -> sparse.csr_matrix:
        u, v = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * u.size)
        a = sparse.coo_matrix((data, (np.concatenate([u, v]), np.concatenate([v, u]))),
                              shape=(self.node_count, self.node_count))
        return a.tocsr()

    def to_edgelist(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.edges)

    @classmethod
    def from_edgelist(cls, text: str, node_count: int | None = None) -> "Graph":
        """Parse whitespace-separated ``u v`` lines; ``#`` starts a comment."""
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
            pairs.append((int(parts[0]), int(parts[1])))
        edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        if node_count is None:
            node_count = int(edges.max()) + 1 if edges.size else 1
        return cls(node_count, edges)


def make_graph(node_count: int, edges: Iterable[tuple[int, int]]) -> Graph:
    return Graph(node_count, np.array(list(edges), dtype=np.int64).reshape(-1, 2))


def complete_graph(m: int) -> Graph:
    u, v = np.triu_indices(m, k=1)
    return Graph(m, np.column_stack([u, v]))


def star_graph(leaves: int) -> Graph:
    """K_{1,leaves} with the hub at node 0."""
    return Graph(leaves + 1, np.column_stack([np.zeros(leaves, int), np.arange(1, leaves + 1)]))


def ring_lattice(nodes: int, z: int) -> Graph:
    """Each node joined to its ``z/2`` nearest neighbours on either side."""
    if z % 2 or z >= nodes:
        raise ValueError("z must be even and smaller than nodes")
    idx = np.arange(nodes)
    edges = [np.column_stack([idx, (idx + k) % nodes]) for k in range(1, z // 2 + 1)]
    return Graph(nodes, np.vstack(edges))


def gen_er(nodes: int, edge_prob: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p): one independent coin per unordered pair.

    Row ``i`` flips ``nodes - i - 1`` coins for the pairs ``(i, j > i)`` with a
    generator derived from ``(seed, i)``.
    """
    if nodes < 2:
        raise ValueError("need at least two nodes")
    if not 0 <= edge_prob <= 1:
        raise ValueError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    chunks = []
    for i in range(nodes - 1):
        rng = make_rng(seed, i)
        hits = np.flatnonzero(rng.random(nodes - i - 1) < edge_prob)
        if hits.size:
            chunks.append(np.column_stack([np.full(hits.size, i), hits + i + 1]))
    edges = np.vstack(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return Graph(nodes, edges)


def gen_ba(nodes: int, attach_m: int, seed: int) -> Graph:
    """Barabasi-Albert preferential attachment grown from a clique on ``attach_m + 1`` nodes."""
    if attach_m < 1:
        raise ValueError("attach_m must be at least 1")
    if nodes < attach_m + 1:
        raise ValueError("nodes must exceed attach_m")
    rng = make_rng(seed)
    core = attach_m + 1
    edges = [(u, v) for u in range(core) for v in range(u + 1, core)]
    # every endpoint appears once per incident edge: uniform picks are degree-biased
    ends = [x for e in edges for x in e]
    for new in range(core, nodes):
        targets: set[int] = set()
        while len(targets) < attach_m:
            targets.add(ends[int(rng.integers(len(ends)))])
        for t in sorted(targets):
            edges.append((t, new))
            ends.extend((t, new))
    return make_graph(nodes, edges)


def mean_field_threshold(g: Graph) -> float:
    """Heterogeneous mean-field SIR threshold ``<k> / (<k^2> - <k>)``."""
    k = g.degrees.astype(float)
    k1, k2 = k.mean(), (k * k).mean()
    if k2 <= k1:
        raise DegenerateDegrees(f"<k^2>={k2} <= <k>={k1}: no finite threshold")
    return float(k1 / (k2 - k1))


def spectral_radius(g: Graph, tol: float = POWER_TOL) -> float:
    """Largest adjacency eigenvalue by power iteration.

    Iterates on ``A + I`` so bipartite graphs, whose spectrum is symmetric,
    still converge, and starts from the all-ones vector.
    """
    if g.edge_count == 0:
        raise NoEdges("graph has no edges")
    a = g.adjacency()
    x = np.ones(g.node_count) / math.sqrt(g.node_count)
    est = 0.0
    for _ in range(POWER_MAXITER):
        y = a @ x + x
        norm = float(np.linalg.norm(y))
        x_new = y / norm
        new_est = float(x_new @ (a @ x_new))
        if abs(new_est - est) <= tol * max(1.0, abs(new_est)) and np.linalg.norm(x_new - x) <= math.sqrt(tol):
            return new_est
        x, est = x_new, new_est
    return est


def spectral_threshold(g: Graph) -> float:
    """``1 / lambda_max(A)``."""
    return 1.0 / spectral_radius(g)


def structural_threshold(g: Graph, method: str = "hmf") -> float:
    if method == "hmf":
        return mean_field_threshold(g)
    if method == "spectral":
        return spectral_threshold(g)
    raise ValueError(f"unknown threshold method {method!r}")


def effective_rate(beta_trans: float, pe: float) -> float:
    """Spreading rate ``beta / (1 - P_e)``; recovery is detection."""
    if pe >= 1 - 1e-12:
        raise PerfectFoolability(f"P_e={pe}: the fake is never detected")
    return beta_trans / (1.0 - pe)


def containment_requirement(n: int, beta_trans: float, lambda_c: float) -> float:
    """Smallest per-pixel exponent ``f(OPT)`` that keeps the spread local.

    Returns ``-ln(1 - beta / lambda_c) / n``, or :data:`INFEASIBLE` (``inf``)
    when ``beta >= lambda_c``: even perfect detection cannot contain it then.
    """
    if n < 1 or beta_trans < 0 or lambda_c <= 0:
        raise ValueError("need n >= 1, beta_trans >= 0, lambda_c > 0")
    ratio = beta_trans / lambda_c
    if ratio >= 1:
        return INFEASIBLE
    return -math.log1p(-ratio) / n


def f_of_opt(spec: GanSpec, regime: str = "general", test: str = "bayes") -> float:
    """Per-pixel exponent of the selected bound, so the bound is ``exp(-n f)``."""
    return exponent(spec, regime, test)


def is_containable(spec: GanSpec, n: int, beta_trans: float, lambda_c: float,
                   regime: str = "general") -> bool:
    """Containment test using the Bayesian bound as the detection error."""
    need = containment_requirement(n, beta_trans, lambda_c)
    return math.isfinite(need) and f_of_opt(spec, regime, "bayes") >= need


@dataclass(frozen=True)
class EpidemicParams:
    beta_trans: float
    gamma: float
    lambda_c: float | None = None

    def __post_init__(self):
        if not 0 <= self.beta_trans <= 1:
            raise ValueError(f"beta_trans must lie in [0, 1], got {self.beta_trans}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def rate(self) -> float:
        return self.beta_trans / self.gamma


@dataclass(frozen=True, eq=False)
class SirResult:
    """Outcome of one run; ``s``, ``i``, ``r`` hold counts at steps 0..T.

    ``final_recovered_fraction`` is the fraction ever infected. If the run
    stops at ``max_steps`` with infections still active, those nodes are
    counted as eventually recovered.
    """

    node_count: int
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    ever_infected: np.ndarray = field(repr=False)

    @property
    def duration_steps(self) -> int:
        return int(self.s.size - 1)

    @property
    def final_recovered_fraction(self) -> float:
        return float(self.node_count - self.s[-1]) / self.node_count

    @property
    def peak_infected_fraction(self) -> float:
        return float(self.i.max()) / self.node_count


def simulate_sir(g: Graph, params: EpidemicParams, initial_infected: Sequence[int],
                 max_steps: int = 10_000, seed: int = 0, _adj=None) -> SirResult:
    """Synchronous discrete-time SIR.

    Each step, every infected node independently infects each susceptible
    neighbour with probability ``beta_trans``; afterwards each node that was
    infected at the start of the step recovers with probability ``gamma``.
    Stops when nobody is infected or after ``max_steps`` steps.
    """
    initial = np.unique(np.asarray(initial_infected, dtype=np.int64))
    if initial.size == 0:
        raise ValueError("need at least one initially infected node")
    if initial.min() < 0 or initial.max() >= g.node_count:
        raise ValueError("initial infected node out of range")
    rng = make_rng(seed)
    adj = g.adjacency() if _adj is None else _adj
    n = g.node_count
    state = np.zeros(n, dtype=np.int8)  # 0 S, 1 I, 2 R
    state[initial] = 1
    infected = initial
    s_hist, i_hist, r_hist = [n - initial.size], [initial.size], [0]
    log_escape = math.log1p(-params.beta_trans) if params.beta_trans < 1 else -math.inf
    for _ in range(max_steps):
        if infected.size == 0:
            break
        if params.beta_trans > 0:
            pressure = np.asarray(adj[infected].sum(axis=0)).ravel()
            candidates = np.flatnonzero((pressure > 0) & (state == 0))
            if candidates.size:
                p_inf = -np.expm1(pressure[candidates] * log_escape)
                new = candidates[rng.random(candidates.size) < p_inf]
            else:
                new = candidates
        else:
            new = np.empty(0, dtype=np.int64)
        recovered = infected[rng.random(infected.size) < params.gamma]
        state[recovered] = 2
        state[new] = 1
        infected = np.flatnonzero(state == 1)
        s_hist.append(s_hist[-1] - new.size)
        r_hist.append(r_hist[-1] + recovered.size)
        i_hist.append(infected.size)
    return SirResult(n, np.array(s_hist), np.array(i_hist), np.array(r_hist), state > 0)


@dataclass(frozen=True)
class SweepPoint:
    beta: float
    rate: float
    mean_fraction: float
    stderr: float
    runs: int


def outbreak_sweep(g: Graph, beta_grid: Sequence[float], gamma: float, runs_per_point: int,
                   seed: int, max_steps: int = 10_000) -> list[SweepPoint]:
    """Mean final outbreak size against ``lambda = beta / gamma``.

    Run ``r`` at grid point ``j`` seeds one uniformly chosen node, with a
    generator derived from ``(seed, j, r)``.
    """
    adj = g.adjacency()
    out = []
    for j, beta in enumerate(beta_grid):
        params = EpidemicParams(float(beta), gamma)
        fractions = np.empty(runs_per_point)
        for r in range(runs_per_point):
            rng = make_rng(seed, j, r)
            start = int(rng.integers(g.node_count))
            run_seed = int(rng.integers(2**63))
            fractions[r] = simulate_sir(g, params, [start], max_steps, run_seed,
                                        _adj=adj).final_recovered_fraction
        stderr = float(fractions.std(ddof=1) / math.sqrt(runs_per_point)) if runs_per_point > 1 else 0.0
        out.append(SweepPoint(float(beta), params.rate, float(fractions.mean()), stderr, runs_per_point))
    return out


def crossing_rate(curve: Sequence[SweepPoint], level: float = 0.05) -> float | None:
    """First spreading rate at which the mean outbreak exceeds ``level``."""
    for point in sorted(curve, key=lambda p: p.rate):
        if point.mean_fraction > level:
            return point.rate
    return None
