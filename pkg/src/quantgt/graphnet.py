"""
Weight-balanced directed communication networks.

Graphs are immutable values. A link ``(i, j, w)`` means node ``j`` receives
from node ``i`` with weight ``w``, i.e. ``a_ji = w`` in the weight matrix.
Bidirectional graphs store each edge as two opposing links with equal weight.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "GraphError",
    "WeightedDigraph",
    "LaplacianSpectrum",
    "SwitchingSchedule",
    "GraphSpec",
    "Topology",
    "gen_exponential",
    "gen_geometric",
    "gen_erdos_renyi",
    "gen_complete",
    "gen_cycle",
    "assign_weights",
    "laplacian",
    "spectrum",
    "is_weight_balanced",
    "is_connected",
    "drop_link",
    "topology_at",
    "write_edgelist",
    "read_edgelist",
]

MAX_RETRIES = 100
BALANCE_TOL = 1e-12


class GraphError(ValueError):
    """Raised when a graph cannot be built or violates connectivity/balance."""


@dataclass(frozen=True)
class WeightedDigraph:
    n: int
    links: tuple[tuple[int, int, float], ...]
    directed: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"node count must be positive, got {self.n}")
        seen = set()
        for i, j, w in self.links:
            if i == j:
                raise GraphError(f"self-link at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"link ({i}, {j}) out of range for n={self.n}")
            if not w > 0:
                raise GraphError(f"link ({i}, {j}) has non-positive weight {w}")
            if (i, j) in seen:
                raise GraphError(f"duplicate link ({i}, {j})")
            seen.add((i, j))

    def weight_matrix(self) -> np.ndarray:
        """Dense matrix with ``A[j, i] = w`` for every link ``i -> j``."""
        A = np.zeros((self.n, self.n))
        for i, j, w in self.links:
            A[j, i] = w
        return A

    def in_weights(self) -> np.ndarray:
        s = np.zeros(self.n)
        for _, j, w in self.links:
            s[j] += w
        return s

    def out_weights(self) -> np.ndarray:
        s = np.zeros(self.n)
        for i, _, w in self.links:
            s[i] += w
        return s

    def out_neighbors(self, i: int) -> list[int]:
        return sorted(j for a, j, _ in self.links if a == i)

    def in_degrees(self) -> np.ndarray:
        return np.bincount([j for _, j, _ in self.links], minlength=self.n)

    def out_degrees(self) -> np.ndarray:
        return np.bincount([i for i, _, _ in self.links], minlength=self.n)

    def link_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((i, j) for i, j, _ in self.links)


@dataclass(frozen=True)
class LaplacianSpectrum:
    eigenvalues: np.ndarray
    lambda2_real_abs: float


@dataclass(frozen=True)
class SwitchingSchedule:
    """When and how the network changes.

    ``period=None`` means a static network. ``mode`` is ``"reweight"`` (same
    links, redrawn weights) or ``"resample"`` (redraw links and weights).
    """

    period: int | None = None
    mode: str = "reweight"
    seed: int = 0

    def __post_init__(self):
        if self.period is not None and self.period < 1:
            raise GraphError(f"switching period must be a positive integer, got {self.period}")
        if self.mode not in ("reweight", "resample"):
            raise GraphError(f"unknown switching mode {self.mode!r}")

    def epoch(self, k: int) -> int:
        return 0 if self.period is None else k // self.period


# --------------------------------------------------------------------------
# generators


def _from_undirected(n, pairs, weight=1.0):
    links = []
    for i, j in sorted(pairs):
        links.append((i, j, weight))
        links.append((j, i, weight))
    return WeightedDigraph(n, tuple(links), directed=False)


def gen_exponential(n: int) -> WeightedDigraph:
    """Exponential digraph: node ``i`` sends to ``(i + 2**j) mod n``, ``j < log2(n)``."""
    if n < 2 or n & (n - 1):
        raise GraphError(f"exponential graph needs a power-of-two node count >= 2, got {n}")
    q = n.bit_length() - 1
    links = []
    for i in range(n):
        # n=2 gives offset 1 once; set() avoids duplicates in general
        for j in sorted({(i + 2**s) % n for s in range(q)}):
            links.append((i, j, 1.0))
    return WeightedDigraph(n, tuple(links), directed=True)


def gen_complete(n: int) -> WeightedDigraph:
    return _from_undirected(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def gen_cycle(n: int) -> WeightedDigraph:
    """Directed ring ``i -> i+1 mod n`` with unit weights."""
    if n < 2:
        raise GraphError("a cycle needs at least 2 nodes")
    if n == 2:
        return WeightedDigraph(2, ((0, 1, 1.0), (1, 0, 1.0)))
    return WeightedDigraph(n, tuple((i, (i + 1) % n, 1.0) for i in range(n)))


def gen_geometric(n: int, radius: float, seed=None, max_retries: int = MAX_RETRIES) -> WeightedDigraph:
    """Random geometric graph on the unit square, resampled until connected."""
    if n < 2:
        raise GraphError(f"geometric graph needs n >= 2, got {n}")
    if not 0 < radius <= math.sqrt(2):
        raise GraphError(f"radius must lie in (0, sqrt(2)], got {radius}")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        pts = rng.random((n, 2))
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if d[i, j] <= radius]
        g = _from_undirected(n, pairs)
        if is_connected(g):
            return g
    raise GraphError(
        f"no connected geometric graph with n={n}, radius={radius} after {max_retries} attempts"
    )


def gen_erdos_renyi(n: int, p: float, seed=None, max_retries: int = MAX_RETRIES) -> WeightedDigraph:
    """Undirected Erdos-Renyi graph G(n, p), stored bidirectionally, resampled until connected."""
    if n < 2:
        raise GraphError(f"Erdos-Renyi graph needs n >= 2, got {n}")
    if not 0 < p <= 1:
        raise GraphError(f"link probability must lie in (0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, 1)
    for _ in range(max_retries):
        keep = rng.random(len(iu[0])) < p
        pairs = list(zip(iu[0][keep].tolist(), iu[1][keep].tolist()))
        g = _from_undirected(n, pairs)
        if is_connected(g):
            return g
    raise GraphError(f"no connected Erdos-Renyi graph with n={n}, p={p} after {max_retries} attempts")


# --------------------------------------------------------------------------
# weights


def _offset_classes(g):
    """Group directed links by ring offset if every class is a full circulant class."""
    classes: dict[int, list[int]] = {}
    for idx, (i, j, _) in enumerate(g.links):
        classes.setdefault((j - i) % g.n, []).append(idx)
    if all(len(v) == g.n for v in classes.values()):
        return classes
    return None


def assign_weights(g: WeightedDigraph, scale: float = 0.5, seed=None) -> WeightedDigraph:
    """Weight-balanced weights with every node's incoming sum at most ``scale``.

    Bidirectional graphs get ``scale / max_degree`` per link. Directed graphs
    must have equal in- and out-degree at every node (regular digraphs) and
    get ``scale / max_degree`` on every link.

    With a ``seed``, weights are multiplied by draws in ``[0.5, 1]``: one per
    undirected edge for bidirectional graphs, one per ring offset for
    circulant digraphs, one global draw for other digraphs. Each scheme keeps
    the graph weight-balanced and under the cap.
    """
    if not 0 < scale < 1:
        raise GraphError(f"weight scale must lie in (0, 1), got {scale}")
    if not is_connected(g):
        raise GraphError("cannot weight a disconnected graph")
    indeg, outdeg = g.in_degrees(), g.out_degrees()
    if g.directed and np.any(indeg != outdeg):
        bad = int(np.flatnonzero(indeg != outdeg)[0])
        raise GraphError(
            f"directed graph is not degree-balanced at node {bad} "
            f"(in={indeg[bad]}, out={outdeg[bad]}); uniform weights cannot be weight-balanced"
        )
    base = scale / int(indeg.max())
    mult = np.ones(len(g.links))
    if seed is not None:
        rng = np.random.default_rng(seed)
        if not g.directed:
            index = {(i, j): k for k, (i, j, _) in enumerate(g.links)}
            for k, (i, j, _) in enumerate(g.links):
                if i < j:
                    u = rng.uniform(0.5, 1.0)
                    mult[k] = u
                    mult[index[(j, i)]] = u
        else:
            classes = _offset_classes(g)
            if classes is None:
                mult[:] = rng.uniform(0.5, 1.0)
            else:
                for off in sorted(classes):
                    mult[classes[off]] = rng.uniform(0.5, 1.0)
    links = tuple((i, j, float(base * u)) for (i, j, _), u in zip(g.links, mult))
    return replace(g, links=links)


# --------------------------------------------------------------------------
# analysis


def laplacian(g: WeightedDigraph) -> np.ndarray:
    """Laplacian with the stable sign convention: ``a_ij`` off-diagonal, ``-sum_j a_ij`` on the diagonal."""
    A = g.weight_matrix()
    L = A.copy()
    L[np.diag_indices(g.n)] = -A.sum(axis=1)
    return L


def spectrum(L: np.ndarray) -> LaplacianSpectrum:
    """Eigenvalues sorted by descending real part, and ``|Re lambda_2|``."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise GraphError(f"Laplacian must be square, got shape {L.shape}")
    if L.shape[0] < 2:
        raise GraphError("a 1-node Laplacian has no second eigenvalue")
    try:
        ev = np.linalg.eigvals(L)
    except np.linalg.LinAlgError as exc:
        raise GraphError(f"eigensolver did not converge: {exc}") from exc
    order = np.lexsort((-ev.imag, -ev.real))
    ev = ev[order].astype(complex)
    return LaplacianSpectrum(ev, float(abs(ev[1].real)))


def is_weight_balanced(g: WeightedDigraph, tol: float = BALANCE_TOL) -> bool:
    return bool(np.all(np.abs(g.in_weights() - g.out_weights()) <= tol))


def _reach(n, adj, start=0):
    seen = [False] * n
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return all(seen)


def is_connected(g: WeightedDigraph) -> bool:
    """Strong connectivity via forward and reverse reachability from node 0."""
    fwd = [[] for _ in range(g.n)]
    rev = [[] for _ in range(g.n)]
    for i, j, _ in g.links:
        fwd[i].append(j)
        rev[j].append(i)
    return _reach(g.n, fwd) and _reach(g.n, rev)


def drop_link(g: WeightedDigraph, i: int, j: int) -> WeightedDigraph:
    """Remove the whole link between ``i`` and ``j`` (both directions).

    Removing both directions keeps a balanced graph balanced when the two
    directions carry equal weight.
    """
    if (i, j) not in g.link_set():
        raise GraphError(f"link ({i}, {j}) does not exist")
    links = tuple(l for l in g.links if (l[0], l[1]) not in ((i, j), (j, i)))
    out = replace(g, links=links)
    if not is_connected(out):
        raise GraphError(f"removing link ({i}, {j}) disconnects the graph")
    return out


# --------------------------------------------------------------------------
# switching


@dataclass(frozen=True)
class GraphSpec:
    """Parameters of a graph family: ``kind`` in {exponential, geometric, er, complete}."""

    kind: str
    n: int
    p: float = 0.3
    radius: float = 0.45
    seed: int = 0
    scale: float = 0.5

    def __post_init__(self):
        if self.kind not in ("exponential", "geometric", "er", "complete"):
            raise GraphError(f"unknown graph kind {self.kind!r}")

    def links(self, seed=None) -> WeightedDigraph:
        seed = self.seed if seed is None else seed
        if self.kind == "exponential":
            return gen_exponential(self.n)
        if self.kind == "complete":
            return gen_complete(self.n)
        if self.kind == "geometric":
            return gen_geometric(self.n, self.radius, seed)
        return gen_erdos_renyi(self.n, self.p, seed)


def _epoch_seed(seed, epoch, stream):
    return np.random.SeedSequence([int(seed) & (2**64 - 1), int(epoch), stream])


def topology_at(schedule: SwitchingSchedule, spec: GraphSpec, k: int) -> WeightedDigraph:
    """The graph in force at iteration ``k``; a pure function of ``(seed, k // period)``."""
    if schedule.period is None:
        return assign_weights(spec.links(), spec.scale)
    e = schedule.epoch(k)
    if schedule.mode == "reweight":
        base = spec.links()
    else:
        structure = int(_epoch_seed(schedule.seed, e, 0).generate_state(1)[0])
        base = spec.links(structure)
    return assign_weights(base, spec.scale, seed=_epoch_seed(schedule.seed, e, 1))


@dataclass
class Topology:
    """A graph family plus a switching schedule, with per-epoch caching."""

    spec: GraphSpec
    schedule: SwitchingSchedule = field(default_factory=SwitchingSchedule)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def epoch(self, k: int) -> int:
        return self.schedule.epoch(k)

    def at(self, k: int) -> WeightedDigraph:
        e = self.epoch(k)
        if e not in self._cache:
            self._cache.clear()
            self._cache[e] = topology_at(self.schedule, self.spec, k)
        return self._cache[e]

    def sample(self, count: int = 16) -> list[WeightedDigraph]:
        """Realized graphs of the first ``count`` epochs (just one if static)."""
        if self.schedule.period is None:
            return [self.at(0)]
        return [topology_at(self.schedule, self.spec, e * self.schedule.period) for e in range(count)]

    def min_lambda2(self, count: int = 16) -> float:
        return min(spectrum(laplacian(g)).lambda2_real_abs for g in self.sample(count))


# --------------------------------------------------------------------------
# edge-list format


def write_edgelist(g: WeightedDigraph, path) -> None:
    lines = [f"n {g.n} directed {int(g.directed)}"]
    lines += [f"{i} {j} {w:.17g}" for i, j, w in g.links]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edgelist(path) -> WeightedDigraph:
    rows = [r.split() for r in Path(path).read_text().splitlines() if r.strip()]
    if not rows or len(rows[0]) != 4 or rows[0][0] != "n" or rows[0][2] != "directed":
        raise GraphError(f"{path}: expected header 'n <count> directed <0|1>'")
    n, directed = int(rows[0][1]), rows[0][3] == "1"
    links = []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != 3:
            raise GraphError(f"{path}:{lineno}: expected 'i j w'")
        links.append((int(r[0]), int(r[1]), float(r[2])))
    return WeightedDigraph(n, tuple(links), directed=directed)
