"""r-core extraction by peeling and by cut-off line core generation."""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .degree_model import DegreeDistribution, solve_core_threshold
from .graph_gen import (
    DegreeSequence,
    HalfEdgeTable,
    MultiGraph,
    _half_edge_vertices,
    make_rng,
    random_graph,
)


@dataclass
class CoreResult:
    vertices: np.ndarray
    residual_degrees: dict[int, int]
    peel_order: list[int]
    n: int
    h_core: float | None = None

    @property
    def size(self) -> int:
        return int(self.vertices.size)

    @property
    def fraction(self) -> float:
        return self.size / self.n if self.n else 0.0

    def to_json(self) -> dict:
        return {"core_size": self.size, "fraction": self.fraction, "h_core": self.h_core}


def peel_core(g: MultiGraph, r: int, order: np.ndarray | None = None) -> CoreResult:
    """The r-core of ``g`` by FIFO peeling.

    Degrees count multiplicity and a self-loop counts 2. ``order`` fixes the
    order in which the initially deficient vertices are queued; the core
    itself does not depend on it.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    indptr, nbrs = g.indptr.tolist(), g.indices.tolist()
    deg = g.degrees.tolist()
    alive = [True] * g.n
    scan = range(g.n) if order is None else (int(v) for v in order)
    queue = deque(v for v in scan if deg[v] < r)
    for v in queue:
        alive[v] = False
    peeled = []
    while queue:
        v = queue.popleft()
        peeled.append(v)
        for u in nbrs[indptr[v] : indptr[v + 1]]:
            if alive[u]:
                deg[u] -= 1
                if deg[u] < r:
                    alive[u] = False
                    queue.append(u)
    core = np.flatnonzero(alive)
    # residual degree: edges (with multiplicity) inside the core
    return CoreResult(core, {int(v): deg[v] for v in core}, peeled, g.n)


def generate_core_direct(
    seq: DegreeSequence, r: int, seed
) -> tuple[CoreResult, MultiGraph]:
    """Build the r-core while matching, then finish the matching uniformly.

    Half-edges of light vertices (fewer than r unmatched half-edges) are
    queued. Each step pairs the lowest-index queued half-edge with the highest
    unmatched half-edge anywhere, lowering the cut-off line to that height;
    a vertex whose unmatched count drops below r becomes light and its
    half-edges join the queue. When the queue empties the heavy vertices are
    the core, and the leftover half-edges (all at heavy vertices) are paired
    uniformly at random.
    """
    if r < 2:
        raise ValueError("r must be >= 2")
    if not isinstance(seq, DegreeSequence):
        seq = DegreeSequence(seq)
    rng = make_rng(seed)
    vertex_of = _half_edge_vertices(seq.degrees)
    n_half = vertex_of.size
    heights = rng.random(n_half)
    start = np.concatenate([[0], np.cumsum(seq.degrees)]).tolist()
    owner = vertex_of.tolist()

    matched = [-1] * n_half
    free = seq.degrees.tolist()  # unmatched half-edges per vertex
    light = [d < r for d in free]
    queue = [j for j in range(n_half) if light[owner[j]]]
    heapq.heapify(queue)
    order = np.argsort(-heights, kind="stable").tolist()
    h = heights.tolist()
    high = 0
    h_core = 1.0
    peel_order = [v for v in range(seq.n) if light[v]]

    while queue:
        a = heapq.heappop(queue)
        if matched[a] >= 0:
            continue  # consumed earlier as someone's partner
        matched[a] = a
        while matched[order[high]] >= 0:
            high += 1
        b = order[high]
        matched[a], matched[b] = b, a
        h_core = h[b]
        free[owner[a]] -= 1
        v = owner[b]
        free[v] -= 1
        if not light[v] and free[v] < r:
            light[v] = True
            peel_order.append(v)
            for j in range(start[v], start[v + 1]):
                if matched[j] < 0:
                    heapq.heappush(queue, j)

    rest = np.array([j for j in range(n_half) if matched[j] < 0], dtype=np.int64)
    perm = rng.permutation(rest)
    m = np.asarray(matched, dtype=np.int64)
    m[perm[0::2]] = perm[1::2]
    m[perm[1::2]] = perm[0::2]
    table = HalfEdgeTable(vertex_of, heights, m)
    g = MultiGraph(seq.n, table.edges())

    core = np.flatnonzero(~np.asarray(light))
    residual = {int(v): free[v] for v in core}
    return CoreResult(core, residual, peel_order, seq.n, h_core), g


def core_size_check(
    dist: DegreeDistribution, n: int, r: int, replicas: int, seed, method: str = "uniform"
) -> dict:
    """Compare simulated |K_n|/n over ``replicas`` graphs with rho_r(hhat).

    Graph i is seeded like replica i of a ``core_size`` experiment with
    master seed ``seed``. Raises ``NoCoreError`` when the analytic condition
    fails.
    """
    from .harness import derive_seed

    thr = solve_core_threshold(dist, r)
    fracs = []
    for i in range(replicas):
        g = random_graph(dist, n, derive_seed(derive_seed(seed, i), 0), method)
        fracs.append(peel_core(g, r).fraction)
    fracs = np.asarray(fracs)
    return {
        "r": r,
        "n": n,
        "replicas": replicas,
        "rho": thr.rho,
        "hhat": thr.hhat,
        "fractions": fracs.tolist(),
        "mean_fraction": float(fracs.mean()) if replicas else float("nan"),
        "std_fraction": float(fracs.std(ddof=1)) if replicas > 1 else 0.0,
    }
