"""Configuration-model multigraphs.

Two matching routines are provided. ``uniform`` shuffles the half-edges and
pairs them consecutively. ``cutoff_line`` gives every half-edge an i.i.d.
uniform height and repeatedly pairs the lowest-index unmatched half-edge with
the highest unmatched one; the height of that partner is the cut-off line.
Both produce a uniformly random perfect matching.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .degree_model import DegreeDistribution

METHODS = ("uniform", "cutoff_line")


class ParityError(ValueError):
    """Could not draw a degree sequence with even sum within the retry cap."""


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class DegreeSequence:
    degrees: np.ndarray

    def __post_init__(self):
        deg = np.asarray(self.degrees, dtype=np.int64)
        if deg.ndim != 1 or deg.size < 1:
            raise ValueError("a degree sequence needs at least one vertex")
        if np.any(deg < 0):
            raise ValueError("degrees must be nonnegative")
        if int(deg.sum()) % 2:
            raise ValueError("degree sum must be even")
        deg.setflags(write=False)
        object.__setattr__(self, "degrees", deg)

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def total(self) -> int:
        return int(self.degrees.sum())

    def __len__(self) -> int:
        return self.n


@dataclass
class HalfEdgeTable:
    """Half-edge j sits at ``vertex_of[j]`` with height ``height_of[j]``.

    ``matched[j]`` is the partner index, or -1 while unmatched.
    """

    vertex_of: np.ndarray
    height_of: np.ndarray
    matched: np.ndarray

    def __len__(self) -> int:
        return int(self.vertex_of.size)

    def edges(self) -> np.ndarray:
        """Vertex pairs of the matched half-edges, one row per edge."""
        j = np.nonzero(self.matched > np.arange(self.matched.size))[0]
        return np.column_stack([self.vertex_of[j], self.vertex_of[self.matched[j]]])


class MultiGraph:
    """Undirected multigraph on vertices 0..n-1; self-loops and parallel edges kept.

    Edges are stored as an (m, 2) array with ``u <= v``, sorted
    lexicographically. A self-loop contributes 2 to its vertex's degree.
    """

    def __init__(self, n: int, edges) -> None:
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint outside vertex range")
        e = np.sort(e, axis=1)
        if e.shape[0]:
            e = e[np.lexsort((e[:, 1], e[:, 0]))]
        e.setflags(write=False)
        self.n = int(n)
        self.edges = e
        self._csr = None
        self._adj = {}

    # ------------------------------------------------------------------ basic views
    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    @property
    def loops(self) -> np.ndarray:
        mask = self.edges[:, 0] == self.edges[:, 1]
        return np.bincount(self.edges[mask, 0], minlength=self.n)

    def _half_edge_csr(self):
        if self._csr is None:
            u, v = self.edges[:, 0], self.edges[:, 1]
            src = np.concatenate([u, v])
            dst = np.concatenate([v, u])
            order = np.argsort(src, kind="stable")
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
            self._csr = (indptr, dst[order])
        return self._csr

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbor of each half-edge at ``v``; repeated per multiplicity, loops twice."""
        indptr, idx = self._half_edge_csr()
        return idx[indptr[v] : indptr[v + 1]]

    @property
    def indptr(self) -> np.ndarray:
        return self._half_edge_csr()[0]

    @property
    def indices(self) -> np.ndarray:
        return self._half_edge_csr()[1]

    def adjacency(self, v: int) -> list[tuple[int, int]]:
        """(neighbor, multiplicity) pairs at ``v``; the self-loop pair counts loops."""
        nb = Counter(self.neighbors(v).tolist())
        if v in nb:
            nb[v] //= 2
        return sorted(nb.items())

    def multiplicity(self, u: int, v: int) -> int:
        c = int(np.count_nonzero(self.neighbors(u) == v))
        return c // 2 if u == v else c

    def adjacency_matrix(self, counting_mode: str = "multiplicity") -> sp.csr_matrix:
        """Sparse matrix A so that A @ x counts infected neighbors.

        ``multiplicity``: A[u, v] is the number of u-v edges and A[v, v] is twice
        the loop count. ``distinct``: 0/1 entries, diagonal dropped.
        """
        key = counting_mode
        if key not in self._adj:
            u, v = self.edges[:, 0], self.edges[:, 1]
            rows = np.concatenate([u, v])
            cols = np.concatenate([v, u])
            data = np.ones(rows.size, dtype=np.int32)
            a = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
            a.sum_duplicates()
            if counting_mode == "distinct":
                a.setdiag(0)
                a.eliminate_zeros()
                a.data[:] = 1
            elif counting_mode != "multiplicity":
                raise ValueError(f"unknown counting mode {counting_mode!r}")
            self._adj[key] = a
        return self._adj[key]

    def induced_subgraph(self, vertices: Iterable[int]) -> tuple["MultiGraph", np.ndarray]:
        """Subgraph on ``vertices`` relabelled 0..k-1, plus the old labels."""
        keep = np.unique(np.fromiter(vertices, dtype=np.int64))
        relabel = np.full(self.n, -1, dtype=np.int64)
        relabel[keep] = np.arange(keep.size)
        e = relabel[self.edges]
        e = e[(e[:, 0] >= 0) & (e[:, 1] >= 0)]
        return MultiGraph(keep.size, e), keep

    def simplify(self) -> "MultiGraph":
        """Erase self-loops and merge parallel edges."""
        e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        return MultiGraph(self.n, np.unique(e, axis=0) if e.size else e)

    # ------------------------------------------------------------------ I/O
    def to_text(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines.extend(f"{u} {v}" for u, v in self.edges.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MultiGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        n, m = int(rows[0][0]), int(rows[0][1])
        edges = [(int(a), int(b)) for a, b in rows[1:]]
        if len(edges) != m:
            raise ValueError(f"header promises {m} edges, found {len(edges)}")
        return cls(n, edges)

    def write(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def read(cls, path) -> "MultiGraph":
        return cls.from_text(Path(path).read_text())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultiGraph)
            and self.n == other.n
            and np.array_equal(self.edges, other.edges)
        )

    def __repr__(self) -> str:
        return f"MultiGraph(n={self.n}, m={self.m})"


# ---------------------------------------------------------------------- sampling


def sample_degree_sequence(
    dist: DegreeDistribution, n: int, seed, max_retries: int = 1000
) -> DegreeSequence:
    """n i.i.d. degrees from ``dist``, conditioned on an even sum by rejection."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    for _ in range(max_retries):
        deg = dist.sample(n, rng)
        if int(deg.sum()) % 2 == 0:
            return DegreeSequence(deg)
    raise ParityError(f"no even-sum degree sequence after {max_retries} draws")


def _half_edge_vertices(degrees: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(degrees.size, dtype=np.int64), degrees)


def _cutoff_line(heights: np.ndarray, matched: list, stop: int | None = None) -> tuple[float, int]:
    """Run the cut-off line algorithm in place on ``matched``.

    Stops once every half-edge with index < ``stop`` is matched (all of them
    when ``stop`` is None). Returns the last cut-off height and step count.
    """
    n_half = heights.size
    stop = n_half if stop is None else stop
    # descending height; the stable sort breaks ties by lower index
    order = np.argsort(-heights, kind="stable").tolist()
    h = heights.tolist()
    low = high = 0
    height, steps = 1.0, 0
    while True:
        while low < stop and matched[low] >= 0:
            low += 1
        if low >= stop:
            break
        matched[low] = low  # exclude the seeding half-edge from the max
        while matched[order[high]] >= 0:
            high += 1
        top = order[high]
        matched[low], matched[top] = top, low
        height = h[top]
        steps += 1
    return height, steps


def match_half_edges(degrees: np.ndarray, rng: np.random.Generator, method: str = "uniform") -> HalfEdgeTable:
    """Uniform perfect matching of the half-edges of ``degrees``, by ``method``."""
    vertex_of = _half_edge_vertices(degrees)
    n_half = vertex_of.size
    if method == "uniform":
        perm = rng.permutation(n_half)
        matched = np.empty(n_half, dtype=np.int64)
        matched[perm[0::2]] = perm[1::2]
        matched[perm[1::2]] = perm[0::2]
        heights = np.full(n_half, np.nan)
    elif method == "cutoff_line":
        heights = rng.random(n_half)
        buf = [-1] * n_half
        _cutoff_line(heights, buf)
        matched = np.asarray(buf, dtype=np.int64)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return HalfEdgeTable(vertex_of, heights, matched)


def generate(
    seq: DegreeSequence | Sequence[int],
    seed,
    method: str = "uniform",
    simplify: bool = False,
) -> tuple[MultiGraph, HalfEdgeTable]:
    """Configuration-model multigraph for ``seq``.

    ``simplify`` erases loops and multi-edges afterwards (off by default, so
    degrees are preserved exactly).
    """
    if not isinstance(seq, DegreeSequence):
        seq = DegreeSequence(seq)
    table = match_half_edges(seq.degrees, make_rng(seed), method)
    g = MultiGraph(seq.n, table.edges())
    if simplify:
        g = g.simplify()
    return g, table


def random_graph(dist: DegreeDistribution, n: int, seed, method: str = "uniform") -> MultiGraph:
    """Sample a degree sequence and a matching from one seed."""
    rng = make_rng(seed)
    seq = sample_degree_sequence(dist, n, rng)
    return generate(seq, rng, method)[0]


# ---------------------------------------------------------------------- cut-off probe


@dataclass(frozen=True)
class CutoffProbe:
    H_T: float
    steps_T: int
    removed_above: int
    half_edges_W: int


def cutoff_match_subset(
    seq: DegreeSequence | Sequence[int], W: Iterable[int], seed
) -> tuple[HalfEdgeTable, CutoffProbe]:
    """Match every half-edge at ``W`` with the cut-off line algorithm.

    Half-edges are re-indexed so that those at ``W`` come first, ordered by
    (vertex, local index), followed by the rest. Returns the partial table in
    that indexing and the terminal cut-off height.
    """
    if not isinstance(seq, DegreeSequence):
        seq = DegreeSequence(seq)
    w = np.unique(np.fromiter(W, dtype=np.int64))
    if w.size == 0:
        raise ValueError("W must be nonempty")
    in_w = np.zeros(seq.n, dtype=bool)
    in_w[w] = True
    vertices = _half_edge_vertices(seq.degrees)
    first = in_w[vertices]
    vertex_of = np.concatenate([vertices[first], vertices[~first]])
    s_w = int(first.sum())

    rng = make_rng(seed)
    heights = rng.random(vertex_of.size)
    buf = [-1] * vertex_of.size
    h_t, steps = _cutoff_line(heights, buf, stop=s_w)
    removed_above = int(np.count_nonzero(heights >= h_t)) if steps else 0
    table = HalfEdgeTable(vertex_of, heights, np.asarray(buf, dtype=np.int64))
    return table, CutoffProbe(float(h_t), steps, removed_above, s_w)


def cutoff_height_bound(M: float, k: float, eps: float, eta: float, d0: float) -> float:
    """Deficit 1 - H_T that is exceeded only with exponentially small probability.

    ``M`` bounds E D^k, ``eps`` = |W|/n, ``d0`` = E D, and ``eta`` > 0 with
    k > 1 + eta.
    """
    if not k > 1 + eta:
        raise ValueError("need k > 1 + eta")
    return 7.0 * M ** (1.0 / k) * eps ** (1.0 - (1.0 + eta) / k) / d0


def graph_stats(g: MultiGraph) -> dict:
    e = g.edges
    loops = int(np.count_nonzero(e[:, 0] == e[:, 1]))
    nonloop = e[e[:, 0] != e[:, 1]]
    if nonloop.size:
        _, counts = np.unique(nonloop, axis=0, return_counts=True)
        parallel = int(np.count_nonzero(counts >= 2))
    else:
        parallel = 0
    hist = np.bincount(g.degrees) if g.n else np.zeros(0, dtype=np.int64)
    return {
        "n": g.n,
        "edges": g.m,
        "loops": loops,
        "parallel_pairs": parallel,
        "degree_histogram": {int(k): int(c) for k, c in enumerate(hist) if c},
    }


def expected_loops(degrees: Sequence[int]) -> float:
    """E[# self-loops] under the uniform matching: sum D_i(D_i-1)/2 / (N-1)."""
    d = np.asarray(degrees, dtype=float)
    total = d.sum()
    return float(np.sum(d * (d - 1) / 2) / (total - 1)) if total > 1 else 0.0


def n_matchings(n_half: int) -> int:
    """(n_half - 1)!! perfect matchings of ``n_half`` points."""
    return math.prod(range(n_half - 1, 0, -2)) if n_half else 1
