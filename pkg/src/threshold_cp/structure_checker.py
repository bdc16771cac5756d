"""Structural estimators: W^{*l} sets, subset events, short cycles and cycle covers."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .graph_gen import MultiGraph, make_rng

EVENTS = ("E2", "Ftheta")


def _universe_mask(n: int, universe) -> np.ndarray | None:
    if universe is None:
        return None
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(list(universe), dtype=np.int64)] = True
    return mask


def neighbor_counts(g: MultiGraph, W, counting_mode: str = "multiplicity") -> np.ndarray:
    """Number of neighbors in W for every vertex (with multiplicity by default)."""
    x = np.zeros(g.n, dtype=np.int32)
    x[np.asarray(list(W), dtype=np.int64)] = 1
    return g.adjacency_matrix(counting_mode) @ x


def w_star(g: MultiGraph, W, l: int, counting_mode: str = "multiplicity", universe=None) -> set[int]:
    """{u : u has at least l neighbors in W}; members of W are not excluded.

    A self-loop at u in W counts 2 in multiplicity mode and is ignored in
    distinct mode. ``universe`` (e.g. a core) restricts both W and the result.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    W = list(W)
    mask = _universe_mask(g.n, universe)
    if mask is not None:
        W = [w for w in W if mask[w]]
    hit = neighbor_counts(g, W, counting_mode) >= l
    if mask is not None:
        hit &= mask
    return set(np.flatnonzero(hit).tolist())


def edges_to_set(g: MultiGraph, i: int, W) -> int:
    """e(i, W): edges between i and W, with multiplicity."""
    Wset = set(W)
    return int(sum(1 for u in g.neighbors(i).tolist() if u in Wset))


@dataclass(frozen=True)
class EventEstimate:
    event: str
    m1: int
    m2: int
    l: int
    trials: int
    violations: int
    mode: str

    @property
    def fraction(self) -> float:
        return self.violations / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        f = self.fraction
        return math.sqrt(f * (1 - f) / self.trials) if self.trials else 0.0

    def to_json(self) -> dict:
        return {**asdict(self), "fraction": self.fraction}


def _violations(sizes: np.ndarray, event: str, m2: int) -> np.ndarray:
    return sizes > m2 if event == "E2" else sizes < m2


def _star_sizes(a: sp.csr_matrix, subsets: np.ndarray, l: int) -> np.ndarray:
    """|W^{*l}| for each row of ``subsets`` (shape trials x m1)."""
    trials, m1 = subsets.shape
    rows = np.repeat(np.arange(trials), m1)
    ind = sp.csr_matrix(
        (np.ones(rows.size, dtype=np.int32), (rows, subsets.ravel())), shape=(trials, a.shape[0])
    )
    counts = (ind @ a).tocsr()  # symmetric a, so row t holds counts into W_t
    counts.data = (counts.data >= l).astype(np.int32)
    return np.asarray(counts.sum(axis=1)).ravel()


def estimate_event(
    g: MultiGraph,
    event: str,
    m1: int,
    m2: int,
    l: int = 2,
    trials: int = 10_000,
    seed=0,
    exact_cap: int = 10**6,
    counting_mode: str = "multiplicity",
    batch: int = 2000,
) -> EventEstimate:
    """Count subsets W of size m1 violating the event.

    E2 is violated when |W^{*2}| > m2 (``l`` is fixed to 2); Ftheta when
    |W^{*l}| < m2. All C(n, m1) subsets are enumerated when that number is
    at most ``exact_cap``; otherwise ``trials`` uniform subsets are sampled and
    the result estimates the measure of violating subsets only.
    """
    if event not in EVENTS:
        raise ValueError(f"event must be one of {EVENTS}")
    if not 0 <= m1 <= g.n:
        raise ValueError("need 0 <= m1 <= n")
    if event == "E2":
        l = 2
    a = g.adjacency_matrix(counting_mode)
    total = math.comb(g.n, m1)
    violations = 0
    if total <= exact_cap:
        from itertools import combinations, islice

        it = combinations(range(g.n), m1)
        while True:
            chunk = list(islice(it, batch))
            if not chunk:
                break
            arr = np.asarray(chunk, dtype=np.int64).reshape(len(chunk), m1)
            violations += int(_violations(_star_sizes(a, arr, l), event, m2).sum())
        return EventEstimate(event, m1, m2, l, total, violations, "exact")

    rng = make_rng(seed)
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        # row-wise uniform m1-subsets via argpartition of random keys
        keys = rng.random((k, g.n))
        arr = np.argpartition(keys, m1 - 1, axis=1)[:, :m1]
        violations += int(_violations(_star_sizes(a, arr, l), event, m2).sum())
        done += k
    return EventEstimate(event, m1, m2, l, trials, violations, "sampled")


def greedy_worst_subset(
    g: MultiGraph,
    m: int,
    l: int,
    objective: str = "maximize",
    seed=0,
    counting_mode: str = "multiplicity",
) -> set[int]:
    """Swap-based local search for W (|W| = m) with extreme |W^{*l}|.

    Starts from the best of a few random subsets and performs improving
    single swaps until none helps or the 2*m*n move budget is spent.
    """
    if not 0 <= m <= g.n:
        raise ValueError("need 0 <= m <= n")
    if objective not in ("maximize", "minimize"):
        raise ValueError("objective must be 'maximize' or 'minimize'")
    if m in (0, g.n):
        return set(range(m))
    sign = 1 if objective == "maximize" else -1
    a = g.adjacency_matrix(counting_mode)
    rng = make_rng(seed)

    def score(counts):
        return sign * int(np.count_nonzero(counts >= l))

    best_w, best_counts = None, None
    for _ in range(4):
        w = rng.choice(g.n, size=m, replace=False)
        x = np.zeros(g.n, dtype=np.int32)
        x[w] = 1
        counts = a @ x
        if best_w is None or score(counts) > score(best_counts):
            best_w, best_counts = w, counts
    w = list(best_w.tolist())
    counts = best_counts
    current = score(counts)
    in_w = np.zeros(g.n, dtype=bool)
    in_w[w] = True
    cols = a.toarray().T  # row v = column v of the symmetric matrix
    budget = 2 * m * g.n
    moves = 0
    improved = True
    while improved and moves < budget:
        improved = False
        for i in range(m):
            out_v = w[i]
            base = counts - cols[out_v]
            for in_v in np.flatnonzero(~in_w).tolist():
                moves += 1
                cand = base + cols[in_v]
                s = score(cand)
                if s > current:
                    in_w[out_v], in_w[in_v] = False, True
                    w[i], counts, current = in_v, cand, s
                    improved = True
                    break
                if moves >= budget:
                    break
            if moves >= budget:
                break
    return set(w)


# ---------------------------------------------------------------------- cycles


def shortest_cycle_through(g: MultiGraph, v: int, max_len: int) -> list[int] | None:
    """A minimum-length cycle through ``v`` as a vertex list starting at v.

    A self-loop at v is a cycle of length 1 and a doubled edge v-u one of
    length 2. Otherwise BFS from v labels every vertex with the neighbor of v
    its tree path descends from; an edge joining two different labels closes a
    cycle of length depth(x) + depth(y) + 1. Returns None if the shortest cycle
    is longer than ``max_len``.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    nb = g.neighbors(v).tolist()
    counts: dict[int, int] = {}
    for u in nb:
        counts[u] = counts.get(u, 0) + 1
    if v in counts:
        return [v]
    if max_len < 2:
        return None
    for u in sorted(counts):
        if counts[u] >= 2:
            return [v, u]
    if max_len < 3:
        return None

    indptr, nbrs = g.indptr, g.indices
    depth = {v: 0}
    parent = {v: -1}
    branch = {v: -1}
    queue = deque()
    for u in sorted(counts):
        depth[u], parent[u], branch[u] = 1, v, u
        queue.append(u)
    best = None  # (length, x, y)
    while queue:
        x = queue.popleft()
        dx = depth[x]
        if best is not None and 2 * dx + 1 >= best[0]:
            break
        if 2 * dx + 1 > max_len:
            break
        # the tree edge to the parent appears once among x's half-edges; skip it once
        skip_parent = True
        for y in nbrs[indptr[x] : indptr[x + 1]].tolist():
            if y == v:
                continue
            if y == parent[x] and skip_parent:
                skip_parent = False
                continue
            if y not in depth:
                depth[y], parent[y], branch[y] = dx + 1, x, branch[x]
                queue.append(y)
            elif branch[y] != branch[x]:
                length = dx + depth[y] + 1
                if best is None or length < best[0]:
                    best = (length, x, y)
    if best is None or best[0] > max_len:
        return None
    _, x, y = best
    left = []
    while x != v:
        left.append(x)
        x = parent[x]
    right = []
    while y != v:
        right.append(y)
        y = parent[y]
    return [v] + left[::-1] + right


@dataclass
class CycleCover:
    cycles: list[list[int]]
    uncovered: set[int]
    max_len_used: int

    def to_json(self) -> dict:
        return {
            "cycles": self.cycles,
            "uncovered": sorted(self.uncovered),
            "max_len_used": self.max_len_used,
        }

    def to_text(self) -> str:
        return "".join(" ".join(map(str, c)) + "\n" for c in self.cycles)


def cycle_cover(g: MultiGraph, max_len: int) -> CycleCover:
    """Greedy cover: each still-uncovered vertex, in ascending order, adds its shortest cycle."""
    covered = np.zeros(g.n, dtype=bool)
    cycles, uncovered = [], set()
    longest = 0
    for v in range(g.n):
        if covered[v]:
            continue
        c = shortest_cycle_through(g, v, max_len)
        if c is None:
            uncovered.add(v)
            continue
        cycles.append(c)
        covered[c] = True
        longest = max(longest, len(c))
    return CycleCover(cycles, uncovered, longest)
