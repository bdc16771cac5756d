from itertools import combinations

import numpy as np
import pytest

from _graphs import cycle_graph, random_small_multigraph
from threshold_cp.core_peeler import core_size_check, generate_core_direct, peel_core
from threshold_cp.degree_model import DegreeDistribution as D, NoCoreError
from threshold_cp.graph_gen import DegreeSequence, MultiGraph, random_graph, sample_degree_sequence


def _induced_min_degree_ok(g: MultiGraph, subset, r):
    s = set(subset)
    for v in s:
        if sum(1 for u in g.neighbors(v).tolist() if u in s) < r:
            return False
    return True


def brute_force_core(g: MultiGraph, r: int) -> set:
    """Union of all vertex sets whose induced multigraph has min degree >= r."""
    core = set()
    for k in range(g.n, 0, -1):
        for subset in combinations(range(g.n), k):
            if _induced_min_degree_ok(g, subset, r):
                core |= set(subset)
    return core


def fixed_point_core(g: MultiGraph, r: int) -> set:
    """Drop every deficient vertex simultaneously until nothing changes."""
    alive = set(range(g.n))
    while True:
        bad = {v for v in alive if sum(1 for u in g.neighbors(v).tolist() if u in alive) < r}
        if not bad:
            return alive
        alive -= bad


def test_examples(k4_pendant):
    assert peel_core(k4_pendant, 3).vertices.tolist() == [0, 1, 2, 3]
    assert peel_core(cycle_graph(10), 3).size == 0
    assert peel_core(cycle_graph(10), 2).size == 10


def test_self_loop_counts_two():
    g = MultiGraph(2, [(0, 0), (0, 1), (1, 1)])
    assert peel_core(g, 3).vertices.tolist() == [0, 1]
    assert peel_core(g, 4).size == 0


def test_matches_brute_force_small():
    rng = np.random.default_rng(20)
    for _ in range(100):
        g = random_small_multigraph(rng, int(rng.integers(2, 13)), mean_deg=4.0)
        assert set(peel_core(g, 3).vertices.tolist()) == brute_force_core(g, 3)


def test_matches_fixed_point_larger():
    for seed in range(100):
        n = 13 + seed % 38
        g = random_graph(D.poisson(4), n, seed)
        assert set(peel_core(g, 3).vertices.tolist()) == fixed_point_core(g, 3)


def test_core_invariants():
    for seed in range(20):
        g = random_graph(D.poisson(4), 200, seed)
        res = peel_core(g, 3)
        s = set(res.vertices.tolist())
        for v in s:
            inside = sum(1 for u in g.neighbors(v).tolist() if u in s)
            assert inside >= 3
            assert res.residual_degrees[v] == inside
        assert set(res.peel_order) == set(range(g.n)) - s


def test_order_independence():
    rng = np.random.default_rng(3)
    for seed in range(20):
        g = random_graph(D.poisson(4), 150, seed)
        ref = peel_core(g, 3).vertices
        for _ in range(50):
            assert np.array_equal(peel_core(g, 3, order=rng.permutation(g.n)).vertices, ref)


def test_idempotence_and_monotonicity():
    for seed in range(10):
        g = random_graph(D.poisson(6), 300, seed)
        c3 = peel_core(g, 3)
        sub, labels = g.induced_subgraph(c3.vertices)
        assert np.array_equal(labels[peel_core(sub, 3).vertices], c3.vertices)
        for r in range(1, 8):
            lo = set(peel_core(g, r).vertices.tolist())
            hi = set(peel_core(g, r + 1).vertices.tolist())
            assert hi <= lo


def test_direct_regular_keeps_everything():
    res, g = generate_core_direct(DegreeSequence([3] * 20), 3, seed=1)
    assert res.size == 20
    assert res.h_core == 1.0
    assert res.peel_order == []
    assert g.degrees.tolist() == [3] * 20


def test_direct_all_ones_is_empty():
    res, g = generate_core_direct(DegreeSequence([1] * 10), 2, seed=1)
    assert res.size == 0
    assert g.degrees.tolist() == [1] * 10


def test_direct_matches_peeling_larger():
    dist = D.poisson(5)
    for seed in range(30):
        seq = sample_degree_sequence(dist, 400, seed)
        res, g = generate_core_direct(seq, 4, seed)
        ref = peel_core(g, 4)
        assert np.array_equal(res.vertices, ref.vertices)
        assert res.residual_degrees == ref.residual_degrees
        assert g.degrees.tolist() == seq.degrees.tolist()
        assert 0.0 <= res.h_core <= 1.0


def test_core_size_check_regular():
    rep = core_size_check(D.dirac(5), 10_000, 4, replicas=2, seed=0)
    assert rep["fractions"] == [1.0, 1.0]
    assert rep["rho"] == 1.0


def test_core_size_check_no_core():
    with pytest.raises(NoCoreError):
        core_size_check(D.poisson(2), 10_000, 4, replicas=1, seed=0)
    for seed in range(3):
        g = random_graph(D.poisson(2), 10_000, seed)
        assert peel_core(g, 4).size < 0.005 * g.n


def test_core_json():
    res = peel_core(cycle_graph(6), 2)
    assert res.to_json() == {"core_size": 6, "fraction": 1.0, "h_core": None}
