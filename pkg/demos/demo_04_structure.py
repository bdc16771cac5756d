"""
Local structure: W^{*2} sets and short cycles
=============================================

Two structural facts drive the dynamics. Small vertex sets W rarely have
many outside vertices with two neighbours in W, and every vertex of a
3-regular graph lies on a short cycle. Such a cycle, once healthy, stays
healthy when theta = 2.
"""

import math

import numpy as np

from threshold_cp import DegreeDistribution, ProcessConfig, ProcessState, random_graph, step
from threshold_cp.structure_checker import cycle_cover, estimate_event, greedy_worst_subset, w_star

g = random_graph(DegreeDistribution.dirac(5), 10_000, seed=3)
m1 = 10
est = estimate_event(g, "E2", m1=m1, m2=13, trials=5000, seed=1, exact_cap=0)
print(f"random W of size {m1}: fraction with |W*2| > 13 is {est.fraction:.4f} ({est.trials} samples)")

# a local search tries harder to find a bad W
w = greedy_worst_subset(g, m1, 2, seed=0)
print(f"greedy worst W of size {m1}: |W*2| = {len(w_star(g, w, 2))}")

# cycle cover of a 3-regular graph
h = random_graph(DegreeDistribution.dirac(3), 10_000, seed=4)
cover = cycle_cover(h, math.ceil(4 * math.log2(h.n)))
print(f"{len(cover.cycles)} cycles cover all but {len(cover.uncovered)} vertices; "
      f"longest used {cover.max_len_used}")

# clamp one cycle healthy, infect everything else, and run at p = 1
cyc = cover.cycles[0]
x = np.ones(h.n, dtype=bool)
x[cyc] = False
rng = np.random.default_rng(0)
for _ in range(50):
    x = step(h, ProcessState(x), ProcessConfig(2, 1.0), rng).infected
    x[np.setdiff1d(np.arange(h.n), cyc)] = True
print(f"cycle of length {len(cyc)} still healthy after 50 steps: {not x[cyc].any()}")
