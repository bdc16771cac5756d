"""Discrete-time threshold-theta contact process.

At every step each vertex draws one uniform U(v, t), in ascending vertex
order. A vertex with at least ``theta`` infected neighbors becomes infected
iff U(v, t) < p; every other vertex becomes healthy. Sharing the uniforms
between two values of p gives the monotone coupling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph_gen import MultiGraph, make_rng

COUNTING_MODES = ("multiplicity", "distinct")
FULL_RECORD_STEPS = 10_000


@dataclass(frozen=True)
class ProcessConfig:
    theta: int
    p: float
    counting_mode: str = "multiplicity"
    seed: int = 0

    def __post_init__(self):
        if self.theta < 2:
            raise ValueError("theta must be >= 2")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.counting_mode not in COUNTING_MODES:
            raise ValueError(f"counting_mode must be one of {COUNTING_MODES}")


@dataclass
class ProcessState:
    infected: np.ndarray  # bool, one entry per vertex
    t: int = 0

    @classmethod
    def from_set(cls, n: int, vertices, t: int = 0) -> "ProcessState":
        x = np.zeros(n, dtype=bool)
        x[np.asarray(list(vertices), dtype=np.int64)] = True
        return cls(x, t)

    @classmethod
    def all_infected(cls, n: int) -> "ProcessState":
        return cls(np.ones(n, dtype=bool))

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.infected))


@dataclass
class Trajectory:
    """|X_t| at the recorded times; ``extinct_at`` xor ``censored_at`` is set."""

    times: list[int] = field(default_factory=list)
    sizes: list[int] = field(default_factory=list)
    extinct_at: int | None = None
    censored_at: int | None = None
    n: int = 0

    @property
    def final_size(self) -> int:
        return self.sizes[-1]

    @property
    def final_density(self) -> float:
        return self.final_size / self.n if self.n else 0.0

    def to_csv(self) -> str:
        rows = ["t,infected_count"]
        rows.extend(f"{t},{s}" for t, s in zip(self.times, self.sizes))
        return "\n".join(rows) + "\n"


def _should_record(t: int) -> bool:
    if t <= FULL_RECORD_STEPS:
        return True
    return t % math.ceil(t / FULL_RECORD_STEPS) == 0


def eligible(g: MultiGraph, infected: np.ndarray, theta: int, counting_mode: str = "multiplicity") -> np.ndarray:
    """Vertices with at least ``theta`` infected neighbors."""
    counts = g.adjacency_matrix(counting_mode) @ infected.astype(np.int32)
    return counts >= theta


def step(g: MultiGraph, s: ProcessState, cfg: ProcessConfig, rng: np.random.Generator) -> ProcessState:
    u = rng.random(g.n)
    nxt = eligible(g, s.infected, cfg.theta, cfg.counting_mode) & (u < cfg.p)
    return ProcessState(nxt, s.t + 1)


def run(g: MultiGraph, init: ProcessState, cfg: ProcessConfig, t_max: int) -> Trajectory:
    """Iterate until extinction or ``t_max``; all-healthy is absorbing."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    rng = make_rng(cfg.seed)
    a = g.adjacency_matrix(cfg.counting_mode)
    x = init.infected.astype(np.int32)
    size = int(x.sum())
    traj = Trajectory([0], [size], n=g.n)
    if size == 0:
        traj.extinct_at = 0
        return traj
    p, theta = cfg.p, cfg.theta
    for t in range(1, t_max + 1):
        u = rng.random(g.n)
        x = ((a @ x >= theta) & (u < p)).astype(np.int32)
        size = int(x.sum())
        if size == 0:
            traj.times.append(t)
            traj.sizes.append(0)
            traj.extinct_at = t
            return traj
        if _should_record(t) or t == t_max:
            traj.times.append(t)
            traj.sizes.append(size)
    traj.censored_at = t_max
    return traj


def run_coupled(
    g: MultiGraph,
    init: ProcessState,
    theta: int,
    p_low: float,
    p_high: float,
    seed,
    t_max: int,
    counting_mode: str = "multiplicity",
    check: bool = True,
) -> tuple[Trajectory, Trajectory]:
    """Two copies driven by the same U(v, t), so X_t(low) is inside X_t(high).

    With ``check`` the containment is asserted at every step.
    """
    if p_low > p_high:
        raise ValueError("need p_low <= p_high")
    ProcessConfig(theta, p_low, counting_mode)
    ProcessConfig(theta, p_high, counting_mode)
    rng = make_rng(seed)
    a = g.adjacency_matrix(counting_mode)
    lo = init.infected.astype(np.int32)
    hi = lo.copy()
    out = []
    for x in (lo, hi):
        tr = Trajectory([0], [int(x.sum())], n=g.n)
        if tr.sizes[0] == 0:
            tr.extinct_at = 0
        out.append(tr)
    t = 0
    while t < t_max and out[1].extinct_at is None:
        t += 1
        u = rng.random(g.n)
        if out[0].extinct_at is None:
            lo = ((a @ lo >= theta) & (u < p_low)).astype(np.int32)
        hi = ((a @ hi >= theta) & (u < p_high)).astype(np.int32)
        if check and np.any(lo > hi):
            raise AssertionError(f"coupling broken at t={t}")
        for tr, x in zip(out, (lo, hi)):
            if tr.extinct_at is not None:
                continue
            size = int(x.sum())
            if size == 0 or _should_record(t) or t == t_max:
                tr.times.append(t)
                tr.sizes.append(size)
            if size == 0:
                tr.extinct_at = t
    for tr in out:
        if tr.extinct_at is None:
            tr.censored_at = t_max
    return out[0], out[1]


def initial_state(n: int, initial, rng: np.random.Generator) -> ProcessState:
    """``"all"``, a density in [0, 1] (exactly round(density*n) vertices), or a vertex list."""
    if isinstance(initial, str):
        if initial != "all":
            raise ValueError(f"unknown initial condition {initial!r}")
        return ProcessState.all_infected(n)
    if isinstance(initial, (int, float)) and not isinstance(initial, bool):
        if not 0.0 <= initial <= 1.0:
            raise ValueError("initial density must lie in [0, 1]")
        k = int(round(initial * n))
        return ProcessState.from_set(n, rng.choice(n, size=k, replace=False))
    return ProcessState.from_set(n, initial)


def survival_experiment(spec) -> "ExperimentResult":
    """Survival sweep over ``spec.p_grid``; thin wrapper over the harness."""
    from .harness import run_experiment

    if spec.kind != "survival_sweep":
        raise ValueError("survival_experiment needs a survival_sweep spec")
    return run_experiment(spec)
