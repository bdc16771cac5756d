"""Experiment specs, seed derivation, replica execution and result persistence.

Seeds
-----
``derive_seed(master, index)`` is the SplitMix64 finalizer applied twice::

    mix(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  mod 2^64
             z = (z ^ (z >> 27)) * 0x94D049BB133111EB  mod 2^64
             return z ^ (z >> 31)

    derive_seed(master, index) = mix(mix(master mod 2^64) + (index + 1) * 0x9E3779B97F4A7C15  mod 2^64)

``mix`` is a bijection on 64-bit words, so the map is injective in ``index``
for a fixed master and injective in ``master`` for a fixed index. Replica i
of an experiment uses ``derive_seed(master_seed, i)``; its sub-streams
(graph, initial condition, dynamics) use ``derive_seed(replica_seed, k)``
with k = 0, 1, 2.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from scipy import stats
from scipy.optimize import isotonic_regression

from . import __version__
from . import meanfield
from .core_peeler import peel_core
from .degree_model import DegreeDistribution, NoCoreError, solve_core_threshold
from .graph_gen import DegreeSequence, make_rng, match_half_edges, random_graph
from .process_engine import COUNTING_MODES, ProcessConfig, initial_state, run
from .structure_checker import cycle_cover, estimate_event

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
KINDS = (
    "survival_sweep",
    "core_size",
    "structure_event",
    "cycle_cover",
    "meanfield_table",
    "matching_law",
)


class SpecError(ValueError):
    """An experiment spec violates an operation precondition."""


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    if index < 0:
        raise ValueError("index must be >= 0")
    return _mix64((_mix64(master & MASK64) + (index + 1) * GOLDEN64) & MASK64)


# ---------------------------------------------------------------------- spec


@dataclass
class ExperimentSpec:
    kind: str
    distribution: dict | None = None
    n: int = 0
    theta: int = 2
    p_grid: list[float] = field(default_factory=list)
    initial: Any = "all"
    replicas: int = 1
    t_max: int = 1000
    master_seed: int = 0
    counting_mode: str = "multiplicity"
    output: str | None = None
    params: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentSpec":
        if self.kind not in KINDS:
            raise SpecError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "meanfield_table":
            if not self.p_grid:
                raise SpecError("meanfield_table needs a nonempty p_grid")
            self._check_grid()
            if self.theta < 2:
                raise SpecError("theta must be >= 2")
            return self
        if self.replicas < 1:
            raise SpecError("replicas must be >= 1")
        if self.kind == "matching_law":
            degrees = self.params.get("degrees")
            try:
                DegreeSequence(degrees)
            except (TypeError, ValueError) as exc:
                raise SpecError(f"matching_law needs a valid params.degrees: {exc}") from None
            return self
        if self.distribution is None:
            raise SpecError(f"{self.kind} needs a distribution")
        try:
            DegreeDistribution.from_config(self.distribution)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad distribution: {exc}") from None
        if self.n < 1:
            raise SpecError("n must be >= 1")
        if self.counting_mode not in COUNTING_MODES:
            raise SpecError(f"counting_mode must be one of {COUNTING_MODES}")
        if self.kind == "survival_sweep":
            if self.theta < 2:
                raise SpecError("theta must be >= 2")
            if not self.p_grid:
                raise SpecError("survival_sweep needs a nonempty p_grid")
            self._check_grid()
            if self.t_max < 1:
                raise SpecError("t_max must be >= 1")
            init = self.initial
            if isinstance(init, (int, float)) and not isinstance(init, bool):
                if not 0.0 <= init <= 1.0:
                    raise SpecError("initial density must lie in [0, 1]")
            elif isinstance(init, str) and init != "all":
                raise SpecError(f"unknown initial condition {init!r}")
        if self.kind == "core_size" and int(self.params.get("r", self.theta + 2)) < 2:
            raise SpecError("r must be >= 2")
        if self.kind == "structure_event":
            if self.params.get("event", "E2") not in ("E2", "Ftheta"):
                raise SpecError("event must be E2 or Ftheta")
            m1 = self.m1()
            if not 1 <= m1 <= self.n:
                raise SpecError("m1 must lie in [1, n]")
        return self

    def _check_grid(self):
        g = list(self.p_grid)
        if any(not 0.0 <= p <= 1.0 for p in g):
            raise SpecError("p_grid values must lie in [0, 1]")
        if g != sorted(g):
            raise SpecError("p_grid must be sorted ascending")

    def dist(self) -> DegreeDistribution:
        return DegreeDistribution.from_config(self.distribution)

    def m1(self) -> int:
        if "m1" in self.params:
            return int(self.params["m1"])
        return max(1, math.ceil(float(self.params.get("eps", 0.001)) * self.n))

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise SpecError(f"unknown spec fields: {sorted(extra)}")
        if "kind" not in data:
            raise SpecError("spec needs a kind")
        return cls(**data)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentSpec":
        return cls.from_json(json.loads(text))


@dataclass
class ExperimentResult:
    spec: dict
    records: list[dict]
    aggregates: dict
    wall_clock: float = 0.0
    version: str = __version__

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentResult":
        return cls(**data)


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------- replicas


def _survival_replica(spec: ExperimentSpec, index: int, seed: int) -> list[dict]:
    dist = spec.dist()
    g = random_graph(dist, spec.n, derive_seed(seed, 0))
    init = initial_state(spec.n, spec.initial, make_rng(derive_seed(seed, 1)))
    dyn_seed = derive_seed(seed, 2)
    rho = spec.params.get("_rho")
    out = []
    # one dynamics seed for the whole grid, so the sweep is monotonically coupled in p
    for p in spec.p_grid:
        cfg = ProcessConfig(spec.theta, float(p), spec.counting_mode, dyn_seed)
        tr = run(g, init, cfg, spec.t_max)
        rec = {
            "p": float(p),
            "replica": index,
            "extinct_at": tr.extinct_at,
            "censored_at": tr.censored_at,
            "final_density": tr.final_density,
        }
        if rho is not None:
            rec["relative_density"] = tr.final_size / (rho * spec.n) if rho > 0 else None
        if spec.params.get("record_series"):
            rec["series"] = {"t": tr.times, "infected_count": tr.sizes}
        out.append(rec)
    return out


def _core_replica(spec: ExperimentSpec, index: int, seed: int) -> list[dict]:
    r = int(spec.params.get("r", spec.theta + 2))
    g = random_graph(spec.dist(), spec.n, derive_seed(seed, 0), spec.params.get("method", "uniform"))
    core = peel_core(g, r)
    return [{"replica": index, **core.to_json()}]


def _structure_replica(spec: ExperimentSpec, index: int, seed: int) -> list[dict]:
    event = spec.params.get("event", "E2")
    m1 = spec.m1()
    if "m2" in spec.params:
        m2 = int(spec.params["m2"])
    elif event == "E2":
        m2 = math.floor((1 + float(spec.params.get("delta", 0.3))) * m1)
    else:
        raise SpecError("Ftheta needs params.m2")
    g = random_graph(spec.dist(), spec.n, derive_seed(seed, 0))
    est = estimate_event(
        g,
        event,
        m1,
        m2,
        l=int(spec.params.get("l", spec.theta)),
        trials=int(spec.params.get("trials", 10_000)),
        seed=derive_seed(seed, 1),
        exact_cap=int(spec.params.get("exact_cap", 10**6)),
        counting_mode=spec.counting_mode,
    )
    return [{"replica": index, **est.to_json()}]


def _cycle_replica(spec: ExperimentSpec, index: int, seed: int) -> list[dict]:
    max_len = spec.params.get("max_len", "auto")
    if max_len == "auto":
        max_len = math.ceil(4 * math.log2(spec.n))
    g = random_graph(spec.dist(), spec.n, derive_seed(seed, 0))
    cover = cycle_cover(g, int(max_len))
    return [
        {
            "replica": index,
            "max_len": int(max_len),
            "cycles": len(cover.cycles),
            "uncovered": len(cover.uncovered),
            "max_len_used": cover.max_len_used,
        }
    ]


def _matching_replica(spec: ExperimentSpec, index: int, seed: int) -> list[dict]:
    degrees = np.asarray(spec.params["degrees"], dtype=np.int64)
    samples = int(spec.params.get("samples", 10_000))
    out = []
    for k, method in enumerate(spec.params.get("methods", ["uniform", "cutoff_line"])):
        counts: dict[str, int] = {}
        base = derive_seed(seed, k)
        for s in range(samples):
            tab = match_half_edges(degrees, make_rng(derive_seed(base, s)), method)
            key = " ".join(map(str, tab.matched.tolist()))
            counts[key] = counts.get(key, 0) + 1
        out.append({"replica": index, "method": method, "counts": dict(sorted(counts.items()))})
    return out


_RUNNERS = {
    "survival_sweep": _survival_replica,
    "core_size": _core_replica,
    "structure_event": _structure_replica,
    "cycle_cover": _cycle_replica,
    "matching_law": _matching_replica,
}


def _run_replica(spec_json: dict, index: int) -> list[dict]:
    spec = ExperimentSpec.from_json(spec_json)
    seed = derive_seed(spec.master_seed, index)
    try:
        return _RUNNERS[spec.kind](spec, index, seed)
    except Exception as exc:  # recorded, not fatal
        failed = {"replica": index, "failed": True, "error": f"{type(exc).__name__}: {exc}"}
        if spec.kind == "survival_sweep":
            # keep |p_grid| records per replica
            return [{"p": float(p), **failed} for p in spec.p_grid]
        return [failed]


# ---------------------------------------------------------------------- aggregation


class TransitionBracket(NamedTuple):
    p_lo: float | None
    p_hi: float | None

    @property
    def open_ended(self) -> bool:
        return self.p_lo is None or self.p_hi is None


def estimate_transition(results, p_grid=None) -> TransitionBracket:
    """Adjacent grid pair where the survival fraction crosses 1/2.

    Accepts an ExperimentResult of a survival sweep, or a sequence of
    survival fractions together with ``p_grid``. Fractions are made monotone
    by isotonic regression first. If every point is on one side of 1/2 the
    bracket is open on that side (None).
    """
    if isinstance(results, ExperimentResult):
        per_p = results.aggregates["per_p"]
        p_grid = [row["p"] for row in per_p]
        fracs = [row["survival_fraction"] for row in per_p]
    else:
        fracs = list(results)
    if p_grid is None or len(p_grid) != len(fracs) or len(fracs) < 2:
        raise ValueError("need at least two grid points with matching fractions")
    iso = isotonic_regression(np.asarray(fracs, dtype=float), increasing=True).x
    above = np.flatnonzero(iso >= 0.5)
    if above.size == 0:
        return TransitionBracket(float(p_grid[-1]), None)
    j = int(above[0])
    if j == 0:
        return TransitionBracket(None, float(p_grid[0]))
    return TransitionBracket(float(p_grid[j - 1]), float(p_grid[j]))


def _quantiles(x) -> dict | None:
    x = np.asarray([v for v in x if v is not None], dtype=float)
    if x.size == 0:
        return None
    q = np.quantile(x, [0.1, 0.25, 0.5, 0.75, 0.9])
    return dict(zip(("q10", "q25", "median", "q75", "q90"), map(float, q)))


def _aggregate(spec: ExperimentSpec, records: list[dict]) -> dict:
    ok = [r for r in records if not r.get("failed")]
    agg: dict[str, Any] = {"failed": len(records) - len(ok)}
    if spec.kind == "survival_sweep":
        per_p = []
        for p in spec.p_grid:
            rows = [r for r in ok if r["p"] == float(p)]
            ext = [r["extinct_at"] for r in rows if r["extinct_at"] is not None]
            row = {
                "p": float(p),
                "replicas": len(rows),
                "survival_fraction": sum(r["censored_at"] is not None for r in rows) / len(rows)
                if rows
                else None,
                "median_extinction_time": float(np.median(ext)) if ext else None,
                "extinction_time_quantiles": _quantiles(ext),
                "final_density_quantiles": _quantiles(r["final_density"] for r in rows),
            }
            if "_rho" in spec.params:
                row["relative_density_quantiles"] = _quantiles(r.get("relative_density") for r in rows)
            per_p.append(row)
        agg["per_p"] = per_p
        if "_rho" in spec.params:
            agg["rho"] = spec.params["_rho"]
        if len(per_p) >= 2 and all(r["survival_fraction"] is not None for r in per_p):
            br = estimate_transition(
                [r["survival_fraction"] for r in per_p], [r["p"] for r in per_p]
            )
            agg["transition"] = {"p_lo": br.p_lo, "p_hi": br.p_hi, "open_ended": br.open_ended}
    elif spec.kind == "core_size":
        fr = np.asarray([r["fraction"] for r in ok])
        agg["mean_fraction"] = float(fr.mean()) if fr.size else None
        agg["std_fraction"] = float(fr.std(ddof=1)) if fr.size > 1 else 0.0
        r = int(spec.params.get("r", spec.theta + 2))
        try:
            thr = solve_core_threshold(spec.dist(), r)
            agg.update(rho=thr.rho, hhat=thr.hhat, condition_holds=thr.condition_holds)
        except NoCoreError:
            agg.update(rho=0.0, hhat=None, condition_holds=False)
    elif spec.kind == "structure_event":
        v = sum(r["violations"] for r in ok)
        t = sum(r["trials"] for r in ok)
        agg["violation_fraction"] = v / t if t else None
        agg["trials"] = t
    elif spec.kind == "cycle_cover":
        agg["all_covered"] = all(r["uncovered"] == 0 for r in ok)
        agg["uncovered_total"] = sum(r["uncovered"] for r in ok)
    elif spec.kind == "matching_law":
        laws = {}
        for method in spec.params.get("methods", ["uniform", "cutoff_line"]):
            total: dict[str, int] = {}
            for r in ok:
                if r["method"] == method:
                    for k, c in r["counts"].items():
                        total[k] = total.get(k, 0) + c
            obs = np.asarray(list(total.values()), dtype=float)
            chi = stats.chisquare(obs) if obs.size > 1 else None
            laws[method] = {
                "counts": dict(sorted(total.items())),
                "chi2_pvalue": float(chi.pvalue) if chi is not None else 1.0,
            }
        agg["laws"] = laws
    return agg


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> ExperimentResult:
    """Run every replica of ``spec`` and aggregate; writes ``spec.output`` if set.

    Records come back in replica order regardless of ``threads``.
    """
    spec.validate()
    start = time.perf_counter()
    if spec.kind == "meanfield_table":
        records = meanfield.table(spec.p_grid, spec.theta, float(spec.params.get("tol", 1e-12)))
        result = ExperimentResult(spec.to_json(), records, {"critical_p": meanfield.critical_p(spec.theta)})
    else:
        work = ExperimentSpec.from_json(spec.to_json())
        if spec.kind == "survival_sweep" and spec.params.get("core_reference"):
            try:
                work.params["_rho"] = solve_core_threshold(spec.dist(), spec.theta + 2).rho
            except NoCoreError:
                work.params["_rho"] = 0.0
        payload = work.to_json()
        idx = list(range(spec.replicas))
        if threads > 1 and spec.replicas > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(_run_replica, [payload] * len(idx), idx))
        else:
            chunks = [_run_replica(payload, i) for i in idx]
        records = [rec for chunk in chunks for rec in chunk]
        result = ExperimentResult(spec.to_json(), records, _aggregate(work, records))
    result.wall_clock = time.perf_counter() - start
    if spec.output:
        atomic_write(spec.output, result.dumps())
    return result


def records_bytes(result: ExperimentResult) -> bytes:
    """Canonical bytes of the per-replica records (wall-clock excluded)."""
    return json.dumps(result.records, sort_keys=True).encode()


def trajectory_csv(record: dict) -> str:
    """CSV ``t,infected_count`` from a record produced with ``record_series``."""
    s = record["series"]
    rows = ["t,infected_count"] + [f"{t},{c}" for t, c in zip(s["t"], s["infected_count"])]
    return "\n".join(rows) + "\n"
