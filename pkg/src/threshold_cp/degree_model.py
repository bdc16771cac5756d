"""Degree distributions and the analytic r-core quantities of the configuration model.

For a degree law D ~ mu and a retention probability h, the thinned degree
D_h = Bin(D, h) drives the core calculation:

    F_r(h)   = E[D_h 1{D_h >= r}]
    rho_r(h) = P(D_h >= r)

The r-core is macroscopic when d h^2 < F_r(h) for some h in (0, 1), with
d = E D, and its limiting fraction is rho_r(hhat) at the largest root hhat of
d h^2 = F_r(h).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import stats

TAIL_TOL = 1e-12
SUPPORT_CAP = 100_000
# pmf tables of infinite-support laws are cut where the remaining mass drops below this
_TABLE_TAIL = 1e-17


class DivergenceError(ArithmeticError):
    """A tail-truncated sum did not settle before the support cap."""


class NoCoreError(ValueError):
    """The core condition fails strictly for all h and no equality at h = 1."""


@dataclass(frozen=True)
class DegreeDistribution:
    """A probability law on the nonnegative integers.

    Use the constructors :meth:`dirac`, :meth:`poisson`, :meth:`mixture`,
    :meth:`explicit` and :meth:`powerlaw` rather than building instances
    directly.
    """

    kind: str
    params: tuple = ()
    components: tuple["DegreeDistribution", ...] = ()
    weights: tuple[float, ...] = ()
    tail_tol: float = TAIL_TOL
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    # ------------------------------------------------------------------ constructors
    @classmethod
    def dirac(cls, a: int) -> "DegreeDistribution":
        a = int(a)
        if a < 0:
            raise ValueError("point mass must sit on a nonnegative integer")
        return cls("dirac", (a,))

    @classmethod
    def poisson(cls, lam: float) -> "DegreeDistribution":
        lam = float(lam)
        if not lam > 0:
            raise ValueError("Poisson mean must be positive")
        return cls("poisson", (lam,))

    @classmethod
    def mixture(
        cls, components: Sequence["DegreeDistribution"], weights: Sequence[float]
    ) -> "DegreeDistribution":
        w = np.asarray(weights, dtype=float)
        if len(components) == 0 or len(components) != w.size:
            raise ValueError("mixture needs one weight per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        return cls("mixture", (), tuple(components), tuple(float(x) for x in w))

    @classmethod
    def explicit(cls, table: Mapping[int, float]) -> "DegreeDistribution":
        items = sorted((int(k), float(v)) for k, v in table.items())
        if not items or items[0][0] < 0:
            raise ValueError("pmf table needs nonnegative integer keys")
        total = sum(v for _, v in items)
        if any(v < 0 for _, v in items) or abs(total - 1.0) > 1e-12:
            raise ValueError("pmf table must be nonnegative and sum to 1")
        return cls("pmf", tuple(items))

    @classmethod
    def powerlaw(cls, exponent: float, dmin: int, dmax: int) -> "DegreeDistribution":
        dmin, dmax = int(dmin), int(dmax)
        if dmin < 0 or dmax < dmin:
            raise ValueError("need 0 <= dmin <= dmax")
        if dmin == 0 and exponent > 0:
            raise ValueError("k^-exponent is undefined at k = 0")
        return cls("powerlaw", (float(exponent), dmin, dmax))

    # ------------------------------------------------------------------ config I/O
    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "DegreeDistribution":
        """Build from the JSON form, e.g. ``{"type": "poisson", "lambda": 8.0}``."""
        kind = cfg.get("type")
        if kind == "dirac":
            return cls.dirac(cfg["a"])
        if kind == "poisson":
            return cls.poisson(cfg["lambda"])
        if kind == "mixture":
            return cls.mixture([cls.from_config(c) for c in cfg["components"]], cfg["weights"])
        if kind == "pmf":
            return cls.explicit({int(k): v for k, v in cfg["table"].items()})
        if kind == "powerlaw":
            return cls.powerlaw(cfg["exponent"], cfg["dmin"], cfg["dmax"])
        raise ValueError(f"unknown distribution type: {kind!r}")

    def to_config(self) -> dict:
        if self.kind == "dirac":
            return {"type": "dirac", "a": self.params[0]}
        if self.kind == "poisson":
            return {"type": "poisson", "lambda": self.params[0]}
        if self.kind == "mixture":
            return {
                "type": "mixture",
                "components": [c.to_config() for c in self.components],
                "weights": list(self.weights),
            }
        if self.kind == "pmf":
            return {"type": "pmf", "table": {str(k): v for k, v in self.params}}
        exponent, dmin, dmax = self.params
        return {"type": "powerlaw", "exponent": exponent, "dmin": dmin, "dmax": dmax}

    # ------------------------------------------------------------------ support
    @property
    def support_max(self) -> int | None:
        """Largest support point, or None for infinite support."""
        if self.kind == "dirac":
            return self.params[0]
        if self.kind == "poisson":
            return None
        if self.kind == "mixture":
            tops = [c.support_max for c in self.components]
            return None if any(t is None for t in tops) else max(tops)
        if self.kind == "pmf":
            return max(k for k, v in self.params if v > 0)
        return self.params[2]

    @property
    def support_min(self) -> int:
        if self.kind == "dirac":
            return self.params[0]
        if self.kind == "poisson":
            return 0
        if self.kind == "mixture":
            return min(c.support_min for c, w in zip(self.components, self.weights) if w > 0)
        if self.kind == "pmf":
            return min(k for k, v in self.params if v > 0)
        return self.params[1]

    def pmf_range(self, hi: int) -> np.ndarray:
        """P(D = k) for k = 0..hi-1, exact (no truncation)."""
        k = np.arange(hi)
        if self.kind == "dirac":
            out = np.zeros(hi)
            if self.params[0] < hi:
                out[self.params[0]] = 1.0
            return out
        if self.kind == "poisson":
            return stats.poisson.pmf(k, self.params[0])
        if self.kind == "mixture":
            out = np.zeros(hi)
            for c, w in zip(self.components, self.weights):
                out += w * c.pmf_range(hi)
            return out
        if self.kind == "pmf":
            out = np.zeros(hi)
            for kk, v in self.params:
                if kk < hi:
                    out[kk] = v
            return out
        exponent, dmin, dmax = self.params
        ks = np.arange(dmin, dmax + 1, dtype=float)
        w = ks ** (-exponent)
        w /= w.sum()
        out = np.zeros(hi)
        top = min(hi, dmax + 1)
        if top > dmin:
            out[dmin:top] = w[: top - dmin]
        return out

    def table(self) -> np.ndarray:
        """pmf over 0..K with the infinite tail dropped once its mass is negligible."""
        if "table" in self._cache:
            return self._cache["table"]
        top = self.support_max
        if top is not None:
            p = self.pmf_range(top + 1)
        else:
            hi = 64
            while True:
                p = self.pmf_range(hi)
                tail = 1.0 - p.sum()
                if tail < _TABLE_TAIL or p[-8:].max() < _TABLE_TAIL * 1e-3:
                    break
                if hi > SUPPORT_CAP:
                    raise DivergenceError("pmf table did not converge within the support cap")
                hi *= 2
            nz = np.nonzero(p > 0)[0]
            p = p[: nz[-1] + 1]
        p.setflags(write=False)
        self._cache["table"] = p
        return p

    # ------------------------------------------------------------------ sampling
    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "dirac":
            return np.full(size, self.params[0], dtype=np.int64)
        if self.kind == "poisson":
            return rng.poisson(self.params[0], size=size).astype(np.int64)
        p = self.table()
        return rng.choice(p.size, size=size, p=p / p.sum()).astype(np.int64)

    @property
    def mean(self) -> float:
        return moment(self, 1)


def pmf(dist: DegreeDistribution, k: int) -> float:
    """P(D = k); zero outside the support."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return float(dist.pmf_range(k + 1)[k])


def moment(dist: DegreeDistribution, k: float) -> float:
    """E D^k, summed until the tail contribution is below ``tail_tol`` of the total."""
    if not k > 0:
        raise ValueError("moment order must be positive")
    top = dist.support_max
    if top is not None:
        p = dist.pmf_range(top + 1)
        return float(np.sum(np.arange(top + 1, dtype=float) ** k * p))
    hi = 64
    total = 0.0
    lo = 0
    while True:
        p = dist.pmf_range(hi)[lo:]
        terms = np.arange(lo, hi, dtype=float) ** k * p
        block = terms.sum()
        total += block
        # last block small relative to everything accumulated so far
        if total > 0 and block < dist.tail_tol * total and terms[-1] < dist.tail_tol * total:
            return float(total)
        if hi >= SUPPORT_CAP:
            raise DivergenceError(f"moment of order {k} did not converge within {SUPPORT_CAP}")
        lo, hi = hi, min(2 * hi, SUPPORT_CAP)


def thinned_pmf(dist: DegreeDistribution, h: float, l: int) -> float:
    """P(D_h = l) with D_h = Bin(D, h), by the direct double sum."""
    if not 0.0 <= h <= 1.0 or l < 0:
        raise ValueError("need h in [0, 1] and l >= 0")
    p = dist.table()
    if l >= p.size:
        return 0.0
    j = np.arange(l, p.size)
    return float(np.sum(stats.binom.pmf(l, j, h) * p[l:]))


def thinned_table(dist: DegreeDistribution, h: float) -> np.ndarray:
    """The whole law of D_h over 0..K."""
    p = dist.table()
    k = np.arange(p.size)
    return stats.binom.pmf(k[:, None], k[None, :], h) @ p


def F_r(dist: DegreeDistribution, h, r: int):
    """E[D_h 1{D_h >= r}]; accepts scalar or array ``h``.

    Uses E[Bin(j,h) 1{Bin(j,h) >= r}] = j h P(Bin(j-1, h) >= r-1).
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    p = dist.table()
    j = np.arange(p.size)
    hh = np.atleast_1d(np.asarray(h, dtype=float))
    js = j[None, :]
    tail = stats.binom.sf(r - 2, np.maximum(js - 1, 0), hh[:, None])
    tail = np.where(js >= 1, tail, 0.0)
    out = (js * hh[:, None] * tail) @ p
    return out if np.ndim(h) else float(out[0])


def rho_r(dist: DegreeDistribution, h, r: int):
    """P(D_h >= r); accepts scalar or array ``h``."""
    if r < 1:
        raise ValueError("r must be >= 1")
    p = dist.table()
    j = np.arange(p.size)
    hh = np.atleast_1d(np.asarray(h, dtype=float))
    out = stats.binom.sf(r - 1, j[None, :], hh[:, None]) @ p
    return out if np.ndim(h) else float(out[0])


@dataclass(frozen=True)
class CoreThresholdResult:
    hhat: float
    rho: float
    condition_holds: bool
    r: int


def solve_core_threshold(
    dist: DegreeDistribution, r: int, grid_step: float = 1e-4, xtol: float = 1e-10
) -> CoreThresholdResult:
    """Locate hhat, the largest h <= 1 with d h^2 = F_r(h), and rho_r(hhat).

    ``condition_holds`` reports whether F_r(h) - d h^2 > 0 somewhere on the grid.
    A law with no mass on 1..r-1 has equality at h = 1; that case is returned as
    hhat = 1 even when the strict condition fails.

    Raises
    ------
    NoCoreError
        If neither the strict condition nor the h = 1 equality holds.
    """
    if r < 2:
        raise ValueError("r must be >= 2")
    d = dist.mean

    def gap(h):
        return F_r(dist, h, r) - d * np.asarray(h) ** 2

    n_grid = int(np.ceil(1.0 / grid_step))
    hs = np.linspace(1.0, 0.0, n_grid + 1)[:-1]  # descending, excludes 0
    g = gap(hs)
    holds = bool(np.any(g > 0))
    scale = max(d, 1.0)
    at_one = abs(g[0]) <= 1e-12 * scale

    if at_one and rho_r(dist, 1.0, r) > 0:
        return CoreThresholdResult(1.0, rho_r(dist, 1.0, r), holds, r)
    if not holds:
        raise NoCoreError(f"no {r}-core: d h^2 >= F_r(h) on all of (0, 1]")

    # scanning down from h = 1, the first positive point brackets the largest root
    i = int(np.argmax(g > 0))
    lo, hi = hs[i], hs[i - 1]  # gap(lo) > 0 >= gap(hi)
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    hhat = 0.5 * (lo + hi)
    return CoreThresholdResult(float(hhat), rho_r(dist, hhat, r), holds, r)


def er_core_threshold(r: int, alpha_max: float = 50.0, tol: float = 1e-8) -> float:
    """d_r = min over alpha > 0 of alpha / P(Pois(alpha) >= r - 1).

    Coarse scan on (0, alpha_max] for a bracket, then golden-section search.
    """
    if r < 3:
        raise ValueError("r must be >= 3")

    def obj(a):
        return a / stats.poisson.sf(r - 2, a)

    grid = np.linspace(alpha_max / 2000, alpha_max, 2000)
    vals = obj(grid)
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    invphi = (np.sqrt(5) - 1) / 2
    c, e = b - invphi * (b - a), a + invphi * (b - a)
    fc, fe = obj(c), obj(e)
    while b - a > tol:
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - invphi * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, e, fe
            e = a + invphi * (b - a)
            fe = obj(e)
    return float(obj(0.5 * (a + b)))
