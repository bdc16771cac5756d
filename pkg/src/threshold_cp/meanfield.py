"""Mean-field map of the threshold-theta process on a (theta+2)-regular tree.

A vertex with theta+1 children, each infected with probability q, is
infected next step with probability

    f(q) = (theta+1) p q^theta (1-q) + p q^(theta+1) = p q^theta ((theta+1) - theta q).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MARGINAL_BAND = 1e-6


def f(q, p: float, theta: int):
    q = np.asarray(q, dtype=float)
    out = p * q**theta * ((theta + 1) - theta * q)
    return out if out.ndim else float(out)


def f_prime(q, p: float, theta: int):
    q = np.asarray(q, dtype=float)
    out = p * theta * (theta + 1) * q ** (theta - 1) * (1 - q)
    return out if out.ndim else float(out)


def _reduced(q, p, theta):
    # f(q)/q - 1 for q > 0; zero set = nonzero fixed points
    return p * q ** (theta - 1) * ((theta + 1) - theta * q) - 1.0


def classify(q: float, p: float, theta: int) -> str:
    slope = abs(f_prime(q, p, theta))
    if abs(slope - 1.0) < MARGINAL_BAND:
        return "marginal"
    return "stable" if slope < 1.0 else "unstable"


@dataclass
class FixedPointReport:
    p: float
    theta: int
    roots: list[tuple[float, str]] = field(default_factory=list)

    @property
    def has_nontrivial(self) -> bool:
        return any(q > 0 for q, _ in self.roots)

    def to_rows(self) -> list[dict]:
        return [{"p": self.p, "q": q, "stability": s} for q, s in self.roots]


def fixed_points(p: float, theta: int, tol: float = 1e-12, grid_step: float = 1e-4) -> FixedPointReport:
    """All solutions of f(q) = q on [0, 1], with stability from |f'(q)|.

    q = 0 is always reported. Nonzero roots come from sign changes of
    f(q)/q - 1 on a grid, refined by bisection to ``tol``. That function is
    unimodal with its peak at (theta^2 - 1)/theta^2, which is added to the
    grid so a tangential (double) root is caught as well.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    report = FixedPointReport(p, theta, [(0.0, classify(0.0, p, theta))])
    if p == 0:
        return report
    peak = (theta**2 - 1) / theta**2
    grid = np.union1d(np.arange(grid_step, 1.0, grid_step), [peak, 1.0])
    g = _reduced(grid, p, theta)
    found = grid[:-1][g[:-1] == 0.0].tolist()
    for i in np.flatnonzero(g[:-1] * g[1:] < 0).tolist():
        lo, hi, glo = grid[i], grid[i + 1], g[i]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            gm = _reduced(mid, p, theta)
            if (gm < 0) == (glo < 0):
                lo, glo = mid, gm
            else:
                hi = mid
        found.append(0.5 * (lo + hi))
    if g[-1] == 0.0:
        found.append(1.0)
    # tangency at the peak: within rounding of zero but not a sign change
    if peak not in found and abs(_reduced(peak, p, theta)) * peak < 1e-12:
        found.append(peak)
    for q in sorted(set(found)):
        if abs(f(q, p, theta) - q) < 1e-10:
            report.roots.append((float(q), classify(q, p, theta)))
    return report


def critical_p(theta: int, tol: float = 1e-12) -> float:
    """Infimum of p for which f(q) = q has a root q > tol, by bisection on p."""
    if not tol > 0:
        raise ValueError("tol must be positive")

    def nontrivial(p):
        return any(q > tol for q, _ in fixed_points(p, theta, tol=min(tol, 1e-12)).roots)

    lo, hi = 0.0, 1.0
    if not nontrivial(hi):
        return float("nan")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if nontrivial(mid):
            hi = mid
        else:
            lo = mid
    return hi


def iterate(q0: float, p: float, theta: int, steps: int = 10_000) -> float:
    q = q0
    for _ in range(steps):
        q = f(q, p, theta)
    return q


def table(p_grid, theta: int, tol: float = 1e-12) -> list[dict]:
    """Rows (p, q, stability) for every fixed point at every p."""
    rows = []
    for p in p_grid:
        rows.extend(fixed_points(float(p), theta, tol).to_rows())
    return rows


def table_csv(p_grid, theta: int, tol: float = 1e-12) -> str:
    lines = ["p,q,stability"]
    lines.extend(f"{r['p']!r},{r['q']!r},{r['stability']}" for r in table(p_grid, theta, tol))
    return "\n".join(lines) + "\n"
