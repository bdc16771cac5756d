"""
The mean-field map
==================

On the (theta+2)-regular tree a vertex is re-infected with probability
f(q) = p q^theta ((theta+1) - theta q) when each child is infected with
probability q. A nonzero stable fixed point appears at critical_p(theta).
"""

from threshold_cp import meanfield

# theta = 2: the two nonzero roots merge at q = 3/4 when p = 8/9
for p in (0.85, 8 / 9, 0.95, 1.0):
    report = meanfield.fixed_points(p, 2)
    roots = ", ".join(f"{q:.4f} ({s})" for q, s in report.roots)
    print(f"p = {p:.4f}: {roots}")

# the critical p grows with theta
for theta in range(2, 7):
    print(f"theta = {theta}: critical p = {meanfield.critical_p(theta):.9f}")

# iterating from full infection lands on 0 below the threshold and on the top root above it
pc = meanfield.critical_p(3)
for p in (pc - 0.02, pc + 0.02):
    print(f"theta = 3, p = {p:.4f}: f^10000(1) = {meanfield.iterate(1.0, p, 3):.6f}")
