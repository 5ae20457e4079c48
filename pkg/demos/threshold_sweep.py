"""Satisfiability of random XOR-type instances across the threshold.

Prints the computed critical densities, then a small seeded sweep and its
interpolated crossover.  The full-size run is ``uecsp sweep``.
"""

from uecsp import AbelianGroup, ConstraintDistribution, group_constraint, thresholds
from uecsp.experiments import SweepConfig, estimate_crossover, sweep_satisfiability

for k in (3, 4, 5):
    c = thresholds.critical(k)
    print(f"k={k}: core appears at d={c['d_star']:.6f}, satisfiability lost at d/k={c['d_k_over_k']:.6f}")

Z2 = AbelianGroup.cyclic(2)
dist = ConstraintDistribution.uniform([group_constraint(Z2, 0, 3), group_constraint(Z2, 1, 3)])
grid = tuple(round(0.84 + 0.02 * i, 2) for i in range(8))
res = sweep_satisfiability(SweepConfig(3, 2, dist, 200, grid, 40, seed=11))
print()
print(res.to_csv(), end="")
print(f"crossover d/k = {estimate_crossover(res.rows):.4f} (limit {thresholds.critical(3)['d_k_over_k']:.4f})")
