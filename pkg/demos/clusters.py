"""Cluster structure of small random instances by exhaustive enumeration.

For each instance: the 2-core, the flippable-cycle columns, the frozen set
V*, and how the solutions split into clusters of equal size.
"""

from uecsp import AbelianGroup, ConstraintDistribution, group_constraint
from uecsp.experiments import cluster_census
from uecsp.clusters import cluster_exponent_experiment
from uecsp.thresholds import profile

Z2 = AbelianGroup.cyclic(2)
dist = ConstraintDistribution.uniform([group_constraint(Z2, 0, 3), group_constraint(Z2, 1, 3)])
for rec in cluster_census(3, 2, dist, n=14, d_over_k=0.9, trials=6, seed=3):
    print(f"m={rec['m']:2d} solutions={rec['solutions']:5d} core={rec['n_core']}x{rec['m_core']} "
          f"cycle columns={rec['cycle_columns']} clusters={rec['clusters']} sizes={sorted(set(rec['cluster_sizes']))}")

print("\ncluster count exponent at n=100000, d=2.6 (nats per variable):")
rows = cluster_exponent_experiment(3, 2, 2.6, 100_000, trials=2, seed=1)
for row in rows:
    print(f"  measured {row['count_exponent']:.5f}  formula {row['formula_count_exponent']:.5f}")
print(f"size exponent formula {profile(3, 2, 2.6).cluster_size_exponent:.5f}")
