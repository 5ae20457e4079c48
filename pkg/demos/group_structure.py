"""Which commutative UE constraints are group constraints in disguise?

Builds a relabeled Z4 x Z2 sum constraint and recovers its group, then shows
how the twisted product on Z3 x Z2 fails each structural test with a witness.
"""

import numpy as np

from uecsp import (
    AbelianGroup, group_constraint, is_commutative, is_uniquely_extendable, nongroup_family,
    reconstruct_group, replay_witness,
)
from uecsp.structure import GroupEquivalence, f2_symmetry_violation, reducibility_violation

rng = np.random.default_rng(1)

G = AbelianGroup((4, 2))
perm = rng.permutation(G.order)
family = [group_constraint(G, b, 3).relabeled(perm) for b in range(G.order)]
g = reconstruct_group(family)
assert isinstance(g, GroupEquivalence)
print(f"relabeled {G}: recovered invariant factors {g.group.invariant_factors}, "
      f"identity spin {g.group.identity}, coordinates {g.coordinates}")

for k, q1, q2 in [(3, 3, 2), (4, 3, 3)]:
    psi = nongroup_family(k, q1, q2)
    print(f"\n{psi.name}: r={psi.r}, UE={is_uniquely_extendable(psi)}, commutative={is_commutative(psi)}")
    res = reconstruct_group([psi])
    print(f"  reconstruction: {res.kind} {res.data}")
    w = f2_symmetry_violation([psi])
    print(f"  F2 witness: {w.data}  replayed={replay_witness(w, [psi])}")
    w = reducibility_violation([psi])
    if w is None:
        print("  reducible")
    else:
        print(f"  irreducible: {w.data}  replayed={replay_witness(w, [psi])}")
