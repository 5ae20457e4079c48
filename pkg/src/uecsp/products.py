"""Twisted products of UE constraints and the non-group family built from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .abelian import AbelianGroup, group_constraint
from .constraints import ConstraintFunction, all_tuples


@dataclass(frozen=True)
class ThetaMap:
    """A symmetric map from k-tuples over the first spin set to permutations
    of the second.  Keys are sorted tuples (multisets); absent keys map to
    the identity.
    """

    k: int
    r1: int
    r2: int
    table: Mapping[tuple, tuple] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, perm in dict(self.table).items():
            key = tuple(sorted(int(s) for s in key))
            perm = tuple(int(s) for s in perm)
            if len(key) != self.k or not all(0 <= s < self.r1 for s in key):
                raise ValueError(f"bad theta key {key}")
            if sorted(perm) != list(range(self.r2)):
                raise ValueError(f"theta value {perm} is not a permutation")
            clean[key] = perm
        object.__setattr__(self, "table", clean)

    @classmethod
    def identity(cls, k: int, r1: int, r2: int) -> "ThetaMap":
        return cls(k, r1, r2, {})

    def __call__(self, alpha: Sequence[int]) -> tuple[int, ...]:
        key = tuple(sorted(int(s) for s in alpha))
        return self.table.get(key, tuple(range(self.r2)))

    def as_array(self) -> np.ndarray:
        """Permutation for every alpha in canonical order, shape (r1**k, r2)."""
        alphas = all_tuples(self.r1, self.k)
        out = np.tile(np.arange(self.r2), (len(alphas), 1))
        if self.table:
            keys = np.sort(alphas, axis=1)
            for key, perm in self.table.items():
                hit = np.all(keys == np.array(key), axis=1)
                out[hit] = perm
        return out

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "r1": self.r1,
            "r2": self.r2,
            "table": [{"multiset": list(key), "perm": list(p)} for key, p in sorted(self.table.items())],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ThetaMap":
        table = {tuple(e["multiset"]): tuple(e["perm"]) for e in obj.get("table", [])}
        return cls(int(obj["k"]), int(obj["r1"]), int(obj["r2"]), table)


def product_theta(
    psi1: ConstraintFunction,
    psi2: ConstraintFunction,
    theta: ThetaMap,
    name: str | None = None,
) -> ConstraintFunction:
    """psi1 x_theta psi2 on pairs (a, b) encoded as the spin a * r2 + b.

    A tuple of pairs satisfies the product iff the first coordinates satisfy
    psi1 and the second coordinates, each pushed through theta of the first
    coordinates, satisfy psi2.
    """
    k = psi1.k
    if psi2.k != k or theta.k != k:
        raise ValueError("arity mismatch between factors and theta")
    if theta.r1 != psi1.r or theta.r2 != psi2.r:
        raise ValueError("theta spin sets do not match the factors")
    r1, r2 = psi1.r, psi2.r
    alphas = all_tuples(r1, k)
    betas = all_tuples(r2, k)
    ok1 = psi1.mask.reshape(-1)
    perms = theta.as_array()
    w2 = r2 ** np.arange(k - 1, -1, -1)
    wp = (r1 * r2) ** np.arange(k - 1, -1, -1)
    sat = []
    for ai in np.flatnonzero(ok1):
        moved = perms[ai][betas]
        good = psi2.mask.reshape(-1)[moved @ w2]
        pairs = alphas[ai][None, :] * r2 + betas[good]
        sat.append(pairs @ wp)
    sat = np.concatenate(sat) if sat else np.zeros(0, dtype=np.int64)
    if name is None:
        name = f"{psi1.name}x_theta{psi2.name}"
    return ConstraintFunction(k, r1 * r2, tuple(sat.tolist()), name)


def nongroup_target(k: int, q2: int) -> int:
    """The second-factor target: 1 unless k = 2 mod q2."""
    return 0 if k % q2 == 2 % q2 else 1


def nongroup_family(k: int, q1: int, q2: int) -> ConstraintFunction:
    """Commutative UE constraint on Z_q1 x Z_q2 that is not a group constraint.

    Product of sum constraints on Z_q1 (target 0) and Z_q2 (target b), with
    the twist swapping 0 and 1 exactly at the all-zero first-coordinate tuple.
    """
    if k < 3 or q1 < 3 or not (q2 >= 3 or (q2 == 2 and k % 2 == 1)):
        raise ValueError(
            "need k >= 3, q1 >= 3 and either q2 >= 3 or (q2 = 2 with k odd)"
        )
    b = nongroup_target(k, q2)
    psi1 = group_constraint(AbelianGroup.cyclic(q1), 0, k)
    psi2 = group_constraint(AbelianGroup.cyclic(q2), b, k)
    swap = list(range(q2))
    swap[0], swap[1] = 1, 0
    theta = ThetaMap(k, q1, q2, {(0,) * k: tuple(swap)})
    return product_theta(psi1, psi2, theta, name=f"nongroup[k={k};q1={q1};q2={q2}]")
