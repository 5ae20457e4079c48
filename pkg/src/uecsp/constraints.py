"""Constraint functions over a finite spin set.

A k-ary constraint over r spins is stored as its set of satisfying tuples.
Tuples are identified with their big-endian base-r index, so the satisfying
mask reshaped to ``(r,) * k`` in C order is indexed directly by spins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_TABLE_ENTRIES = 1 << 24

WITNESS_KINDS = ("F2-asymmetric", "irreducible", "not-commutative", "not-UE", "no-bijection")


def encode(spins: Sequence[int], r: int) -> int:
    """Big-endian base-r index of a spin tuple."""
    index = 0
    for s in spins:
        if not 0 <= s < r:
            raise ValueError(f"spin {s} outside [0, {r})")
        index = index * r + int(s)
    return index


def decode(index: int, r: int, arity: int) -> tuple[int, ...]:
    if not 0 <= index < r**arity:
        raise ValueError(f"index {index} outside [0, {r}**{arity})")
    out = []
    for _ in range(arity):
        index, s = divmod(index, r)
        out.append(s)
    return tuple(reversed(out))


def all_tuples(r: int, arity: int) -> np.ndarray:
    """All of Omega^arity as rows, in canonical order."""
    grids = np.indices((r,) * arity).reshape(arity, -1)
    return grids.T.copy()


def _check_size(k: int, r: int) -> None:
    if k < 1 or r < 2:
        raise ValueError(f"need k >= 1 and r >= 2, got k={k}, r={r}")
    if r**k > MAX_TABLE_ENTRIES:
        raise ValueError(f"table r**k = {r}**{k} exceeds {MAX_TABLE_ENTRIES} entries")


@dataclass(frozen=True)
class AsymmetryWitness:
    """A concrete violation of one of the structural properties.

    ``data`` holds plain tuples/ints/strings so that it serializes directly.
    """

    kind: str
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in WITNESS_KINDS:
            raise ValueError(f"unknown witness kind {self.kind!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "data": _jsonable(self.data)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass(frozen=True, eq=False)
class ConstraintFunction:
    k: int
    r: int
    satisfying: tuple[int, ...]
    name: str = "psi"

    def __post_init__(self):
        _check_size(self.k, self.r)
        sat = tuple(sorted(set(int(i) for i in self.satisfying)))
        if sat and not (0 <= sat[0] and sat[-1] < self.r**self.k):
            raise ValueError("satisfying index out of range")
        object.__setattr__(self, "satisfying", sat)

    @classmethod
    def from_mask(cls, mask, name: str = "psi") -> "ConstraintFunction":
        mask = np.asarray(mask, dtype=bool)
        k = mask.ndim
        r = mask.shape[0]
        if mask.shape != (r,) * k:
            raise ValueError(f"mask shape {mask.shape} is not (r,)*k")
        _check_size(k, r)
        return cls(k, r, tuple(np.flatnonzero(mask.reshape(-1)).tolist()), name)

    @classmethod
    def from_predicate(cls, k: int, r: int, pred: Callable[..., bool], name: str = "psi"):
        _check_size(k, r)
        tuples = all_tuples(r, k)
        keep = [i for i, t in enumerate(tuples) if pred(*t)]
        return cls(k, r, tuple(keep), name)

    @classmethod
    def from_extension_table(cls, k: int, r: int, table: Sequence[int], name: str = "psi"):
        """Build from the forced last spin of every (k-1)-prefix.

        The result is UE at the last position by construction; full UE is not
        implied and should be checked by the caller.
        """
        _check_size(k, r)
        table = np.asarray(table, dtype=np.int64)
        if table.shape != (r ** (k - 1),):
            raise ValueError(f"extension table must have length {r ** (k - 1)}")
        if table.size and (table.min() < 0 or table.max() >= r):
            raise ValueError("extension table entry outside the spin set")
        sat = np.arange(r ** (k - 1), dtype=np.int64) * r + table
        return cls(k, r, tuple(sat.tolist()), name)

    @cached_property
    def mask(self) -> np.ndarray:
        flat = np.zeros(self.r**self.k, dtype=bool)
        flat[list(self.satisfying)] = True
        out = flat.reshape((self.r,) * self.k)
        out.flags.writeable = False
        return out

    def __call__(self, *spins: int) -> bool:
        if len(spins) == 1 and isinstance(spins[0], (tuple, list, np.ndarray)):
            spins = tuple(spins[0])
        return bool(self.mask[tuple(spins)])

    def satisfied_by(self, spins: Sequence[int]) -> bool:
        return bool(self.mask[tuple(spins)])

    def same_relation(self, other: "ConstraintFunction") -> bool:
        return (self.k, self.r, self.satisfying) == (other.k, other.r, other.satisfying)

    def renamed(self, name: str) -> "ConstraintFunction":
        return ConstraintFunction(self.k, self.r, self.satisfying, name)

    def relabeled(self, perm: Sequence[int], name: str | None = None) -> "ConstraintFunction":
        """Image of the constraint under the spin bijection ``s -> perm[s]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.r)):
            raise ValueError("perm is not a permutation of the spin set")
        tuples = all_tuples(self.r, self.k)[list(self.satisfying)]
        images = perm[tuples]
        weights = self.r ** np.arange(self.k - 1, -1, -1)
        return ConstraintFunction(
            self.k, self.r, tuple((images @ weights).tolist()), name or self.name
        )

    @cached_property
    def key(self) -> tuple:
        return (self.k, self.r, self.satisfying)

    def completion(self, position: int) -> np.ndarray:
        """Forced spin at ``position`` as a function of the other k-1 spins.

        Only meaningful for UE constraints; entries are the first satisfying
        spin (0 when there is none).
        """
        return _completion_tables(self)[position]

    def __repr__(self):
        return f"ConstraintFunction(name={self.name!r}, k={self.k}, r={self.r}, |sat|={len(self.satisfying)})"


def _completion_tables(psi: ConstraintFunction) -> tuple[np.ndarray, ...]:
    cache = psi.__dict__.get("_completions")
    if cache is None:
        cache = tuple(np.argmax(psi.mask, axis=i) for i in range(psi.k))
        for t in cache:
            t.flags.writeable = False
        psi.__dict__["_completions"] = cache
    return cache


@dataclass(frozen=True)
class ExtensionTable:
    """The map f_psi from (k-1)-prefixes to the forced last spin."""

    k: int
    r: int
    table: np.ndarray

    def __call__(self, *prefix: int) -> int:
        if len(prefix) == 1 and isinstance(prefix[0], (tuple, list, np.ndarray)):
            prefix = tuple(prefix[0])
        return int(self.table[encode(prefix, self.r)])

    def as_array(self) -> np.ndarray:
        """The table reshaped to ``(r,) * (k-1)``."""
        return self.table.reshape((self.r,) * (self.k - 1))


def uniqueness_violation(psi: ConstraintFunction) -> AsymmetryWitness | None:
    """First (position, partial tuple) whose completion count is not 1.

    The last position is examined first, then positions 0..k-2; within a
    position, partial tuples are scanned in canonical order.
    """
    order = [psi.k - 1] + list(range(psi.k - 1))
    for pos in order:
        counts = psi.mask.sum(axis=pos)
        bad = np.argwhere(counts != 1)
        if bad.size:
            partial = tuple(int(s) for s in bad[0])
            return AsymmetryWitness(
                "not-UE",
                {
                    "constraint": psi.name,
                    "position": pos,
                    "partial": partial,
                    "count": int(counts[partial]),
                },
            )
    return None


def is_uniquely_extendable(psi: ConstraintFunction) -> bool:
    return uniqueness_violation(psi) is None


def extension_function(psi: ConstraintFunction) -> ExtensionTable:
    witness = uniqueness_violation(psi)
    if witness is not None:
        raise ValueError(f"{psi.name} is not uniquely extendable: {witness.data}")
    table = psi.completion(psi.k - 1).reshape(-1).astype(np.int64)
    table.flags.writeable = False
    return ExtensionTable(psi.k, psi.r, table)


def commutativity_violation(psi: ConstraintFunction) -> AsymmetryWitness | None:
    """A satisfying tuple whose image under an adjacent transposition is not."""
    mask = psi.mask
    for i in range(psi.k - 1):
        swapped = np.swapaxes(mask, i, i + 1)
        bad = np.argwhere(mask & ~swapped)
        if bad.size:
            sigma = tuple(int(s) for s in bad[0])
            return AsymmetryWitness(
                "not-commutative",
                {"constraint": psi.name, "tuple": sigma, "transposition": (i, i + 1)},
            )
    return None


def is_commutative(psi: ConstraintFunction) -> bool:
    return commutativity_violation(psi) is None


def common_shape(psis: Iterable[ConstraintFunction]) -> tuple[int, int]:
    psis = list(psis)
    if not psis:
        raise ValueError("constraint set is empty")
    shapes = {(p.k, p.r) for p in psis}
    if len(shapes) != 1:
        raise ValueError(f"constraints disagree on (k, r): {sorted(shapes)}")
    return shapes.pop()


def constant_solutions(psis: Iterable[ConstraintFunction]) -> set[int]:
    """Spins s whose constant tuple s^k satisfies every member."""
    psis = list(psis)
    k, r = common_shape(psis)
    return {s for s in range(r) if all(p.mask[(s,) * k] for p in psis)}


def replay_witness(witness: AsymmetryWitness, psis: Iterable[ConstraintFunction]) -> bool:
    """Re-derive the violation a witness claims, straight from the definitions."""
    from . import structure

    psis = list(psis)
    by_name = {p.name: p for p in psis}
    data = witness.data
    if witness.kind == "not-UE":
        psi = by_name[data["constraint"]]
        pos, partial = data["position"], list(data["partial"])
        count = sum(psi(tuple(partial[:pos] + [t] + partial[pos:])) for t in range(psi.r))
        return count != 1 and count == data["count"]
    if witness.kind == "not-commutative":
        psi = by_name[data["constraint"]]
        sigma = list(data["tuple"])
        i, j = data["transposition"]
        swapped = sigma.copy()
        swapped[i], swapped[j] = swapped[j], swapped[i]
        return psi(tuple(sigma)) and not psi(tuple(swapped))
    if witness.kind == "irreducible":
        psi, psi_p = by_name[data["psi"]], by_name[data["psi_prime"]]
        s, sp = tuple(data["sigma"]), tuple(data["sigma_prime"])
        e, ep = tuple(data["eta"]), tuple(data["eta_prime"])
        return (
            psi(s + e) and psi(sp + e) and psi_p(s + ep) and not psi_p(sp + ep)
        )
    if witness.kind == "F2-asymmetric":
        outer = by_name[data["outer"]]
        inner = [by_name[n] for n in data["inner"]]
        args = list(data["args"])
        i, j = data["transposition"]
        swapped = args.copy()
        swapped[i], swapped[j] = swapped[j], swapped[i]
        k = outer.k
        blocks = [tuple(args[b * (k - 1):(b + 1) * (k - 1)]) for b in range(k - 1)]
        sblocks = [tuple(swapped[b * (k - 1):(b + 1) * (k - 1)]) for b in range(k - 1)]
        return structure.evaluate_F2(outer, inner, blocks) != structure.evaluate_F2(
            outer, inner, sblocks
        )
    if witness.kind == "no-bijection":
        return structure.replay_group_failure(data, psis)
    raise ValueError(f"cannot replay witness kind {witness.kind!r}")  # pragma: no cover
