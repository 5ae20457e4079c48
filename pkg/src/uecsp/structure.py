"""Set-level structure of UE constraints: reducibility, F2 symmetry, groups.

Every check returns ``None`` when the property holds and an
``AsymmetryWitness`` otherwise; the ``is_*`` wrappers give plain booleans.
Fast paths come with a slower literal twin (``method=...``) for testing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .abelian import AbelianGroup, decompose_group, invariant_factors_from_table
from .constraints import (
    MAX_TABLE_ENTRIES,
    AsymmetryWitness,
    ConstraintFunction,
    commutativity_violation,
    common_shape,
    decode,
    uniqueness_violation,
)


def _require_ue(psis: Sequence[ConstraintFunction]) -> None:
    for psi in psis:
        w = uniqueness_violation(psi)
        if w is not None:
            raise ValueError(f"{psi.name} is not uniquely extendable: {w.data}")


def _unique_names(psis: Sequence[ConstraintFunction]) -> None:
    names = [p.name for p in psis]
    if len(set(names)) != len(names):
        raise ValueError("constraint names must be distinct within a set")


def _as_list(psis) -> list[ConstraintFunction]:
    if isinstance(psis, ConstraintFunction):
        return [psis]
    return list(psis)


# -- reducibility ---------------------------------------------------------


def reducibility_violation(psis, method: str = "classes") -> AsymmetryWitness | None:
    """Search for sigma eta |= psi, sigma' eta |= psi, sigma eta' |= psi' with
    sigma' eta' not |= psi', over all split depths d = 0..k.

    ``classes``: two prefixes sharing an extension under some psi must have
    identical extension sets under every member.  ``brute``: boolean matrix
    products spelling out the quantifiers pair by pair.
    """
    psis = _as_list(psis)
    k, r = common_shape(psis)
    _unique_names(psis)
    _require_ue(psis)
    for d in range(k + 1):
        mats = [p.mask.reshape(r**d, r ** (k - d)) for p in psis]
        if method == "classes":
            w = _reducibility_classes(psis, mats, d, k, r)
        elif method == "brute":
            w = _reducibility_brute(psis, mats, d, k, r)
        else:
            raise ValueError(f"unknown method {method!r}")
        if w is not None:
            return w
    return None


def is_reducible(psis, method: str = "classes") -> bool:
    return reducibility_violation(psis, method) is None


def _irreducible(psis, d, k, r, i, j, s, sp, e, ep) -> AsymmetryWitness:
    return AsymmetryWitness(
        "irreducible",
        {
            "d": d,
            "psi": psis[i].name,
            "psi_prime": psis[j].name,
            "sigma": decode(int(s), r, d),
            "sigma_prime": decode(int(sp), r, d),
            "eta": decode(int(e), r, k - d),
            "eta_prime": decode(int(ep), r, k - d),
        },
    )


def _reducibility_classes(psis, mats, d, k, r):
    stacked = np.concatenate(mats, axis=1)
    _, keys = np.unique(stacked, axis=0, return_inverse=True)
    keys = keys.reshape(-1)
    big = keys.max() + 1
    for i, M in enumerate(mats):
        lo = np.where(M, keys[:, None], big).min(axis=0)
        hi = np.where(M, keys[:, None], -1).max(axis=0)
        bad = np.flatnonzero((hi >= 0) & (lo != hi))
        if bad.size == 0:
            continue
        eta = int(bad[0])
        rows = np.flatnonzero(M[:, eta])
        s = int(rows[np.argmax(keys[rows] == lo[eta])])
        sp = int(rows[np.argmax(keys[rows] != lo[eta])])
        # orient so that sigma has an extension under psi' that sigma' lacks
        for j, C in enumerate(mats):
            diff = C[s] != C[sp]
            if diff.any():
                ep = int(np.flatnonzero(diff)[0])
                if not C[s, ep]:
                    s, sp = sp, s
                return _irreducible(psis, d, k, r, i, j, s, sp, eta, ep)
    return None


def _reducibility_brute(psis, mats, d, k, r):
    for i, A in enumerate(mats):
        Af = A.astype(np.float32)
        common = (Af @ Af.T) > 0
        for j, C in enumerate(mats):
            Cf = C.astype(np.float32)
            viol = (Cf @ (1 - Cf).T) > 0
            hit = np.argwhere(common & viol)
            if hit.size:
                s, sp = (int(x) for x in hit[0])
                eta = int(np.flatnonzero(A[s] & A[sp])[0])
                ep = int(np.flatnonzero(C[s] & ~C[sp])[0])
                return _irreducible(psis, d, k, r, i, j, s, sp, eta, ep)
    return None


# -- F1 / F2 evaluation ---------------------------------------------------


def evaluate_F2(outer: ConstraintFunction, inner: Sequence[ConstraintFunction], args) -> int:
    """f_outer(f_inner[0](args[0]), ..., f_inner[k-2](args[k-2]))."""
    k = outer.k
    if len(inner) != k - 1 or len(args) != k - 1:
        raise ValueError(f"need {k - 1} inner functions and argument tuples")
    mids = []
    for psi, a in zip(inner, args):
        a = tuple(int(s) for s in a)
        if psi.k != k or psi.r != outer.r or len(a) != k - 1:
            raise ValueError("arity mismatch")
        mids.append(int(psi.completion(k - 1)[a]))
    return int(outer.completion(k - 1)[tuple(mids)])


def evaluate_composite(node, args: Sequence[int]) -> int:
    """Evaluate a member of F_i lazily.

    ``node`` is ``None`` for the identity (one argument) or ``(psi, children)``
    with k-1 child nodes; ``args`` are consumed left to right.
    """
    args = [int(a) for a in args]
    value, used = _eval_node(node, args, 0)
    if used != len(args):
        raise ValueError(f"expected {used} arguments, got {len(args)}")
    return value


def _eval_node(node, args, pos):
    if node is None:
        if pos >= len(args):
            raise ValueError("not enough arguments")
        return args[pos], pos + 1
    psi, children = node
    if len(children) != psi.k - 1:
        raise ValueError("a composite node needs k-1 children")
    mids = []
    for child in children:
        v, pos = _eval_node(child, args, pos)
        mids.append(v)
    return int(psi.completion(psi.k - 1)[tuple(mids)]), pos


def f2_table(outer: ConstraintFunction, inner: Sequence[ConstraintFunction]) -> np.ndarray:
    """The F2 function as an array of shape (r,) * (k-1)**2."""
    k, r = outer.k, outer.r
    size = r ** ((k - 1) ** 2)
    if size > MAX_TABLE_ENTRIES:
        raise ValueError(f"F2 table would have {size} entries")
    mids = [psi.completion(k - 1).reshape(-1) for psi in inner]
    table = outer.completion(k - 1)[np.ix_(*mids)]
    return table.reshape((r,) * ((k - 1) ** 2))


# -- F2 symmetry ----------------------------------------------------------


def f2_symmetry_violation(psis, method: str = "blocks") -> AsymmetryWitness | None:
    """Search every (psi_0, ..., psi_{k-1}) in Psi^k for an F2 function that
    changes under an adjacent transposition of its (k-1)**2 arguments.

    ``blocks`` exploits the Latin property of the outer function: swaps inside
    one block reduce to the inner table, swaps across a block boundary reduce
    to comparing outer-table slices.  ``table`` materializes each F2 function.
    """
    psis = _as_list(psis)
    k, r = common_shape(psis)
    if k < 2:
        raise ValueError("F2 needs k >= 2")
    _unique_names(psis)
    _require_ue(psis)
    if method == "blocks":
        return _f2_blocks(psis, k, r)
    if method == "table":
        return _f2_table(psis, k, r)
    raise ValueError(f"unknown method {method!r}")


def is_F2_symmetric(psis, method: str = "blocks") -> bool:
    return f2_symmetry_violation(psis, method) is None


def _f2_witness(outer, inner, blocks, t):
    k = outer.k
    args = [int(s) for b in blocks for s in b]
    assert len(args) == (k - 1) ** 2
    return AsymmetryWitness(
        "F2-asymmetric",
        {
            "outer": outer.name,
            "inner": [p.name for p in inner],
            "args": tuple(args),
            "transposition": (t, t + 1),
        },
    )


def _preimage(psi: ConstraintFunction, value: int) -> tuple[int, ...]:
    """Some (k-1)-tuple whose forced last spin is ``value``."""
    k = psi.k
    col = psi.completion(k - 1)[(slice(None),) + (0,) * (k - 2)]
    w = int(np.flatnonzero(col == value)[0])
    return (w,) + (0,) * (k - 2)


def _f2_blocks(psis, k, r):
    n = len(psis)
    # a swap inside block j only touches the inner table of psi_j
    for j in range(n):
        F = psis[j].completion(k - 1)
        for t in range(k - 2):
            bad = np.argwhere(F != np.swapaxes(F, t, t + 1))
            if bad.size:
                block = tuple(int(s) for s in bad[0])
                outer = psis[0]
                inner = [psis[j]] * (k - 1)
                blocks = [block] + [(0,) * (k - 1)] * (k - 2)
                return _f2_witness(outer, inner, blocks, t)
    # a swap across the boundary between blocks b and b+1
    A = r ** (k - 2)
    for o in range(n):
        F0 = psis[o].completion(k - 1)
        for b in range(k - 2):
            moved = np.moveaxis(F0, (b, b + 1), (0, 1)).reshape(r * r, -1)
            _, key = np.unique(moved, axis=0, return_inverse=True)
            key = key.reshape(r, r)
            for i in range(n):
                Fb = psis[i].completion(k - 1).reshape(A, r)
                for j in range(n):
                    Fc = psis[j].completion(k - 1).reshape(r, A)
                    left = key[Fb[:, :, None, None], Fc[None, None, :, :]]
                    right = key[Fb[:, None, :, None], Fc[None, :, None, :]]
                    bad = np.argwhere(left != right)
                    if bad.size == 0:
                        continue
                    a, x, y, bb = (int(v) for v in bad[0])
                    u1, v1 = Fb[a, x], Fc[y, bb]
                    u2, v2 = Fb[a, y], Fc[x, bb]
                    s1 = np.moveaxis(F0, (b, b + 1), (0, 1))[u1, v1].reshape(-1)
                    s2 = np.moveaxis(F0, (b, b + 1), (0, 1))[u2, v2].reshape(-1)
                    c_idx = int(np.flatnonzero(s1 != s2)[0])
                    rest = np.unravel_index(c_idx, (r,) * (k - 3)) if k > 3 else ()
                    inner = [psis[o]] * (k - 1)
                    inner[b], inner[b + 1] = psis[i], psis[j]
                    blocks = []
                    ri = 0
                    for m in range(k - 1):
                        if m == b:
                            blocks.append(tuple(np.unravel_index(a, (r,) * (k - 2))) + (x,))
                        elif m == b + 1:
                            blocks.append((y,) + tuple(np.unravel_index(bb, (r,) * (k - 2))))
                        else:
                            blocks.append(_preimage(inner[m], int(rest[ri])))
                            ri += 1
                    blocks = [tuple(int(s) for s in blk) for blk in blocks]
                    t = b * (k - 1) + (k - 2)
                    return _f2_witness(psis[o], inner, blocks, t)
    return None


def _f2_table(psis, k, r):
    L = (k - 1) ** 2
    for choice in itertools.product(range(len(psis)), repeat=k):
        outer = psis[choice[0]]
        inner = [psis[c] for c in choice[1:]]
        G = f2_table(outer, inner)
        for t in range(L - 1):
            bad = np.argwhere(G != np.swapaxes(G, t, t + 1))
            if bad.size:
                args = [int(s) for s in bad[0]]
                blocks = [tuple(args[m * (k - 1):(m + 1) * (k - 1)]) for m in range(k - 1)]
                return _f2_witness(outer, inner, blocks, t)
    return None


# -- group reconstruction --------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupTable:
    order: int
    add: np.ndarray
    identity: int
    inverse: np.ndarray
    invariant_factors: tuple[int, ...]

    def sum(self, spins: Sequence[int]) -> int:
        total = self.identity
        for s in spins:
            total = int(self.add[total, int(s)])
        return total


@dataclass(frozen=True, eq=False)
class GroupEquivalence:
    """A verified identification of Psi with group constraints.

    ``coordinates`` is an isomorphic product of prime-power cyclic groups and
    ``spin_to_element[s]`` the element index of spin ``s`` in it.
    """

    group: GroupTable
    targets: dict
    base_spin: int
    verified: bool
    coordinates: AbelianGroup
    spin_to_element: np.ndarray
    base_constraint: str = ""

    @property
    def element_to_spin(self) -> np.ndarray:
        out = np.empty_like(self.spin_to_element)
        out[self.spin_to_element] = np.arange(len(out))
        return out

    def target_element(self, name: str) -> int:
        return int(self.spin_to_element[self.targets[name]])

    def to_json(self) -> dict:
        return {
            "order": self.group.order,
            "identity": self.group.identity,
            "invariant_factors": list(self.group.invariant_factors),
            "add": self.group.add.tolist(),
            "targets": {k: int(v) for k, v in self.targets.items()},
            "base_spin": self.base_spin,
            "base_constraint": self.base_constraint,
            "verified": self.verified,
            "coordinates": list(self.coordinates.orders),
            "spin_to_element": self.spin_to_element.tolist(),
        }


def candidate_addition(base: ConstraintFunction, alpha: int) -> np.ndarray:
    """a + b := tau' with (a, b, tau, alpha..) and (tau', tau, alpha..) satisfying base."""
    k, r = base.k, base.r
    if k < 3:
        raise ValueError("group reconstruction needs k >= 3")
    if not 0 <= alpha < r:
        raise ValueError(f"alpha {alpha} outside the spin set")
    last = base.completion(k - 1)
    first = base.completion(0)
    a = np.arange(r)
    tau = last[(a[:, None], a[None, :]) + (alpha,) * (k - 3)]
    return first[(tau,) + (alpha,) * (k - 2)].astype(np.int64)


def _group_axiom_failure(add: np.ndarray, alpha: int):
    r = add.shape[0]
    x = np.arange(r)
    bad = np.flatnonzero(add[alpha] != x)
    if bad.size:
        return {"check": "identity", "elements": (int(bad[0]),)}
    bad = np.argwhere(add != add.T)
    if bad.size:
        return {"check": "commutativity", "elements": tuple(int(v) for v in bad[0])}
    lhs = add[add[:, :, None], x[None, None, :]]
    rhs = add[x[:, None, None], add[None, :, :]]
    bad = np.argwhere(lhs != rhs)
    if bad.size:
        return {"check": "associativity", "elements": tuple(int(v) for v in bad[0])}
    bad = np.flatnonzero(~(add == alpha).any(axis=1))
    if bad.size:
        return {"check": "inverse", "elements": (int(bad[0]),)}
    return None


def _sum_table(add: np.ndarray, k: int) -> np.ndarray:
    r = add.shape[0]
    S = np.arange(r)
    for _ in range(k - 1):
        S = add[S[..., None], np.arange(r)]
    return S


def reconstruct_group(psis, alpha: int = 0) -> GroupEquivalence | AsymmetryWitness:
    """Build a group on the spin set from the first member and verify that
    every member is a group constraint for it.

    Returns a witness of kind not-UE / not-commutative for bad input, or
    no-bijection when a group axiom or the sum characterization fails.
    """
    psis = _as_list(psis)
    k, r = common_shape(psis)
    _unique_names(psis)
    for psi in psis:
        w = uniqueness_violation(psi)
        if w is not None:
            return w
    for psi in psis:
        w = commutativity_violation(psi)
        if w is not None:
            return w
    base = psis[0]
    add = candidate_addition(base, alpha)
    failure = _group_axiom_failure(add, alpha)
    if failure is not None:
        failure.update({"base": base.name, "alpha": alpha})
        return AsymmetryWitness("no-bijection", failure)
    targets = {}
    S = _sum_table(add, k)
    for psi in psis:
        b = int(psi.completion(k - 1)[(alpha,) * (k - 1)])
        bad = np.argwhere(psi.mask != (S == b))
        if bad.size:
            return AsymmetryWitness(
                "no-bijection",
                {
                    "check": "sum",
                    "base": base.name,
                    "alpha": alpha,
                    "constraint": psi.name,
                    "target": b,
                    "tuple": tuple(int(s) for s in bad[0]),
                },
            )
        targets[psi.name] = b
    inverse = np.argmax(add == alpha, axis=1)
    factors = invariant_factors_from_table(add, alpha)
    coords, to_element = decompose_group(add, alpha)
    add.flags.writeable = False
    table = GroupTable(r, add, alpha, inverse, factors)
    return GroupEquivalence(table, targets, alpha, True, coords, to_element, base.name)


def replay_group_failure(data: dict, psis) -> bool:
    """Recompute the candidate addition and confirm the recorded failure."""
    by_name = {p.name: p for p in _as_list(psis)}
    base = by_name[data["base"]]
    alpha = data["alpha"]
    add = candidate_addition(base, alpha)
    r = base.r
    e = [int(v) for v in data.get("elements", ())]
    check = data["check"]
    if check == "identity":
        return int(add[alpha, e[0]]) != e[0]
    if check == "commutativity":
        return int(add[e[0], e[1]]) != int(add[e[1], e[0]])
    if check == "associativity":
        a, b, c = e
        return int(add[add[a, b], c]) != int(add[a, add[b, c]])
    if check == "inverse":
        return all(int(add[e[0], y]) != alpha for y in range(r))
    if check == "sum":
        psi = by_name[data["constraint"]]
        sigma = tuple(data["tuple"])
        total = alpha
        for s in sigma:
            total = int(add[total, s])
        b = int(psi.completion(psi.k - 1)[(alpha,) * (psi.k - 1)])
        return b == data["target"] and psi(sigma) != (total == b)
    raise ValueError(f"unknown group check {check!r}")
