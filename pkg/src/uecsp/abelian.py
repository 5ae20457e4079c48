"""Finite abelian groups and 0/1 linear systems over them.

Elements of ``AbelianGroup(orders)`` are tuples of residues, one per cyclic
factor, and are indexed mixed-radix big-endian (first factor most
significant).  Linear systems ``Bx = b`` with a 0/1 matrix are solved one
prime-power component at a time and recombined by CRT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import sympy

from .constraints import ConstraintFunction, all_tuples


def factor_prime_power(q: int) -> tuple[int, int]:
    f = sympy.factorint(q)
    if len(f) != 1:
        raise ValueError(f"{q} is not a prime power")
    (p, e), = f.items()
    return int(p), int(e)


@dataclass(frozen=True)
class AbelianGroup:
    """Z_{q_1} x ... x Z_{q_h}.

    Factors are usually prime powers; composite cyclic factors such as Z_6
    are accepted and split into prime-power components when solving.
    """

    orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(q) for q in self.orders)
        if not orders or min(orders) < 2:
            raise ValueError("every cyclic factor needs order >= 2")
        object.__setattr__(self, "orders", orders)

    @classmethod
    def cyclic(cls, q: int) -> "AbelianGroup":
        return cls((q,))

    @property
    def order(self) -> int:
        return math.prod(self.orders)

    @cached_property
    def _radix(self) -> np.ndarray:
        w = [1]
        for q in reversed(self.orders[1:]):
            w.append(w[-1] * q)
        return np.array(list(reversed(w)), dtype=np.int64)

    def encode(self, element: Sequence[int]) -> int:
        return int(sum((int(x) % q) * w for x, q, w in zip(element, self.orders, self._radix)))

    def decode(self, index: int) -> tuple[int, ...]:
        return tuple(int(index // w % q) for q, w in zip(self.orders, self._radix))

    @cached_property
    def digits(self) -> np.ndarray:
        """Residue matrix: row i holds the coordinates of element index i."""
        idx = np.arange(self.order, dtype=np.int64)
        return np.stack([(idx // w) % q for q, w in zip(self.orders, self._radix)], axis=1)

    def add(self, a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
        return tuple((x + y) % q for x, y, q in zip(a, b, self.orders))

    def neg(self, a: Sequence[int]) -> tuple[int, ...]:
        return tuple((-x) % q for x, q in zip(a, self.orders))

    def zero(self) -> tuple[int, ...]:
        return (0,) * len(self.orders)

    @cached_property
    def addition_table(self) -> np.ndarray:
        d = self.digits
        s = (d[:, None, :] + d[None, :, :]) % np.array(self.orders)
        return (s * self._radix).sum(axis=2)

    @cached_property
    def components(self) -> tuple[tuple[int, int, int], ...]:
        """Prime-power components as (factor index, p, e)."""
        out = []
        for i, q in enumerate(self.orders):
            for p, e in sorted(sympy.factorint(q).items()):
                out.append((i, int(p), int(e)))
        return tuple(out)

    def invariant_factors(self) -> tuple[int, ...]:
        return invariant_factors_from_elementary(
            [p**e for _, p, e in self.components]
        )

    def __str__(self):
        return "x".join(f"Z{q}" for q in self.orders)


def invariant_factors_from_elementary(divisors: Iterable[int]) -> tuple[int, ...]:
    """Combine prime-power elementary divisors into d_1 | d_2 | ... ."""
    by_prime: dict[int, list[int]] = {}
    for q in divisors:
        if q == 1:
            continue
        p, e = factor_prime_power(q)
        by_prime.setdefault(p, []).append(e)
    length = max((len(v) for v in by_prime.values()), default=0)
    out = []
    for t in range(length):
        d = 1
        for p, exps in by_prime.items():
            exps = sorted(exps, reverse=True)
            if t < len(exps):
                d *= p ** exps[t]
        out.append(d)
    return tuple(sorted(out))


def group_constraint(group: AbelianGroup, b, k: int, name: str | None = None) -> ConstraintFunction:
    """The constraint sum(sigma_i) == b, with spins identified with element indices."""
    if k < 2:
        raise ValueError("group constraints need k >= 2")
    if isinstance(b, (int, np.integer)):
        b = group.decode(int(b)) if len(group.orders) > 1 else (int(b),)
    b = tuple(int(x) % q for x, q in zip(b, group.orders))
    tuples = all_tuples(group.order, k)
    ok = np.ones(len(tuples), dtype=bool)
    for c, q in enumerate(group.orders):
        total = group.digits[tuples, c].sum(axis=1) % q
        ok &= total == b[c]
    if name is None:
        bstr = b[0] if len(b) == 1 else "(" + ",".join(map(str, b)) + ")"
        name = f"psi[{group};b={bstr};k={k}]"
    return ConstraintFunction(k, group.order, tuple(np.flatnonzero(ok).tolist()), name)


# -- group tables ---------------------------------------------------------


def element_orders(add: np.ndarray, identity: int) -> np.ndarray:
    r = add.shape[0]
    orders = np.zeros(r, dtype=np.int64)
    for x in range(r):
        y, n = x, 1
        while y != identity:
            y = add[y, x]
            n += 1
            if n > r:
                raise ValueError("element order exceeds group order; not a group")
        orders[x] = n
    return orders


def invariant_factors_from_table(add: np.ndarray, identity: int) -> tuple[int, ...]:
    """Invariant factors of an abelian group table via an element-order census.

    For each prime p, |{x : p^j x = 0}| = p^(sum_i min(e_i, j)); successive
    ratios give the number of cyclic p-factors of exponent >= j.
    """
    r = add.shape[0]
    orders = element_orders(add, identity)
    elementary = []
    for p, top in sympy.factorint(r).items():
        p = int(p)
        counts = []
        for j in range(top + 1):
            counts.append(int(np.sum((p**j) % orders == 0)))
        logs = [round(math.log(c, p)) for c in counts]
        at_least = [logs[j] - logs[j - 1] for j in range(1, top + 1)]
        for j in range(1, top + 1):
            n_exact = at_least[j - 1] - (at_least[j] if j < top else 0)
            elementary.extend([p**j] * n_exact)
    return invariant_factors_from_elementary(elementary)


def decompose_group(add: np.ndarray, identity: int) -> tuple[AbelianGroup, np.ndarray]:
    """An explicit isomorphism from an abelian group table onto Z_{p^e} factors.

    Returns the target group (prime-power factors, largest first per prime)
    and ``to_element[spin]`` = element index in that group.  Generators are
    found by a small backtracking search, which is fine at table scale.
    """
    r = add.shape[0]
    orders = element_orders(add, identity)
    elementary = []
    inv = invariant_factors_from_table(add, identity)
    for d in inv:
        for p, e in sympy.factorint(d).items():
            elementary.append(int(p) ** int(e))
    elementary.sort(key=lambda q: (factor_prime_power(q)[0], -q))

    def multiple(x: int, c: int) -> int:
        y = identity
        for _ in range(c):
            y = add[y, x]
        return y

    def search(i: int, span: dict[int, tuple[int, ...]], gens: list[int]):
        if i == len(elementary):
            return gens
        q = elementary[i]
        for g in range(r):
            if orders[g] != q:
                continue
            new_span = {}
            ok = True
            for c in range(q):
                cg = multiple(g, c)
                for s, coords in span.items():
                    t = add[s, cg]
                    if t in new_span:
                        ok = False
                        break
                    new_span[t] = coords + (c,)
                if not ok:
                    break
            if ok:
                found = search(i + 1, new_span, gens + [g])
                if found is not None:
                    return found
        return None

    gens = search(0, {identity: ()}, [])
    if gens is None:
        raise ValueError("could not decompose group table")
    target = AbelianGroup(tuple(elementary))
    to_element = np.zeros(r, dtype=np.int64)
    for coords in np.ndindex(*elementary):
        x = identity
        for g, c in zip(gens, coords):
            x = add[x, multiple(g, c)]
        to_element[x] = target.encode(coords)
    return target, to_element


# -- sparse 0/1 matrices and linear systems --------------------------------


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """m x n 0/1 matrix in CSR form (sorted column indices per row)."""

    m: int
    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], n: int) -> "SparseMatrix":
        rows = [sorted(set(int(c) for c in row)) for row in rows]
        for row in rows:
            if row and (row[0] < 0 or row[-1] >= n):
                raise ValueError("column index out of range")
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(row) for row in rows])
        indices = np.array([c for row in rows for c in row], dtype=np.int64)
        return cls(len(rows), n, indptr, indices)

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense)
        return cls.from_rows([np.flatnonzero(row) for row in dense], dense.shape[1])

    def row(self, a: int) -> np.ndarray:
        return self.indices[self.indptr[a]:self.indptr[a + 1]]

    def rows(self) -> list[np.ndarray]:
        return [self.row(a) for a in range(self.m)]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.m, self.n), dtype=np.int64)
        row_of = np.repeat(np.arange(self.m), np.diff(self.indptr))
        out[row_of, self.indices] = 1
        return out

    def column_degrees(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.n)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "SparseMatrix":
        """Restriction to the given rows and columns, columns renumbered."""
        local = -np.ones(self.n, dtype=np.int64)
        local[np.asarray(cols, dtype=np.int64)] = np.arange(len(cols))
        out = []
        for a in rows:
            c = local[self.row(a)]
            out.append(c[c >= 0])
        return SparseMatrix.from_rows(out, len(cols))


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: SparseMatrix
    rhs: tuple[int, ...]  # element indices in ``group``
    group: AbelianGroup

    def __post_init__(self):
        if len(self.rhs) != self.matrix.m:
            raise ValueError("rhs length must equal the number of rows")

    def is_solution(self, x: Sequence[int]) -> bool:
        x = np.asarray(x, dtype=np.int64)
        digits = self.group.digits
        mods = np.array(self.group.orders)
        for a in range(self.matrix.m):
            total = digits[x[self.matrix.row(a)]].sum(axis=0) % mods
            if self.group.encode(total) != self.rhs[a]:
                return False
        return True


def rank_mod_p(B: SparseMatrix, p: int) -> int:
    """Rank over the field with p elements."""
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    A = B.to_dense() % p
    return _gauss_mod_p(A, None, p)[0]


def _gauss_mod_p(A: np.ndarray, b: np.ndarray | None, p: int):
    """In-place reduced row echelon form mod prime p; returns (rank, pivots)."""
    m, n = A.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.flatnonzero(A[row:, col])
        if nz.size == 0:
            continue
        piv = row + nz[0]
        if piv != row:
            A[[row, piv]] = A[[piv, row]]
            if b is not None:
                b[[row, piv]] = b[[piv, row]]
        inv = pow(int(A[row, col]), -1, p)
        if inv != 1:
            A[row] = (A[row] * inv) % p
            if b is not None:
                b[row] = (b[row] * inv) % p
        others = np.flatnonzero(A[:, col])
        others = others[others != row]
        if others.size:
            f = A[others, col][:, None]
            A[others] = (A[others] - f * A[row]) % p
            if b is not None:
                b[others] = (b[others] - f[:, 0] * b[row]) % p
        pivots.append(col)
        row += 1
    return row, pivots


def _valuation(a: np.ndarray, p: int, e: int) -> np.ndarray:
    """p-adic valuation of residues mod p^e, with 0 mapped to e."""
    v = np.zeros(a.shape, dtype=np.int64)
    a = a.copy()
    zero = a == 0
    for _ in range(e):
        div = (a % p == 0) & ~zero
        v += div
        a = np.where(div, a // p, a)
    v[zero] = e
    return v


@dataclass(frozen=True)
class PrimePowerSolution:
    modulus: int
    prime: int
    solvable: bool
    count_exponent: int  # solution count is prime ** count_exponent (0 solutions if not solvable)
    sample: tuple[int, ...] | None
    free_columns: tuple[int, ...]
    pivot_valuations: tuple[int, ...]

    @property
    def count(self) -> int:
        return self.prime**self.count_exponent if self.solvable else 0


def solve_mod_prime_power(B: SparseMatrix, rhs: Sequence[int], q: int) -> PrimePowerSolution:
    """Solve Bx = rhs over Z_q for a prime power q.

    Elimination pivots on an entry of least p-adic valuation (full pivoting),
    which reduces the system to a diagonal form D y = c with x = V y.  For a
    prime modulus this is ordinary Gauss-Jordan elimination.
    """
    p, e = factor_prime_power(q)
    m, n = B.m, B.n
    b = np.asarray(rhs, dtype=np.int64) % q
    if b.shape != (m,):
        raise ValueError("rhs length must equal the number of rows")
    if e == 1:
        A = B.to_dense() % p
        rank, pivots = _gauss_mod_p(A, b, p)
        if np.any(b[rank:] != 0):
            return PrimePowerSolution(q, p, False, 0, None, (), ())
        x = np.zeros(n, dtype=np.int64)
        x[pivots] = b[:rank]
        free = tuple(c for c in range(n) if c not in set(pivots))
        return PrimePowerSolution(q, p, True, n - rank, tuple(x.tolist()), free, (0,) * rank)

    A = B.to_dense() % q
    perm = np.arange(n)
    V = np.eye(n, dtype=np.int64)
    vals = []
    t = 0
    while t < min(m, n):
        sub = A[t:, t:]
        v = _valuation(sub, p, e)
        flat = int(np.argmin(v))
        i, j = divmod(flat, sub.shape[1])
        if v[i, j] >= e:
            break
        i += t
        j += t
        if i != t:
            A[[t, i]] = A[[i, t]]
            b[[t, i]] = b[[i, t]]
        if j != t:
            A[:, [t, j]] = A[:, [j, t]]
            V[:, [t, j]] = V[:, [j, t]]
            perm[[t, j]] = perm[[j, t]]
        val = int(v[i - t, j - t])
        pv = p**val
        unit = int(A[t, t]) // pv
        inv = pow(unit, -1, q)
        A[t] = (A[t] * inv) % q
        b[t] = (b[t] * inv) % q
        # every entry of the pivot column and row is divisible by pv
        col = A[:, t].copy()
        col[t] = 0
        rows = np.flatnonzero(col)
        if rows.size:
            f = (col[rows] // pv)[:, None]
            A[rows] = (A[rows] - f * A[t]) % q
            b[rows] = (b[rows] - f[:, 0] * b[t]) % q
        rowv = A[t].copy()
        rowv[t] = 0
        cols = np.flatnonzero(rowv)
        if cols.size:
            g = rowv[cols] // pv
            V[:, cols] = (V[:, cols] - V[:, [t]] * g[None, :]) % q
            A[t, cols] = 0
        vals.append(val)
        t += 1
    s = t
    for i in range(s):
        if b[i] % (p ** vals[i]) != 0:
            return PrimePowerSolution(q, p, False, 0, None, (), tuple(vals))
    if np.any(b[s:] != 0):
        return PrimePowerSolution(q, p, False, 0, None, (), tuple(vals))
    y = np.zeros(n, dtype=np.int64)
    for i in range(s):
        y[i] = b[i] // (p ** vals[i])
    x = (V @ y) % q
    exponent = sum(vals) + e * (n - s)
    free = tuple(sorted(int(c) for c in perm[s:]))
    return PrimePowerSolution(q, p, True, exponent, tuple(x.tolist()), free, tuple(vals))


@dataclass(frozen=True)
class AbelianSolution:
    solvable: bool
    count: int
    count_factors: dict  # prime -> exponent, count = prod p**e
    sample: tuple[int, ...] | None  # element indices per column
    components: tuple[PrimePowerSolution, ...]

    @property
    def log_count(self) -> float:
        return sum(e * math.log(p) for p, e in self.count_factors.items()) if self.solvable else -math.inf


def solve_abelian(system: LinearSystem) -> AbelianSolution:
    """Solve each prime-power projection separately and recombine.

    Components are solved sequentially; their merge is order-independent.
    """
    G = system.group
    rhs = G.digits[np.asarray(system.rhs, dtype=np.int64)] if system.rhs else np.zeros((0, len(G.orders)), dtype=np.int64)
    results = []
    for fi, p, e in G.components:
        q = p**e
        proj = rhs[:, fi] % q if len(rhs) else np.zeros(0, dtype=np.int64)
        results.append(solve_mod_prime_power(system.matrix, proj, q))
    if not all(res.solvable for res in results):
        return AbelianSolution(False, 0, {}, None, tuple(results))
    factors: dict[int, int] = {}
    for res in results:
        factors[res.prime] = factors.get(res.prime, 0) + res.count_exponent
    count = math.prod(p**ex for p, ex in factors.items())
    n = system.matrix.n
    coords = np.zeros((n, len(G.orders)), dtype=np.int64)
    for fi, q in enumerate(G.orders):
        parts = [(res, p**e) for (gi, p, e), res in zip(G.components, results) if gi == fi]
        residues = [np.array(res.sample, dtype=object) for res, _ in parts]
        moduli = [m for _, m in parts]
        for v in range(n):
            coords[v, fi] = _crt([int(rs[v]) for rs in residues], moduli)
    sample = tuple(G.encode(coords[v]) for v in range(n))
    return AbelianSolution(True, count, factors, sample, tuple(results))


def _crt(residues: list[int], moduli: list[int]) -> int:
    if len(moduli) == 1:
        return residues[0] % moduli[0]
    x, _ = sympy.ntheory.modular.crt(moduli, residues)
    return int(x)


def brute_force_count(system: LinearSystem) -> int:
    """Count solutions by enumerating G^n; only for tiny systems."""
    G, n = system.group, system.matrix.n
    r = G.order
    xs = all_tuples(r, n)
    ok = np.ones(len(xs), dtype=bool)
    mods = np.array(G.orders)
    for a in range(system.matrix.m):
        cols = system.matrix.row(a)
        total = G.digits[xs[:, cols]].sum(axis=1) % mods
        target = np.array(G.decode(system.rhs[a]))
        ok &= np.all(total == target, axis=1)
    return int(ok.sum())


__all__ = [
    "AbelianGroup",
    "AbelianSolution",
    "LinearSystem",
    "PrimePowerSolution",
    "SparseMatrix",
    "brute_force_count",
    "decompose_group",
    "element_orders",
    "group_constraint",
    "invariant_factors_from_elementary",
    "invariant_factors_from_table",
    "rank_mod_p",
    "solve_abelian",
    "solve_mod_prime_power",
]

