"""Random UE-CSP instances: m constraints on n variables.

Each constraint draws its function from a weighted library and its
variables as a uniformly random ordered tuple of k distinct indices.
Constraint j is sampled from its own counter-based stream, so any single
constraint can be replayed from (seed, j) alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .abelian import LinearSystem, SparseMatrix
from .constraints import ConstraintFunction, common_shape, uniqueness_violation


@dataclass(frozen=True, eq=False)
class ConstraintDistribution:
    functions: tuple[ConstraintFunction, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        fns = tuple(self.functions)
        ws = tuple(Fraction(w) for w in self.weights)
        if len(fns) != len(ws):
            raise ValueError("one weight per function")
        common_shape(fns)
        names = [f.name for f in fns]
        if len(set(names)) != len(names):
            raise ValueError("function names must be distinct")
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be strictly positive")
        if sum(ws) != 1:
            raise ValueError(f"weights sum to {sum(ws)}, not 1")
        for f in fns:
            w = uniqueness_violation(f)
            if w is not None:
                raise ValueError(f"{f.name} is not uniquely extendable: {w.data}")
        object.__setattr__(self, "functions", fns)
        object.__setattr__(self, "weights", ws)

    @classmethod
    def atomic(cls, psi: ConstraintFunction) -> "ConstraintDistribution":
        return cls((psi,), (Fraction(1),))

    @classmethod
    def uniform(cls, psis: Sequence[ConstraintFunction]) -> "ConstraintDistribution":
        psis = tuple(psis)
        return cls(psis, tuple(Fraction(1, len(psis)) for _ in psis))

    @property
    def k(self) -> int:
        return self.functions[0].k

    @property
    def r(self) -> int:
        return self.functions[0].r

    def _thresholds(self) -> tuple[int, np.ndarray]:
        L = math.lcm(*(w.denominator for w in self.weights))
        cum = np.cumsum([int(w * L) for w in self.weights])
        return L, cum


@dataclass(frozen=True, eq=False)
class Instance:
    n: int
    k: int
    r: int
    functions: tuple[ConstraintFunction, ...]
    fn_ids: np.ndarray  # (m,) index into functions
    variables: np.ndarray  # (m, k) distinct variable indices per row
    seed: int | None = None

    def __post_init__(self):
        fn_ids = np.asarray(self.fn_ids, dtype=np.int64).reshape(-1)
        variables = np.asarray(self.variables, dtype=np.int64).reshape(-1, self.k)
        if len(fn_ids) != len(variables):
            raise ValueError("fn_ids and variables disagree on m")
        if len(fn_ids) and (fn_ids.min() < 0 or fn_ids.max() >= len(self.functions)):
            raise ValueError("function reference out of range")
        if len(variables):
            if variables.min() < 0 or variables.max() >= self.n:
                raise ValueError("variable index out of range")
            srt = np.sort(variables, axis=1)
            if np.any(srt[:, 1:] == srt[:, :-1]):
                raise ValueError("constraint variables must be distinct")
        for f in self.functions:
            if (f.k, f.r) != (self.k, self.r):
                raise ValueError(f"{f.name} does not match (k, r) = ({self.k}, {self.r})")
        fn_ids.flags.writeable = False
        variables.flags.writeable = False
        object.__setattr__(self, "fn_ids", fn_ids)
        object.__setattr__(self, "variables", variables)

    @property
    def m(self) -> int:
        return len(self.fn_ids)

    def function_of(self, a: int) -> ConstraintFunction:
        return self.functions[int(self.fn_ids[a])]

    def used_functions(self) -> list[ConstraintFunction]:
        return [self.functions[i] for i in sorted(set(self.fn_ids.tolist()))]

    def row_satisfied(self, x: Sequence[int]) -> np.ndarray:
        """Per-constraint satisfaction of the assignment x."""
        x = np.asarray(x, dtype=np.int64)
        out = np.zeros(self.m, dtype=bool)
        vals = x[self.variables] if self.m else np.zeros((0, self.k), dtype=np.int64)
        weights = self.r ** np.arange(self.k - 1, -1, -1)
        idx = vals @ weights
        for i, f in enumerate(self.functions):
            rows = self.fn_ids == i
            out[rows] = f.mask.reshape(-1)[idx[rows]]
        return out

    def is_satisfied_by(self, x: Sequence[int]) -> bool:
        x = np.asarray(x)
        if x.shape != (self.n,) or (self.n and (x.min() < 0 or x.max() >= self.r)):
            raise ValueError("assignment has the wrong length or spins out of range")
        return bool(self.row_satisfied(x).all())

    def subinstance(self, rows: Sequence[int]) -> "Instance":
        rows = np.asarray(rows, dtype=np.int64)
        return Instance(self.n, self.k, self.r, self.functions, self.fn_ids[rows], self.variables[rows], self.seed)


def _stream(key: np.ndarray, j: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key, counter=[0, 0, j, 0]))


def _master_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def _draw_constraint(rng: np.random.Generator, n: int, k: int, L: int, cum: np.ndarray):
    u = int(rng.integers(0, L))
    fn = int(np.searchsorted(cum, u, side="right"))
    while True:
        vs = rng.integers(0, n, size=k)
        if len(set(vs.tolist())) == k:
            return fn, vs


def sample_constraint(n: int, dist: ConstraintDistribution, seed: int, j: int):
    """(function index, variables) of constraint j, replayed from its own stream."""
    L, cum = dist._thresholds()
    return _draw_constraint(_stream(_master_key(seed), j), n, dist.k, L, cum)


def sample_instance(n: int, m: int, dist: ConstraintDistribution, seed: int) -> Instance:
    k = dist.k
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    if m < 0:
        raise ValueError("m must be nonnegative")
    key = _master_key(seed)
    L, cum = dist._thresholds()
    fn_ids = np.zeros(m, dtype=np.int64)
    variables = np.zeros((m, k), dtype=np.int64)
    for j in range(m):
        fn_ids[j], variables[j] = _draw_constraint(_stream(key, j), n, k, L, cum)
    return Instance(n, k, dist.r, dist.functions, fn_ids, variables, seed)


def incidence(inst: Instance) -> SparseMatrix:
    return SparseMatrix.from_rows(inst.variables.tolist(), inst.n)


def to_linear_system(inst: Instance, eq) -> LinearSystem:
    """Bx = b over the coordinates of a verified group equivalence.

    A spin assignment s solves the instance iff ``eq.spin_to_element[s]``
    solves the system.
    """
    if not eq.verified:
        raise ValueError("group equivalence is not verified")
    cache = {}
    for i in sorted(set(inst.fn_ids.tolist())):
        name = inst.functions[i].name
        if name not in eq.targets:
            raise KeyError(f"function {name!r} is not covered by the group equivalence")
        cache[i] = eq.target_element(name)
    rhs = tuple(cache[int(i)] for i in inst.fn_ids)
    return LinearSystem(incidence(inst), rhs, eq.coordinates)


def instance_to_text(inst: Instance) -> str:
    lines = [f"p uecsp {inst.n} {inst.m} {inst.k} {inst.r}"]
    for fid, vs in zip(inst.fn_ids, inst.variables):
        lines.append(" ".join([inst.functions[fid].name] + [str(int(v)) for v in vs]))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str, functions: Sequence[ConstraintFunction]) -> Instance:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("c ")]
    head = lines[0]
    if head[:2] != ["p", "uecsp"]:
        raise ValueError("missing 'p uecsp' header")
    n, m, k, r = (int(v) for v in head[2:6])
    by_name = {f.name: i for i, f in enumerate(functions)}
    body = lines[1:]
    if len(body) != m:
        raise ValueError(f"header says {m} constraints, found {len(body)}")
    fn_ids = [by_name[ln[0]] for ln in body]
    variables = [[int(v) for v in ln[1:]] for ln in body]
    return Instance(n, k, r, tuple(functions), np.array(fn_ids, dtype=np.int64),
                    np.array(variables, dtype=np.int64).reshape(-1, k))


__all__ = [
    "ConstraintDistribution",
    "Instance",
    "incidence",
    "instance_from_text",
    "instance_to_text",
    "sample_constraint",
    "sample_instance",
    "to_linear_system",
]
