"""2-core peeling, UE back-substitution, and the complete solver.

Peeling repeatedly removes a column of degree <= 1 together with the row (if
any) that contains it.  Replaying the removals backwards, every removed row
has exactly one variable left to choose, which UE pins down; so any core
solution extends to a full solution in r ** (#free columns) ways.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .abelian import LinearSystem, SparseMatrix, solve_abelian
from .constraints import ConstraintFunction
from .instance import Instance, incidence, to_linear_system
from .structure import GroupEquivalence, reconstruct_group

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class PeelResult:
    n: int
    m: int
    core_rows: np.ndarray  # sorted row indices
    core_cols: np.ndarray  # sorted column indices
    events: tuple[tuple[int, int], ...]  # (column, forcing row or -1) in removal order

    @property
    def n_core(self) -> int:
        return len(self.core_cols)

    @property
    def m_core(self) -> int:
        return len(self.core_rows)

    @property
    def free_columns(self) -> list[int]:
        return [v for v, a in self.events if a < 0]

    @property
    def extension_exponent(self) -> int:
        """n - m - n_core + m_core: the number of free columns."""
        return self.n - self.m - self.n_core + self.m_core

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "n_core": self.n_core,
            "m_core": self.m_core,
            "core_rows": self.core_rows.tolist(),
            "core_cols": self.core_cols.tolist(),
            "events": [list(e) for e in self.events],
        }


def _column_rows(B: SparseMatrix) -> list[list[int]]:
    cols: list[list[int]] = [[] for _ in range(B.n)]
    for a in range(B.m):
        for v in B.row(a).tolist():
            cols[v].append(a)
    return cols


def peel_2core(B: SparseMatrix, order: str = "fifo", seed: int | None = None) -> PeelResult:
    """Strip columns of degree <= 1 (and their rows) until none remain.

    ``order`` picks the next column from the pending pool: ``fifo``,
    ``lifo`` or ``random`` (seeded).  The core does not depend on it.
    """
    rows = [B.row(a).tolist() for a in range(B.m)]
    col_rows = _column_rows(B)
    deg = np.array([len(c) for c in col_rows], dtype=np.int64)
    row_alive = np.ones(B.m, dtype=bool)
    col_alive = np.ones(B.n, dtype=bool)
    queued = deg <= 1
    pool: deque[int] | list[int] = deque(np.flatnonzero(queued).tolist())
    rng = random.Random(seed)
    events = []

    def pop() -> int:
        if order == "fifo":
            return pool.popleft()
        if order == "lifo":
            return pool.pop()
        i = rng.randrange(len(pool))
        pool[i], pool[-1] = pool[-1], pool[i]
        return pool.pop()

    if order not in ("fifo", "lifo", "random"):
        raise ValueError(f"unknown order {order!r}")
    if order == "random":
        pool = list(pool)

    while pool:
        v = pop()
        if not col_alive[v]:
            continue
        col_alive[v] = False
        if deg[v] == 0:
            events.append((v, -1))
            continue
        a = next(a for a in col_rows[v] if row_alive[a])
        events.append((v, a))
        row_alive[a] = False
        for u in rows[a]:
            deg[u] -= 1
            if col_alive[u] and not queued[u] and deg[u] <= 1:
                queued[u] = True
                pool.append(u)
    core_cols = np.flatnonzero(col_alive)
    core_rows = np.flatnonzero(row_alive)
    # every removed row must have been charged to the column that removed it
    charged = sum(1 for _, a in events if a >= 0)
    if charged != B.m - len(core_rows):
        raise AssertionError("peeling removed a row without a forcing column")
    return PeelResult(B.n, B.m, core_rows, core_cols, tuple(events))


def peel_instance(inst: Instance, order: str = "fifo", seed: int | None = None) -> PeelResult:
    return peel_2core(incidence(inst), order, seed)


def _force(psi: ConstraintFunction, spins: list[int], pos: int) -> int:
    others = tuple(spins[:pos] + spins[pos + 1:])
    return int(psi.completion(pos)[others])


def back_substitute(inst: Instance, peel: PeelResult, core_assignment, free_assignment=None) -> np.ndarray:
    """Extend a core solution to all n variables by replaying the peel backwards.

    ``core_assignment`` is aligned with ``peel.core_cols``; ``free_assignment``
    is a length-n array whose entries at free columns are used (zeros if None).
    """
    x = np.full(inst.n, -1, dtype=np.int64)
    core_assignment = np.asarray(core_assignment, dtype=np.int64)
    if core_assignment.shape != (peel.n_core,):
        raise ValueError("core assignment must align with the core columns")
    x[peel.core_cols] = core_assignment
    if peel.m_core:
        sub = inst.subinstance(peel.core_rows)
        probe = np.where(x < 0, 0, x)
        ok = sub.row_satisfied(probe)
        if not ok.all():
            a = int(peel.core_rows[np.flatnonzero(~ok)[0]])
            raise ValueError(f"core assignment violates core row {a}")
    free = np.zeros(inst.n, dtype=np.int64) if free_assignment is None else np.asarray(free_assignment)
    for v, a in reversed(peel.events):
        if a < 0:
            x[v] = int(free[v])
            continue
        vars_a = inst.variables[a].tolist()
        pos = vars_a.index(v)
        spins = [int(x[u]) for u in vars_a]
        if any(s < 0 for i, s in enumerate(spins) if i != pos):
            raise AssertionError("back-substitution reached a row with two open variables")
        x[v] = _force(inst.function_of(a), spins, pos)
    return x


# -- core search -----------------------------------------------------------


@dataclass
class CoreEnumeration:
    solutions: list[np.ndarray]  # each aligned with peel.core_cols
    complete: bool
    nodes: int


class _CoreSearch:
    """DFS over core columns (descending core degree) with FIFO UE propagation."""

    def __init__(self, inst: Instance, peel: PeelResult, budget: int):
        self.inst = inst
        self.r = inst.r
        local = -np.ones(inst.n, dtype=np.int64)
        local[peel.core_cols] = np.arange(peel.n_core)
        self.rows = [local[inst.variables[a]].tolist() for a in peel.core_rows]
        self.fns = [inst.function_of(a) for a in peel.core_rows]
        self.col_rows: list[list[int]] = [[] for _ in range(peel.n_core)]
        for i, vs in enumerate(self.rows):
            for v in vs:
                self.col_rows[v].append(i)
        degs = [len(c) for c in self.col_rows]
        self.order = sorted(range(peel.n_core), key=lambda v: (-degs[v], v))
        self.val = [-1] * peel.n_core
        self.open = [len(vs) for vs in self.rows]
        self.trail: list[int] = []
        self.budget = budget
        self.nodes = 0
        self.exhausted = False

    def _assign(self, v: int, s: int) -> bool:
        queue = deque([(v, s)])
        while queue:
            v, s = queue.popleft()
            if self.val[v] >= 0:
                if self.val[v] != s:
                    return False
                continue
            self.val[v] = s
            self.trail.append(v)
            # decrement every row first so that _undo stays exact on conflict
            for i in self.col_rows[v]:
                self.open[i] -= 1
            for i in self.col_rows[v]:
                vs = self.rows[i]
                if self.open[i] == 0:
                    if not self.fns[i].mask[tuple(self.val[u] for u in vs)]:
                        return False
                elif self.open[i] == 1:
                    spins = [self.val[u] for u in vs]
                    pos = next(p for p, t in enumerate(spins) if t < 0)
                    queue.append((vs[pos], _force(self.fns[i], spins, pos)))
        return True

    def _undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            v = self.trail.pop()
            self.val[v] = -1
            for i in self.col_rows[v]:
                self.open[i] += 1

    def run(self, limit: int | None = None) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        self._dfs(0, out, limit)
        return out

    def _dfs(self, depth: int, out: list, limit: int | None) -> bool:
        """Returns False once the search should stop."""
        while depth < len(self.order) and self.val[self.order[depth]] >= 0:
            depth += 1
        if depth == len(self.order):
            out.append(np.array(self.val, dtype=np.int64))
            return limit is None or len(out) < limit
        v = self.order[depth]
        for s in range(self.r):
            if self.nodes >= self.budget:
                self.exhausted = True
                return False
            self.nodes += 1
            mark = len(self.trail)
            if self._assign(v, s):
                if not self._dfs(depth + 1, out, limit):
                    self._undo(mark)
                    return False
            self._undo(mark)
        return True


def enumerate_core_solutions(
    inst: Instance, peel: PeelResult, budget: int = DEFAULT_BUDGET, limit: int | None = None
) -> CoreEnumeration:
    """All solutions of the core rows on the core columns (truncated if the
    node budget runs out or ``limit`` solutions have been found)."""
    search = _CoreSearch(inst, peel, budget)
    sols = search.run(limit)
    complete = not search.exhausted and (limit is None or len(sols) < limit)
    return CoreEnumeration(sols, complete, search.nodes)


# -- solver ----------------------------------------------------------------


@dataclass(frozen=True)
class SolveReport:
    status: str  # SAT, UNSAT or UNKNOWN
    witness: tuple[int, ...] | None
    n_core: int
    m_core: int
    nodes: int
    budget: int
    method: str

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": list(self.witness) if self.witness is not None else None,
            "n_core": self.n_core,
            "m_core": self.m_core,
            "nodes": self.nodes,
            "budget": self.budget,
            "method": self.method,
        }


_GROUP_CACHE: dict = {}


def group_equivalence_for(functions: Sequence[ConstraintFunction]) -> GroupEquivalence | None:
    """Cached reconstruct_group on a function library; None when it fails."""
    key = tuple((f.name, f.key) for f in functions)
    if key not in _GROUP_CACHE:
        res = reconstruct_group(list(functions))
        _GROUP_CACHE[key] = res if isinstance(res, GroupEquivalence) else None
    return _GROUP_CACHE[key]


def solve(inst: Instance, budget: int = DEFAULT_BUDGET, peel: PeelResult | None = None) -> SolveReport:
    if inst.m == 0:
        return SolveReport("SAT", (0,) * inst.n, 0, 0, 0, budget, "trivial")
    if peel is None:
        peel = peel_instance(inst)
    eq = None
    if inst.k >= 3:
        eq = group_equivalence_for(inst.used_functions())
    if eq is not None:
        core_inst = inst.subinstance(peel.core_rows)
        system = to_linear_system(core_inst, eq)
        B = system.matrix.submatrix(range(system.matrix.m), peel.core_cols)
        res = solve_abelian(LinearSystem(B, system.rhs, system.group))
        if not res.solvable:
            return SolveReport("UNSAT", None, peel.n_core, peel.m_core, 0, budget, "linear")
        spins = eq.element_to_spin[np.asarray(res.sample, dtype=np.int64)] if peel.n_core else np.zeros(0, dtype=np.int64)
        x = back_substitute(inst, peel, spins)
        method = "linear"
        nodes = 0
    else:
        enum = enumerate_core_solutions(inst, peel, budget, limit=1)
        if not enum.solutions:
            status = "UNSAT" if enum.complete else "UNKNOWN"
            return SolveReport(status, None, peel.n_core, peel.m_core, enum.nodes, budget, "search")
        x = back_substitute(inst, peel, enum.solutions[0])
        method = "search"
        nodes = enum.nodes
    if not inst.is_satisfied_by(x):
        raise AssertionError("solver produced an assignment that violates the instance")
    return SolveReport("SAT", tuple(int(s) for s in x), peel.n_core, peel.m_core, nodes, budget, method)


def enumerate_all_solutions(inst: Instance, cap: int = 10**6, chunk: int = 1 << 16) -> np.ndarray:
    """Every satisfying assignment, as rows sorted by canonical index."""
    total = inst.r**inst.n
    if total > cap:
        raise ValueError(f"r**n = {total} exceeds the cap {cap}")
    out = []
    weights = inst.r ** np.arange(inst.k - 1, -1, -1)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        xs = np.empty((len(idx), inst.n), dtype=np.int64)
        rem = idx.copy()
        for v in range(inst.n - 1, -1, -1):
            rem, xs[:, v] = np.divmod(rem, inst.r)
        ok = np.ones(len(idx), dtype=bool)
        for a in range(inst.m):
            tup = xs[:, inst.variables[a]] @ weights
            ok &= inst.function_of(a).mask.reshape(-1)[tup]
            if not ok.any():
                break
        out.append(xs[ok])
    return np.concatenate(out) if out else np.zeros((0, inst.n), dtype=np.int64)
