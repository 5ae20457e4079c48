"""Flippable cycles, frozen core columns V*, and the cluster partition.

Inside the 2-core, a column meeting exactly two core rows is an edge between
those rows.  A flippable cycle is a closed trail of such edges (distinct
columns, length >= 3); V* is the set of core columns on no such trail, and
two solutions lie in the same cluster when they agree on V*.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree

from .abelian import SparseMatrix
from .constraints import constant_solutions
from .instance import Instance, incidence
from .peeling import PeelResult, peel_2core

PAIRWISE_LIMIT = 6000


@dataclass(frozen=True)
class FlippableCycle:
    columns: tuple[int, ...]  # v_0 .. v_{l-1}
    rows: tuple[int, ...]  # a_0 .. a_{l-1}; row a_i holds v_i and v_{i+1}

    def __len__(self):
        return len(self.columns)

    def to_json(self) -> dict:
        return {"columns": list(self.columns), "rows": list(self.rows)}


def _core_column_rows(B: SparseMatrix, peel: PeelResult) -> dict[int, list[int]]:
    out: dict[int, list[int]] = defaultdict(list)
    for a in peel.core_rows.tolist():
        for v in B.row(a).tolist():
            out[v].append(a)
    return out


def is_flippable_cycle(cycle: FlippableCycle, peel: PeelResult, B: SparseMatrix) -> bool:
    """Check a cycle against the definition, straight from the matrix."""
    cols, rows = list(cycle.columns), list(cycle.rows)
    ell = len(cols)
    if ell < 3 or len(rows) != ell or len(set(cols)) != ell:
        return False
    core_rows = set(peel.core_rows.tolist())
    core_cols = set(peel.core_cols.tolist())
    if not set(cols) <= core_cols or not set(rows) <= core_rows:
        return False
    col_rows = _core_column_rows(B, peel)
    for i in range(ell):
        a = rows[i]
        row_a = set(B.row(a).tolist())
        if cols[i] not in row_a or cols[(i + 1) % ell] not in row_a:
            return False
        if set(col_rows[cols[i]]) != {rows[i - 1], rows[i]}:
            return False
    return True


def _trail_to_cycle(nodes: list[int], edges: list[int]) -> FlippableCycle:
    # edges[i] joins nodes[i] and nodes[i+1 mod l]; v_i must join a_{i-1} and a_i
    ell = len(edges)
    rows = tuple(nodes)
    cols = tuple(edges[(i - 1) % ell] for i in range(ell))
    return FlippableCycle(cols, rows)


def find_flippable_cycles(peel: PeelResult, B: SparseMatrix) -> list[FlippableCycle]:
    """Closed trails of degree-2 core columns covering every column that lies
    on one; each column on some flippable cycle appears in at least one."""
    col_rows = _core_column_rows(B, peel)
    pair_cols: dict[tuple[int, int], list[int]] = defaultdict(list)
    for v in peel.core_cols.tolist():
        rs = col_rows[v]
        if len(rs) == 2:
            u, w = sorted(rs)
            pair_cols[(u, w)].append(v)
    if not pair_cols:
        return []
    S = nx.Graph()
    S.add_edges_from(pair_cols)
    bridges = {tuple(sorted(e)) for e in nx.bridges(S)}

    def on_cycle_avoiding(x: int, pair: tuple[int, int]):
        """A closed trail at x using no edge of ``pair``, or None."""
        for y in sorted(S[x]):
            f = tuple(sorted((x, y)))
            if f == pair:
                continue
            cs = pair_cols[f]
            if len(cs) >= 2:
                return [x, y], [cs[0], cs[1]]
            if f not in bridges:
                S.remove_edge(*f)
                path = nx.shortest_path(S, y, x)
                S.add_edge(*f)
                edges = [cs[0]] + [pair_cols[tuple(sorted(p))][0] for p in zip(path, path[1:])]
                return [x] + path[:-1], edges
        return None

    covered: set[int] = set()
    cycles: list[FlippableCycle] = []
    for pair in sorted(pair_cols):
        u, w = pair
        cs = pair_cols[pair]
        if all(c in covered for c in cs):
            continue
        found: list[tuple[list[int], list[int]]] = []
        if pair not in bridges:
            # a simple cycle through u-w of length >= 3, one per parallel column
            S.remove_edge(u, w)
            path = nx.shortest_path(S, w, u)
            S.add_edge(u, w)
            back = [pair_cols[tuple(sorted(p))][0] for p in zip(path, path[1:])]
            for c in cs:
                found.append(([u] + path[:-1], [c] + back))
        elif len(cs) >= 4:
            for i in range(0, len(cs) - 1, 2):
                quad = [cs[i], cs[i + 1], cs[(i + 2) % len(cs)], cs[(i + 3) % len(cs)]]
                if len(set(quad)) == 4:
                    found.append(([u, w, u, w], quad))
        elif len(cs) >= 2:
            side = on_cycle_avoiding(u, pair)
            start, other = u, w
            if side is None:
                side = on_cycle_avoiding(w, pair)
                start, other = w, u
            if side is not None:
                loop_nodes, loop_edges = side
                for i in range(len(cs)):
                    c1, c2 = cs[i], cs[(i + 1) % len(cs)]
                    found.append(([start, other] + loop_nodes, [c1, c2] + loop_edges))
        for nodes, edges in found:
            cycles.append(_trail_to_cycle(nodes, edges))
            covered.update(edges)
    return cycles


def frozen_columns(peel: PeelResult, cycles: Sequence[FlippableCycle]) -> np.ndarray:
    """V*: core columns on no flippable cycle, sorted."""
    on_cycle = {v for c in cycles for v in c.columns}
    return np.array([v for v in peel.core_cols.tolist() if v not in on_cycle], dtype=np.int64)


def instance_vstar(inst: Instance) -> tuple[PeelResult, list[FlippableCycle], np.ndarray]:
    B = incidence(inst)
    peel = peel_2core(B)
    cycles = find_flippable_cycles(peel, B)
    return peel, cycles, frozen_columns(peel, cycles)


# -- cluster partition -----------------------------------------------------


@dataclass
class ClusterReport:
    n_clusters: int
    sizes: list[int]
    vstar: list[int]
    representatives: list[list[int]]
    labels: np.ndarray  # cluster index per solution
    min_separation: int | None  # min Hamming distance across clusters
    max_step: int | None  # largest within-cluster connectivity step
    notes: dict = field(default_factory=dict)

    @property
    def equal_sizes(self) -> bool:
        return len(set(self.sizes)) <= 1

    def to_json(self) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "sizes": self.sizes,
            "vstar": self.vstar,
            "representatives": self.representatives,
            "min_separation": self.min_separation,
            "max_step": self.max_step,
            "notes": self.notes,
        }


def _hamming(X: np.ndarray, Y: np.ndarray, r: int) -> np.ndarray:
    n = X.shape[1]
    ox = np.zeros((len(X), n * r), dtype=np.float32)
    oy = np.zeros((len(Y), n * r), dtype=np.float32)
    cols = np.arange(n) * r
    ox[np.arange(len(X))[:, None], cols + X] = 1
    oy[np.arange(len(Y))[:, None], cols + Y] = 1
    return (n - ox @ oy.T).round().astype(np.int64)


def _connected_at_one(sols: np.ndarray, r: int) -> bool:
    """Whether single-spin moves connect all of ``sols``."""
    m, n = sols.shape
    if m <= 1:
        return True
    w = r ** np.arange(n - 1, -1, -1, dtype=np.int64)
    idx = sols @ w
    order = np.argsort(idx)
    sidx = idx[order]
    src, dst = [], []
    for v in range(n):
        for delta in range(1, r):
            moved = sols.copy()
            moved[:, v] = (moved[:, v] + delta) % r
            j = np.searchsorted(sidx, moved @ w)
            j = np.minimum(j, m - 1)
            hit = sidx[j] == moved @ w
            src.append(np.flatnonzero(hit))
            dst.append(order[j[hit]])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    g = csr_matrix((np.ones(len(src)), (src, dst)), shape=(m, m))
    ncomp, _ = connected_components(g, directed=False)
    return ncomp == 1


def connectivity_step(sols: np.ndarray, r: int) -> int | None:
    """Least alpha such that alpha-bounded Hamming moves connect the set."""
    if len(sols) <= 1:
        return 0
    if _connected_at_one(sols, r):
        return 1
    if len(sols) > PAIRWISE_LIMIT:
        return None
    D = _hamming(sols, sols, r).astype(np.float64)
    # distinct solutions are at distance >= 1, so every pair is an MST edge candidate
    mst = minimum_spanning_tree(csr_matrix(np.triu(D, 1)))
    return int(mst.data.max()) if mst.nnz else 0


def cluster_partition(solutions, vstar: Sequence[int], r: int) -> ClusterReport:
    sols = np.asarray(solutions, dtype=np.int64)
    vstar = [int(v) for v in vstar]
    if sols.ndim != 2:
        raise ValueError("solutions must be a 2-d array")
    if len(sols) == 0:
        return ClusterReport(0, [], vstar, [], np.zeros(0, dtype=np.int64), None, None)
    keys = sols[:, vstar] if vstar else np.zeros((len(sols), 0), dtype=np.int64)
    _, first, labels = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    labels = labels.reshape(-1)
    # number clusters by first appearance in the (sorted) solution list
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(len(order))
    labels = relabel[labels]
    N = len(order)
    sizes = np.bincount(labels, minlength=N).tolist()
    reps = [sols[np.flatnonzero(labels == c)[0]].tolist() for c in range(N)]
    min_sep = None
    if N > 1 and len(sols) <= PAIRWISE_LIMIT:
        D = _hamming(sols, sols, r)
        cross = labels[:, None] != labels[None, :]
        min_sep = int(D[cross].min())
    steps = [connectivity_step(sols[labels == c], r) for c in range(N)]
    max_step = None if any(s is None for s in steps) else max(steps)
    return ClusterReport(N, sizes, vstar, reps, labels, min_sep, max_step)


def constant_cluster_check(inst: Instance, solutions, vstar: Sequence[int] | None = None) -> bool:
    """Every solution agrees on V* with some constant assignment sigma^n, sigma in Q."""
    Q = sorted(constant_solutions(inst.used_functions() or list(inst.functions)))
    if vstar is None:
        _, _, vstar = instance_vstar(inst)
    vstar = np.asarray(vstar, dtype=np.int64)
    sols = np.asarray(solutions, dtype=np.int64).reshape(-1, inst.n)
    if len(vstar) == 0:
        return True
    if not Q:
        return len(sols) == 0
    restricted = sols[:, vstar]
    ok = np.zeros(len(sols), dtype=bool)
    for s in Q:
        ok |= np.all(restricted == s, axis=1)
    return bool(ok.all())


def core_solution_classes(core_solutions: Sequence[np.ndarray], peel: PeelResult, vstar) -> int:
    """Distinct core solutions after forgetting the flippable-cycle columns."""
    if not len(core_solutions):
        return 0
    pos = np.searchsorted(peel.core_cols, np.asarray(vstar, dtype=np.int64))
    stack = np.asarray(core_solutions)[:, pos]
    return len(np.unique(stack, axis=0)) if stack.shape[1] else 1


# -- cluster exponents -------------------------------------------------------


def cluster_exponent_experiment(k: int, r: int, d: float, n: int, trials: int, seed: int,
                                dist=None, exact_limit: int = 600) -> list[dict]:
    """Per-trial cluster count/size exponents (nats per variable) next to the
    limiting formulas.

    The measured count exponent is (n_core - m_core)/n * log r; when the core
    has at most ``exact_limit`` columns the exact log of the number of core
    solutions is reported too.  ``dist`` defaults to the uniform mixture of
    all sum constraints over Z_r.
    """
    from .abelian import AbelianGroup, LinearSystem, group_constraint, solve_abelian
    from .experiments import trial_seed
    from .instance import ConstraintDistribution, sample_instance, to_linear_system
    from .peeling import group_equivalence_for
    from .thresholds import profile

    if dist is None:
        G = AbelianGroup.cyclic(r)
        dist = ConstraintDistribution.uniform([group_constraint(G, b, k) for b in range(r)])
    prof = profile(k, r, d)
    m = int(round(d / k * n))
    log_r = np.log(r)
    out = []
    for t in range(trials):
        inst = sample_instance(n, m, dist, trial_seed(seed, 0, t))
        B = incidence(inst)
        peel = peel_2core(B)
        row = {
            "trial": t,
            "n": n,
            "m": m,
            "n_core": peel.n_core,
            "m_core": peel.m_core,
            "count_exponent": (peel.n_core - peel.m_core) / n * log_r,
            "size_exponent": peel.extension_exponent / n * log_r,
            "formula_count_exponent": prof.cluster_count_exponent,
            "formula_size_exponent": prof.cluster_size_exponent,
            "exact_core_log_count": None,
        }
        eq = group_equivalence_for(inst.used_functions()) if inst.m else None
        if eq is not None and 0 < peel.n_core <= exact_limit:
            sys_ = to_linear_system(inst.subinstance(peel.core_rows), eq)
            Bc = sys_.matrix.submatrix(range(sys_.matrix.m), peel.core_cols)
            sol = solve_abelian(LinearSystem(Bc, sys_.rhs, sys_.group))
            row["exact_core_log_count"] = sol.log_count / n if sol.solvable else None
        out.append(row)
    return out
