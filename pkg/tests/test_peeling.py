import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uecsp.abelian import AbelianGroup, LinearSystem, SparseMatrix, group_constraint, solve_abelian
from uecsp.constraints import ConstraintFunction
from uecsp.instance import ConstraintDistribution, Instance, incidence, sample_instance, to_linear_system
from uecsp.peeling import (
    back_substitute, enumerate_all_solutions, enumerate_core_solutions, group_equivalence_for,
    peel_2core, peel_instance, solve,
)

from conftest import xor3

Z2 = AbelianGroup.cyclic(2)
XOR_PAIR = ConstraintDistribution.uniform([group_constraint(Z2, 0, 3), group_constraint(Z2, 1, 3)])
D3_OVER_3 = 0.917935


def core_by_sweeps(A):
    """Repeated full sweeps over a dense 0/1 matrix until no column has degree <= 1."""
    rows = np.ones(A.shape[0], dtype=bool)
    cols = np.ones(A.shape[1], dtype=bool)
    while True:
        deg = A[rows].sum(axis=0)
        weak = np.flatnonzero(cols & (deg <= 1))
        if weak.size == 0:
            return np.flatnonzero(rows), np.flatnonzero(cols)
        v = weak[0]
        cols[v] = False
        rows &= A[:, v] == 0


def solutions_by_loops(inst):
    return [x for x in itertools.product(range(inst.r), repeat=inst.n) if inst.is_satisfied_by(np.array(x))]


def test_peel_small_matrices():
    p = peel_2core(SparseMatrix.from_rows([[0, 1, 2]], 3))
    assert p.n_core == p.m_core == 0
    cyc = SparseMatrix.from_rows([[0, 1], [1, 2], [2, 0]], 3)
    p = peel_2core(cyc)
    assert p.n_core == 3 and p.m_core == 3


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 40), st.floats(0.3, 1.3), st.integers(0, 2**31), st.integers(0, 100))
def test_peel_matches_sweeps_for_every_order(n, dk, seed, pseed):
    inst = sample_instance(n, int(dk * n), XOR_PAIR, seed)
    B = incidence(inst)
    rows, cols = core_by_sweeps(B.to_dense())
    for order in ("fifo", "lifo", "random"):
        p = peel_2core(B, order, pseed)
        assert np.array_equal(p.core_rows, rows)
        assert np.array_equal(p.core_cols, cols)
        if p.n_core:
            assert B.submatrix(p.core_rows, p.core_cols).column_degrees().min() >= 2
        assert len(p.free_columns) == p.extension_exponent


def test_back_substitution_examples():
    empty = Instance(3, 3, 2, (xor3(),), [], np.zeros((0, 3)))
    p = peel_instance(empty)
    assert back_substitute(empty, p, [], [1, 0, 1]).tolist() == [1, 0, 1]
    one = Instance(3, 3, 2, (xor3(),), [0], [[0, 1, 2]])
    p = peel_instance(one)
    assert p.events[0] == (0, 0)
    assert back_substitute(one, p, [], [0, 0, 1]).tolist() == [1, 0, 1]


def test_back_substitution_accepts_exactly_core_solutions():
    inst = sample_instance(12, 14, ConstraintDistribution.atomic(xor3()), 2)
    p = peel_instance(inst)
    assert p.n_core
    accepted = []
    for bits in itertools.product(range(2), repeat=p.n_core):
        try:
            x = back_substitute(inst, p, list(bits))
        except ValueError:
            continue
        assert inst.is_satisfied_by(x)
        accepted.append(bits)
    core = enumerate_core_solutions(inst, p).solutions
    assert sorted(accepted) == sorted(tuple(s.tolist()) for s in core)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.floats(0.4, 1.2), st.integers(0, 2**31))
def test_extension_law_by_loops(r, dk, seed):
    G = AbelianGroup.cyclic(r)
    dist = ConstraintDistribution.uniform([group_constraint(G, b, 3) for b in range(r)])
    n = 8 if r == 2 else 6
    inst = sample_instance(n, max(1, int(dk * n)), dist, seed)
    p = peel_instance(inst)
    sols = solutions_by_loops(inst)
    counts = {}
    for x in sols:
        key = tuple(x[v] for v in p.core_cols)
        counts[key] = counts.get(key, 0) + 1
    for c in counts.values():
        assert c == r ** (inst.n - inst.m - p.n_core + p.m_core)
    core = enumerate_core_solutions(inst, p)
    assert core.complete
    assert sorted(tuple(s) for s in core.solutions) == sorted(counts)


def test_core_enumeration_examples():
    empty = Instance(4, 3, 2, (xor3(),), [], np.zeros((0, 3)))
    assert len(enumerate_core_solutions(empty, peel_instance(empty)).solutions) == 1
    x2 = group_constraint(Z2, 0, 2, "xor2")
    cyc = Instance(3, 2, 2, (x2,), [0, 0, 0], [[0, 1], [1, 2], [2, 0]])
    sols = enumerate_core_solutions(cyc, peel_instance(cyc)).solutions
    assert sorted(s.tolist() for s in sols) == [[0, 0, 0], [1, 1, 1]]


def test_solve_trivial_and_contradiction():
    empty = Instance(4, 3, 2, (xor3(),), [], np.zeros((0, 3)))
    rep = solve(empty)
    assert rep.status == "SAT" and rep.witness == (0, 0, 0, 0)
    x0, x1 = group_constraint(Z2, 0, 3, "x0"), group_constraint(Z2, 1, 3, "x1")
    bad = Instance(5, 3, 2, (x0, x1), [0, 1], [[0, 1, 2], [2, 0, 1]])
    assert solve(bad).status == "UNSAT"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_solve_matches_enumeration_near_threshold(seed):
    n = 12
    inst = sample_instance(n, int(round(1.1 * D3_OVER_3 * n)), XOR_PAIR, seed)
    sols = enumerate_all_solutions(inst)
    rep = solve(inst)
    assert rep.status == ("SAT" if len(sols) else "UNSAT")
    if rep.witness is not None:
        assert inst.is_satisfied_by(np.array(rep.witness))
    # cross-oracle: count from the linear system over the whole instance
    eq = group_equivalence_for(inst.used_functions())
    assert solve_abelian(to_linear_system(inst, eq)).count == len(sols)


@st.composite
def latin_instances(draw):
    """Instances over non-commutative ternary UE constraints, which force the search path."""
    r = draw(st.sampled_from([2, 3]))
    fns = []
    for i in range(2):
        pr, pc = draw(st.permutations(range(r))), draw(st.permutations(range(r)))
        table = [pr[(a + pc[b]) % r] for a in range(r) for b in range(r)]
        fns.append(ConstraintFunction.from_extension_table(3, r, table, f"L{i}"))
    n = 8 if r == 2 else 6
    dk = draw(st.floats(0.5, 1.4))
    return sample_instance(n, int(dk * n), ConstraintDistribution.uniform(fns), draw(st.integers(0, 2**31)))


@settings(max_examples=40, deadline=None)
@given(latin_instances())
def test_search_solver_matches_loops(inst):
    sols = solutions_by_loops(inst)
    rep = solve(inst)
    assert rep.status == ("SAT" if sols else "UNSAT")
    all_ = enumerate_all_solutions(inst)
    assert sorted(map(tuple, all_.tolist())) == sorted(sols)


def test_budget_exhaustion_reports_unknown():
    fns = [ConstraintFunction.from_extension_table(3, 3, [(a + 2 * b + 1) % 3 for a in range(3) for b in range(3)], "L")]
    inst = sample_instance(60, 70, ConstraintDistribution.uniform(fns), 1)
    rep = solve(inst, budget=3)
    assert rep.status == "UNKNOWN" and rep.nodes == 3


def test_enumeration_examples():
    assert len(enumerate_all_solutions(Instance(3, 3, 2, (xor3(),), [], np.zeros((0, 3))))) == 8
    assert len(enumerate_all_solutions(Instance(3, 3, 2, (xor3(),), [0], [[0, 1, 2]]))) == 4
    with pytest.raises(ValueError):
        enumerate_all_solutions(sample_instance(30, 1, XOR_PAIR, 0), cap=10**6)
