"""Acceptance suite: criteria 1-12 at their stated sizes and tolerances.

Each test prints one ``CRITERION n: PASS|FAIL ...`` line.  Run on its own with

    python3 -m pytest tests/test_acceptance.py -v -s

or ``python3 tests/test_acceptance.py``.  The Monte Carlo criteria take a few
minutes in total on one core.
"""

import itertools
import json
import time
from collections import Counter

import numpy as np
import pytest

from uecsp import thresholds
from uecsp.abelian import AbelianGroup, group_constraint
from uecsp.cli import main as cli_main
from uecsp.clusters import instance_vstar
from uecsp.constraints import (
    constant_solutions, is_commutative, is_uniquely_extendable, replay_witness,
)
from uecsp.experiments import (
    SweepConfig, cluster_census, core_size_experiment, estimate_crossover,
    monotonicity_violations, sweep_satisfiability, trial_seed,
)
from uecsp.instance import ConstraintDistribution, sample_instance
from uecsp.io import dumps
from uecsp.peeling import enumerate_all_solutions, enumerate_core_solutions
from uecsp.products import nongroup_family
from uecsp.quasigroups import associativity_violation, neutral_elements, quasigroup_f_prime
from uecsp.structure import (
    GroupEquivalence, f2_symmetry_violation, is_F2_symmetric, is_reducible, reconstruct_group,
    reducibility_violation,
)

from conftest import ACCEPTANCE_LINES, NONGROUP_CASES, SMALL_GROUPS

SWEEP_GRID = tuple(round(0.80 + 0.02 * i, 2) for i in range(11))
SWEEP_SEED = 2024
RELABELINGS = 20


def report(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print("\n" + line, flush=True)


def d3_over_3() -> float:
    return thresholds.d_k(3) / 3


# -- 1. threshold numerics ---------------------------------------------------


def scan_d_k(k: int, step: float = 1e-4) -> float:
    """First grid density where the satisfiability functional turns negative.

    Independent of the bisection code: the fixed point is found by vectorized
    iteration from x = 1 over the whole grid at once.
    """
    d = np.arange(2.0, float(k) + 1.0, step)
    x = np.ones_like(d)
    for _ in range(20_000):
        nxt = 1.0 - np.exp(-d * x ** (k - 1))
        if np.max(np.abs(nxt - x)) < 1e-13:
            break
        x = nxt
    hval = x - d * x ** (k - 1) + (1 - 1 / k) * d * x**k
    first = int(np.flatnonzero((hval < 0) & (x > 1e-6))[0])
    return float(d[first] - step / 2)


def test_criterion_1_threshold_numerics(capsys):
    worst_gap, worst_time = 0.0, 0.0
    for k in (3, 4, 5):
        start = time.perf_counter()
        assert cli_main(["thresholds", "--k", str(k), "--critical"]) == 0
        elapsed = time.perf_counter() - start
        out = json.loads(capsys.readouterr().out)
        gap = abs(out["d_k_over_k"] - scan_d_k(k) / k)
        worst_gap = max(worst_gap, gap)
        worst_time = max(worst_time, elapsed)
    ok = worst_gap <= 1e-4 and worst_time < 1.0
    report(1, ok, f"max |bisection - grid scan| = {worst_gap:.2e} (<= 1e-4), max runtime {worst_time:.3f}s (< 1s)")
    assert ok


# -- 2, 3, 12. satisfiability sweeps -----------------------------------------


def xor_pair():
    Z2 = AbelianGroup.cyclic(2)
    return ConstraintDistribution.uniform([group_constraint(Z2, 0, 3), group_constraint(Z2, 1, 3)])


@pytest.fixture(scope="module")
def xor_sweep():
    cfg = SweepConfig(3, 2, xor_pair(), 400, SWEEP_GRID, 200, SWEEP_SEED)
    return cfg, sweep_satisfiability(cfg, workers=1)


def _crossover_verdict(number, res, extra_ok=True, extra=""):
    target = d3_over_3()
    rows = res.rows
    try:
        x = estimate_crossover(rows)
    except ValueError:
        x = float("nan")
    mono = monotonicity_violations(rows)
    ok = (
        rows[0].sat_fraction >= 0.9 and rows[-1].sat_fraction <= 0.1
        and abs(x - target) <= 0.05 and not mono and extra_ok
    )
    report(
        number, ok,
        f"sat@0.80={rows[0].sat_fraction:.3f}, sat@1.00={rows[-1].sat_fraction:.3f}, "
        f"crossover={x:.4f} vs d3/3={target:.4f} (+-0.05), monotonicity violations={len(mono)}{extra}",
    )
    return ok


def test_criterion_2_crossover(xor_sweep):
    _, res = xor_sweep
    assert not constant_solutions(xor_pair().functions)
    ok = _crossover_verdict(2, res, res.wall_time <= 600, f", runtime {res.wall_time:.1f}s (<= 600s)")
    assert ok


def test_criterion_3_universality():
    psi = group_constraint(AbelianGroup.cyclic(3), 1, 3)
    assert constant_solutions([psi]) == set()
    cfg = SweepConfig(3, 3, ConstraintDistribution.atomic(psi), 400, SWEEP_GRID, 200, SWEEP_SEED)
    res = sweep_satisfiability(cfg, workers=1)
    assert _crossover_verdict(3, res)


# -- 4. 2-core law -------------------------------------------------------------


def test_criterion_4_core_law():
    out = core_size_experiment(3, 3.0, 100_000, 5, seed=4)
    x = thresholds.rho(3, 3.0)
    dc = abs(out["mean_core_cols"] - thresholds.pi_k(3, 3.0))
    dr = abs(out["mean_core_rows"] - (3.0 / 3) * x**3)
    ok = dc <= 0.02 and dr <= 0.02
    report(4, ok, f"|n*/n - pi_3(3)| = {dc:.4f}, |m*/n - (d/k)rho^3| = {dr:.4f} (both <= 0.02)")
    assert ok


# -- 5, 6. extension law and cluster geometry --------------------------------

CENSUS_PLAN = [  # (r, n, d/k, trials): 200 instances in total
    (2, 14, 0.5, 34), (2, 14, 0.9, 33), (2, 14, 1.1, 33),
    (3, 12, 0.5, 34), (3, 12, 0.9, 33), (3, 12, 1.1, 33),
]


@pytest.fixture(scope="module")
def census():
    out = []
    for i, (r, n, dk, trials) in enumerate(CENSUS_PLAN):
        G = AbelianGroup.cyclic(r)
        dist = ConstraintDistribution.uniform([group_constraint(G, b, 3) for b in range(r)])
        for t in range(trials):
            inst = sample_instance(n, int(round(dk * n)), dist, trial_seed(56, i, t))
            out.append((inst, enumerate_all_solutions(inst)))
    return out


def test_criterion_5_extension_law(census):
    bad = 0
    checked = 0
    for inst, sols in census:
        peel, _, _ = instance_vstar(inst)
        expected = inst.r ** (inst.n - inst.m - peel.n_core + peel.m_core)
        core = enumerate_core_solutions(inst, peel)
        assert core.complete
        counts = Counter(map(tuple, sols[:, peel.core_cols].tolist()))
        for x in core.solutions:
            checked += 1
            bad += counts.get(tuple(x.tolist()), 0) != expected
        bad += sum(counts.values()) != len(core.solutions) * expected
    ok = bad == 0 and len(census) == 200
    report(5, ok, f"{len(census)} instances, {checked} core solutions, {bad} count mismatches (0 allowed)")
    assert ok


def test_criterion_6_cluster_geometry(census):
    unequal = mismatched = 0
    for inst, sols in census:
        if not len(sols):
            continue
        peel, cycles, vstar = instance_vstar(inst)
        keys = Counter(map(tuple, sols[:, vstar].tolist()))
        unequal += len(set(keys.values())) > 1
        # independent route: distinct core solutions with cycle columns forgotten
        core = enumerate_core_solutions(inst, peel).solutions
        pos = np.searchsorted(peel.core_cols, vstar)
        core_classes = {tuple(np.asarray(x)[pos].tolist()) for x in core}
        mismatched += core_classes != set(keys)
    ok = unequal == 0 and mismatched == 0
    report(6, ok, f"{unequal} trials with unequal cluster sizes, {mismatched} trials where V*-classes "
                  f"differ from core classes modulo cycle columns (0 allowed)")
    assert ok


# -- 7. frozen regime ----------------------------------------------------------


def test_criterion_7_frozen_regime():
    psi = group_constraint(AbelianGroup.cyclic(2), 0, 3)
    assert constant_solutions([psi]) == {0}
    dist = ConstraintDistribution.atomic(psi)
    failing = []
    sizes = []
    for seed in range(50):
        inst = sample_instance(12, int(round(1.2 * 12)), dist, seed)
        sols = enumerate_all_solutions(inst)
        _, _, vstar = instance_vstar(inst)
        sizes.append(len(vstar))
        if len(vstar) and np.any(sols[:, vstar] != 0):
            failing.append(seed)
    ok = not failing
    report(7, ok, f"{50 - len(failing)}/50 seeds frozen to 0 on V*; non-frozen seeds {failing}; "
                  f"mean |V*| = {np.mean(sizes):.1f}")
    assert ok


# -- 8-11. group reconstruction and the non-group family -----------------------


def _corpus():
    rng = np.random.default_rng(8)
    groups = []  # (G, k, relabeled family)
    for _, orders in SMALL_GROUPS:
        G = AbelianGroup(orders)
        for k in (3, 4):
            fam = [group_constraint(G, b, k) for b in range(G.order)]
            for _ in range(RELABELINGS):
                perm = rng.permutation(G.order)
                groups.append((G, k, [p.relabeled(perm) for p in fam]))
    nongroups = [nongroup_family(*case) for case in NONGROUP_CASES]
    return groups, nongroups


@pytest.fixture(scope="module")
def corpus():
    return _corpus()


def _verify_through_coordinates(g: GroupEquivalence, psi) -> bool:
    """Evaluate sum == target on every tuple in the recovered coordinates."""
    C = g.coordinates
    k, r = psi.k, psi.r
    tuples = np.array(list(itertools.product(range(r), repeat=k)))
    digits = C.digits[g.spin_to_element[tuples]]  # (r^k, k, factors)
    total = digits.sum(axis=1) % np.array(C.orders)
    target = C.digits[g.target_element(psi.name)]
    return bool(np.array_equal(np.all(total == target, axis=1), psi.mask.reshape(-1)))


def test_criterion_8_group_reconstruction(corpus):
    groups, _ = corpus
    failures = []
    runs = 0
    for G, k, fam in groups:
        for members in [fam] + [[p] for p in fam]:
            runs += 1
            g = reconstruct_group(members)
            if not isinstance(g, GroupEquivalence):
                failures.append((str(G), k, "reconstruction failed"))
                continue
            if not all(_verify_through_coordinates(g, p) for p in members):
                failures.append((str(G), k, "verification"))
            if g.group.invariant_factors != G.invariant_factors():
                failures.append((str(G), k, "invariant factors"))
    ok = not failures
    report(8, ok, f"{runs} reconstructions over {len(SMALL_GROUPS)} groups x every b x k in {{3,4}} x "
                  f"{RELABELINGS} relabelings; {len(failures)} failures")
    assert ok


def test_criterion_9_nongroup_detection(corpus):
    _, nongroups = corpus
    problems = []
    for case, psi in zip(NONGROUP_CASES, nongroups):
        if not (is_uniquely_extendable(psi) and is_commutative(psi)):
            problems.append((case, "not UE/commutative"))
        if isinstance(reconstruct_group([psi]), GroupEquivalence):
            problems.append((case, "reconstruction succeeded"))
        w = f2_symmetry_violation([psi])
        if w is None or not replay_witness(w, [psi]):
            problems.append((case, "F2 witness missing or not replayable"))
        if psi.k == 4:
            w = reducibility_violation([psi])
            if w is None or not replay_witness(w, [psi]):
                problems.append((case, "k=4 member reducible"))
    ok = not problems
    report(9, ok, f"{len(nongroups)} members checked; problems: {problems or 'none'}")
    assert ok


def test_criterion_10_equivalences(corpus):
    groups, nongroups = corpus
    members = [p for _, _, fam in groups for p in fam] + nongroups
    broken = []
    n3 = n4 = 0
    for psi in members:
        success = isinstance(reconstruct_group([psi]), GroupEquivalence)
        if psi.k == 3:
            n3 += 1
            if is_F2_symmetric([psi]) != success:
                broken.append((psi.name, "F2 vs reconstruction"))
            if is_commutative(psi) and not is_reducible([psi]):
                broken.append((psi.name, "commutative k=3 but irreducible"))
        elif psi.k == 4:
            n4 += 1
            if is_reducible([psi]) != success:
                broken.append((psi.name, "reducible vs reconstruction"))
    # whole families as sets
    for _, k, fam in groups[::RELABELINGS]:
        success = isinstance(reconstruct_group(fam), GroupEquivalence)
        check = is_F2_symmetric(fam) if k == 3 else is_reducible(fam)
        if check != success:
            broken.append((fam[0].name, "family"))
    ok = not broken
    report(10, ok, f"{n3} k=3 and {n4} k=4 constraints plus families; {len(broken)} broken equivalences")
    assert ok


def test_criterion_11_quasigroup_route(corpus):
    groups, nongroups = corpus
    problems = []
    members = [(p, True) for _, _, fam in groups[::RELABELINGS // 4] for p in fam]
    members += [(p, False) for p in nongroups]
    for psi, is_group in members:
        for alpha in sorted({0, psi.r - 1}):
            fp = quasigroup_f_prime(psi, alpha)
            beta = int(psi.completion(psi.k - 1)[(alpha,) * (psi.k - 1)])
            if alpha not in neutral_elements(fp):
                problems.append((psi.name, alpha, "alpha not neutral"))
            if not np.array_equal(fp == beta, psi.mask):
                problems.append((psi.name, alpha, "f' = beta does not characterize psi"))
            assoc = associativity_violation(fp) is None
            if assoc != is_group:
                problems.append((psi.name, alpha, f"associativity {assoc}"))
    ok = not problems
    report(11, ok, f"{len(members)} constraints x 2 base spins; problems: {problems or 'none'}")
    assert ok


# -- 12. determinism -----------------------------------------------------------


def test_criterion_12_determinism(xor_sweep, tmp_path):
    cfg, res = xor_sweep
    again = sweep_satisfiability(cfg, workers=2)
    same_sweep = again.to_csv().encode() == res.to_csv().encode()
    dist = xor_pair()
    c1 = dumps(cluster_census(3, 2, dist, 12, 0.9, 8, 3, workers=1)).encode()
    c2 = dumps(cluster_census(3, 2, dist, 12, 0.9, 8, 3, workers=2)).encode()
    k1 = dumps(core_size_experiment(3, 3.0, 20_000, 4, 5, workers=1)).encode()
    k2 = dumps(core_size_experiment(3, 3.0, 20_000, 4, 5, workers=2)).encode()
    ok = same_sweep and c1 == c2 and k1 == k2
    report(12, ok, f"sweep CSV identical: {same_sweep}; census JSON identical: {c1 == c2}; "
                   f"core-size JSON identical: {k1 == k2} (1 vs 2 workers)")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
