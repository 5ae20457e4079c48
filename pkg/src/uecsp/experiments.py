"""Monte Carlo harness: satisfiability sweeps, core sizes, cluster censuses.

Every trial gets its own seed derived from (master seed, grid index, trial
index), and results are aggregated with counts and sums only, so outputs do
not depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .clusters import cluster_partition, find_flippable_cycles, frozen_columns
from .constraints import constant_solutions
from .instance import ConstraintDistribution, Instance, incidence, sample_instance
from .peeling import DEFAULT_BUDGET, peel_2core, solve
from . import thresholds

CSV_COLUMNS = (
    "k", "r", "n", "m", "d_over_k", "trials", "sat", "unsat", "unknown",
    "mean_core_cols", "mean_core_rows", "seed",
)


class NoBracketError(ValueError):
    """The sat-fraction table never crosses 1/2."""


def trial_seed(seed: int, *path: int) -> int:
    """A 63-bit seed for one trial, derived from the master seed and its position."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _map(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


# -- satisfiability sweep ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SweepConfig:
    k: int
    r: int
    distribution: ConstraintDistribution
    n: int
    grid: tuple[float, ...]
    trials: int
    seed: int
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        if list(grid) != sorted(grid):
            raise ValueError("density grid must be sorted ascending")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed is None:
            raise ValueError("a master seed is mandatory")
        if (self.distribution.k, self.distribution.r) != (self.k, self.r):
            raise ValueError("distribution does not match (k, r)")
        object.__setattr__(self, "grid", grid)

    def m_for(self, d_over_k: float) -> int:
        return int(round(d_over_k * self.n))


@dataclass(frozen=True)
class TrialResult:
    grid_index: int
    trial: int
    status: str
    n_core: int
    m_core: int
    nodes: int


@dataclass
class SweepRow:
    k: int
    r: int
    n: int
    m: int
    d_over_k: float
    trials: int
    sat: int
    unsat: int
    unknown: int
    mean_core_cols: float  # mean n_core / n
    mean_core_rows: float  # mean m_core / n
    seed: int
    unknown_nodes: list[int] = field(default_factory=list)  # budget consumed by each UNKNOWN trial

    @property
    def sat_fraction(self) -> float:
        return self.sat / self.trials

    def csv_fields(self) -> list[str]:
        return [
            str(self.k), str(self.r), str(self.n), str(self.m), f"{self.d_over_k:.6f}",
            str(self.trials), str(self.sat), str(self.unsat), str(self.unknown),
            f"{self.mean_core_cols:.6f}", f"{self.mean_core_rows:.6f}", str(self.seed),
        ]


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[SweepRow]
    trials: list[TrialResult]
    wall_time: float

    def to_csv(self) -> str:
        return rows_to_csv(self.rows)


def rows_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(row.csv_fields())
    return buf.getvalue()


def _sweep_trial(task) -> TrialResult:
    gi, ti, n, m, dist, seed, budget = task
    inst = sample_instance(n, m, dist, seed)
    rep = solve(inst, budget)
    return TrialResult(gi, ti, rep.status, rep.n_core, rep.m_core, rep.nodes)


def sweep_satisfiability(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    Q = constant_solutions(cfg.distribution.functions)
    if Q:
        warnings.warn(
            f"constant solutions {sorted(Q)} exist; every instance is satisfiable",
            stacklevel=2,
        )
    tasks = []
    for gi, dk in enumerate(cfg.grid):
        m = cfg.m_for(dk)
        for ti in range(cfg.trials):
            tasks.append((gi, ti, cfg.n, m, cfg.distribution, trial_seed(cfg.seed, gi, ti), cfg.budget))
    start = time.perf_counter()
    results = _map(_sweep_trial, tasks, workers)
    wall = time.perf_counter() - start
    rows = []
    for gi, dk in enumerate(cfg.grid):
        mine = [t for t in results if t.grid_index == gi]
        count = {s: sum(t.status == s for t in mine) for s in ("SAT", "UNSAT", "UNKNOWN")}
        rows.append(
            SweepRow(
                k=cfg.k, r=cfg.r, n=cfg.n, m=cfg.m_for(dk), d_over_k=dk, trials=len(mine),
                sat=count["SAT"], unsat=count["UNSAT"], unknown=count["UNKNOWN"],
                mean_core_cols=sum(t.n_core for t in mine) / (len(mine) * cfg.n),
                mean_core_rows=sum(t.m_core for t in mine) / (len(mine) * cfg.n),
                seed=cfg.seed,
                unknown_nodes=[t.nodes for t in mine if t.status == "UNKNOWN"],
            )
        )
    return SweepResult(cfg, rows, results, wall)


def estimate_crossover(table) -> float:
    """Density where the sat fraction first falls through 1/2, by linear
    interpolation between the bracketing grid points.

    ``table`` is a list of SweepRow or of (d_over_k, sat_fraction) pairs.
    """
    pts = [(r.d_over_k, r.sat_fraction) if isinstance(r, SweepRow) else (float(r[0]), float(r[1])) for r in table]
    for (x0, f0), (x1, f1) in zip(pts, pts[1:]):
        if f0 >= 0.5 > f1:
            return x0 + (f0 - 0.5) / (f0 - f1) * (x1 - x0)
    raise NoBracketError("sat fraction does not cross 1/2 on this grid")


def monotonicity_violations(rows: Sequence[SweepRow], z: float = 5.0) -> list[tuple[float, float]]:
    """Grid pairs where the sat fraction rises by more than z standard errors."""
    bad = []
    for i, a in enumerate(rows):
        for b in rows[i + 1:]:
            p = (a.sat + b.sat) / (a.trials + b.trials)
            se = math.sqrt(p * (1 - p) * (1 / a.trials + 1 / b.trials))
            rise = b.sat_fraction - a.sat_fraction
            if rise > 0 and rise > z * se:
                bad.append((a.d_over_k, b.d_over_k))
    return bad


def load_sweep_config(path: str | Path, seed: int | None = None) -> SweepConfig:
    """Read a sweep config; ``seed`` overrides the file's master seed."""
    from .io import load_distribution, distribution_from_json

    path = Path(path)
    obj = json.loads(path.read_text())
    if seed is not None:
        obj["seed"] = seed
    if obj.get("seed") is None:
        raise ValueError("sweep needs a master seed (config 'seed' or --seed)")
    dist_spec = obj["distribution"]
    if isinstance(dist_spec, str):
        dist = load_distribution(path.parent / dist_spec)
    else:
        dist = distribution_from_json(dist_spec)
    grid = obj["grid"]
    if isinstance(grid, dict):
        count = int(round((grid["stop"] - grid["start"]) / grid["step"])) + 1
        grid = [round(grid["start"] + i * grid["step"], 10) for i in range(count)]
    return SweepConfig(
        k=int(obj.get("k", dist.k)), r=int(obj.get("r", dist.r)), distribution=dist,
        n=int(obj["n"]), grid=tuple(grid), trials=int(obj["trials"]), seed=int(obj["seed"]),
        budget=int(obj.get("budget", DEFAULT_BUDGET)),
    )


# -- core sizes --------------------------------------------------------------


def _core_trial(task):
    n, m, dist, seed = task
    inst = sample_instance(n, m, dist, seed)
    peel = peel_2core(incidence(inst))
    return peel.n_core / n, peel.m_core / n


def core_size_experiment(k: int, d: float, n: int, trials: int, seed: int, r: int = 2,
                         workers: int = 1) -> dict:
    """Measured n_core/n and m_core/n against pi_k(d) and (d/k) rho^k."""
    from .abelian import AbelianGroup, group_constraint

    if d <= 0:
        raise ValueError("d must be positive")
    dist = ConstraintDistribution.atomic(group_constraint(AbelianGroup.cyclic(r), 0, k))
    m = int(round(d / k * n))
    tasks = [(n, m, dist, trial_seed(seed, 0, t)) for t in range(trials)]
    res = _map(_core_trial, tasks, workers)
    cols = np.array([c for c, _ in res])
    rows = np.array([w for _, w in res])
    x = thresholds.rho(k, d)
    return {
        "k": k, "d": d, "n": n, "m": m, "trials": trials, "seed": seed,
        "core_cols": cols.tolist(), "core_rows": rows.tolist(),
        "mean_core_cols": float(cols.mean()), "std_core_cols": float(cols.std()),
        "mean_core_rows": float(rows.mean()), "std_core_rows": float(rows.std()),
        "predicted_core_cols": thresholds.pi_k(k, d),
        "predicted_core_rows": (d / k) * x**k,
    }


# -- cluster census ----------------------------------------------------------


def census_trial(inst: Instance, cap: int = 10**6) -> dict:
    """Enumerate an instance's solutions and check the cluster structure."""
    from .peeling import enumerate_all_solutions

    sols = enumerate_all_solutions(inst, cap)
    B = incidence(inst)
    peel = peel_2core(B)
    cycles = find_flippable_cycles(peel, B)
    vstar = frozen_columns(peel, cycles)
    rep = cluster_partition(sols, vstar, inst.r)
    ext = peel.extension_exponent
    expected = inst.r**ext
    if len(sols):
        _, counts = np.unique(sols[:, peel.core_cols], axis=0, return_counts=True)
        ext_ok = bool(np.all(counts == expected))
        n_core_solutions = len(counts)
    else:
        ext_ok, n_core_solutions = True, 0
    return {
        "n": inst.n, "m": inst.m, "seed": inst.seed,
        "solutions": int(len(sols)),
        "n_core": peel.n_core, "m_core": peel.m_core,
        "cycle_columns": sorted({v for c in cycles for v in c.columns}),
        "core_solutions": n_core_solutions,
        "extension_exponent": ext,
        "extension_law": ext_ok,
        "clusters": rep.n_clusters,
        "cluster_sizes": rep.sizes,
        "equal_sizes": rep.equal_sizes,
        "min_separation": rep.min_separation,
        "max_step": rep.max_step,
        "frozen_to_constant": _frozen_to_constant(inst, sols, vstar),
    }


def _frozen_to_constant(inst: Instance, sols: np.ndarray, vstar) -> bool | None:
    from .clusters import constant_cluster_check

    Q = constant_solutions(inst.used_functions() or list(inst.functions))
    if not Q:
        return None
    return constant_cluster_check(inst, sols, vstar)


def _census_task(task):
    n, m, dist, seed, cap = task
    return census_trial(sample_instance(n, m, dist, seed), cap)


def cluster_census(k: int, r: int, dist: ConstraintDistribution, n: int, d_over_k: float,
                   trials: int, seed: int, cap: int = 10**6, workers: int = 1) -> list[dict]:
    if (dist.k, dist.r) != (k, r):
        raise ValueError("distribution does not match (k, r)")
    if r**n > cap:
        raise ValueError(f"r**n = {r**n} exceeds the cap {cap}")
    m = int(round(d_over_k * n))
    tasks = [(n, m, dist, trial_seed(seed, 0, t), cap) for t in range(trials)]
    return _map(_census_task, tasks, workers)
