"""Command-line entry point: ``uecsp <subcommand> ...``.

Every subcommand writes JSON (or CSV for ``sweep``) to stdout or to ``-o``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments, thresholds
from .constraints import commutativity_violation, constant_solutions, uniqueness_violation
from .io import (
    dumps, function_to_json, instance_to_json, load_distribution,
    load_functions, load_instance,
)
from .instance import instance_to_text, sample_instance, incidence
from .peeling import DEFAULT_BUDGET, enumerate_all_solutions, peel_2core, solve
from .products import ThetaMap, nongroup_family, product_theta
from .quasigroups import quasigroup_checks, quasigroup_f_prime
from .structure import (
    GroupEquivalence, f2_symmetry_violation, reconstruct_group, reducibility_violation,
)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _witness(w):
    return None if w is None else w.to_json()


# -- constraint algebra ------------------------------------------------------


def cmd_analyze(args) -> int:
    psis = load_functions(args.functions)
    per_fn = []
    all_ue = True
    for psi in psis:
        ue = uniqueness_violation(psi)
        all_ue &= ue is None
        per_fn.append({
            "name": psi.name,
            "k": psi.k,
            "r": psi.r,
            "uniquely_extendable": ue is None,
            "ue_witness": _witness(ue),
            "commutative": commutativity_violation(psi) is None,
            "commutativity_witness": _witness(commutativity_violation(psi)),
        })
    report = {"functions": per_fn, "constant_solutions": sorted(constant_solutions(psis))}
    if all_ue:
        red = reducibility_violation(psis)
        f2 = f2_symmetry_violation(psis)
        grp = reconstruct_group(psis, args.alpha)
        report.update({
            "reducible": red is None,
            "reducibility_witness": _witness(red),
            "F2_symmetric": f2 is None,
            "F2_witness": _witness(f2),
            "group_equivalent": isinstance(grp, GroupEquivalence),
            "group": grp.to_json(),
            "quasigroup": [
                {"name": p.name, **quasigroup_checks(quasigroup_f_prime(p, args.alpha)).to_json()}
                for p in psis
            ],
        })
    _emit(dumps(report), args.output)
    return 0


def cmd_reconstruct(args) -> int:
    res = reconstruct_group(load_functions(args.functions), args.alpha)
    _emit(dumps({"success": isinstance(res, GroupEquivalence), "result": res.to_json()}), args.output)
    return 0 if isinstance(res, GroupEquivalence) else 1


def cmd_product(args) -> int:
    (psi1,), (psi2,) = load_functions(args.f1), load_functions(args.f2)
    theta = ThetaMap.from_json(json.loads(Path(args.theta).read_text()))
    psi = product_theta(psi1, psi2, theta, args.name)
    _emit(dumps(function_to_json(psi)), args.output)
    return 0


def cmd_nongroup(args) -> int:
    _emit(dumps(function_to_json(nongroup_family(args.k, args.q1, args.q2))), args.output)
    return 0


# -- instances ---------------------------------------------------------------


def cmd_gen(args) -> int:
    inst = sample_instance(args.n, args.m, load_distribution(args.dist), args.seed)
    _emit(instance_to_text(inst) if args.text else dumps(instance_to_json(inst)), args.output)
    return 0


def cmd_solve(args) -> int:
    rep = solve(load_instance(args.instance), args.budget)
    _emit(dumps(rep.to_json()), args.output)
    return 0


def cmd_enumerate(args) -> int:
    sols = enumerate_all_solutions(load_instance(args.instance), args.cap)
    _emit(dumps({"count": len(sols), "solutions": sols}), args.output)
    return 0


def cmd_peel(args) -> int:
    inst = load_instance(args.instance)
    _emit(dumps(peel_2core(incidence(inst), args.order, args.seed).to_json()), args.output)
    return 0


def cmd_clusters(args) -> int:
    inst = load_instance(args.instance)
    rep = experiments.census_trial(inst, args.cap)
    _emit(dumps(rep), args.output)
    return 0


# -- thresholds and experiments ----------------------------------------------


def cmd_thresholds(args) -> int:
    if args.critical:
        out = thresholds.critical(args.k, args.tol)
    else:
        if args.d is None or args.r is None:
            raise SystemExit("thresholds: need --r and --d, or --critical")
        out = thresholds.profile(args.k, args.r, args.d, args.tol).to_json()
    _emit(dumps(out), args.output)
    return 0


def cmd_sweep(args) -> int:
    cfg = experiments.load_sweep_config(args.config, seed=args.seed)
    res = experiments.sweep_satisfiability(cfg, args.workers)
    _emit(res.to_csv().rstrip("\n"), args.output)
    bad = experiments.monotonicity_violations(res.rows)
    for a, b in bad:
        print(f"monotonicity violation: sat fraction rises from d/k={a} to d/k={b}", file=sys.stderr)
    try:
        x = experiments.estimate_crossover(res.rows)
        print(f"crossover d/k = {x:.4f}", file=sys.stderr)
    except experiments.NoBracketError as e:
        print(str(e), file=sys.stderr)
    return 1 if bad else 0


def cmd_core_size(args) -> int:
    out = experiments.core_size_experiment(args.k, args.d, args.n, args.trials, args.seed, args.r, args.workers)
    _emit(dumps(out), args.output)
    return 0


def cmd_census(args) -> int:
    dist = load_distribution(args.dist)
    rows = experiments.cluster_census(
        dist.k, dist.r, dist, args.n, args.d_over_k, args.trials, args.seed, args.cap, args.workers,
    )
    _emit(dumps(rows), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uecsp", description="Uniquely extendable constraint satisfaction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")
        sp.set_defaults(func=fn)
        return sp

    sp = add("analyze", cmd_analyze, "structural verdicts for a constraint set")
    sp.add_argument("functions")
    sp.add_argument("--alpha", type=int, default=0)

    sp = add("reconstruct-group", cmd_reconstruct, "recover the abelian group behind a constraint set")
    sp.add_argument("functions")
    sp.add_argument("--alpha", type=int, default=0)

    sp = add("product", cmd_product, "twisted product of two constraints")
    sp.add_argument("f1")
    sp.add_argument("f2")
    sp.add_argument("--theta", required=True)
    sp.add_argument("--name")

    sp = add("nongroup", cmd_nongroup, "commutative UE constraint that is not a group constraint")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--q1", type=int, required=True)
    sp.add_argument("--q2", type=int, required=True)

    sp = add("gen", cmd_gen, "sample a random instance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--dist", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--text", action="store_true", help="plain-text export instead of JSON")

    sp = add("solve", cmd_solve, "decide satisfiability")
    sp.add_argument("instance")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    sp = add("enumerate", cmd_enumerate, "list every solution")
    sp.add_argument("instance")
    sp.add_argument("--cap", type=int, default=10**6)

    sp = add("peel", cmd_peel, "2-core of the incidence matrix")
    sp.add_argument("instance")
    sp.add_argument("--order", choices=("fifo", "lifo", "random"), default="fifo")
    sp.add_argument("--seed", type=int)

    sp = add("clusters", cmd_clusters, "cluster structure of the solution set")
    sp.add_argument("instance")
    sp.add_argument("--cap", type=int, default=10**6)

    sp = add("thresholds", cmd_thresholds, "core and satisfiability thresholds")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--r", type=int)
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--d", type=float)
    grp.add_argument("--critical", action="store_true")
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("sweep", cmd_sweep, "satisfiability sweep over a density grid (CSV)")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int, help="master seed; overrides the config file")
    sp.add_argument("--workers", type=int, default=1)

    sp = add("core-size", cmd_core_size, "measured 2-core sizes against the limit law")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--trials", type=int, default=5)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--workers", type=int, default=1)

    sp = add("census", cmd_census, "exhaustive cluster census on small instances")
    sp.add_argument("--dist", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d-over-k", type=float, required=True)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--cap", type=int, default=10**6)
    sp.add_argument("--workers", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as e:
        print(f"uecsp {args.command}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
