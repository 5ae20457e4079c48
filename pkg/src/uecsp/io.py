"""JSON formats for constraint functions, distributions and instances."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .constraints import ConstraintFunction, uniqueness_violation
from .instance import ConstraintDistribution, Instance


def function_to_json(psi: ConstraintFunction) -> dict:
    return {"name": psi.name, "k": psi.k, "r": psi.r, "satisfying": list(psi.satisfying)}


def function_from_json(obj: dict) -> ConstraintFunction:
    name, k, r = obj["name"], int(obj["k"]), int(obj["r"])
    if "satisfying" in obj:
        sat = [int(i) for i in obj["satisfying"]]
        if sat != sorted(set(sat)):
            raise ValueError(f"{name}: satisfying indices must be sorted and distinct")
        return ConstraintFunction(k, r, tuple(sat), name)
    if "extension_table" in obj:
        psi = ConstraintFunction.from_extension_table(k, r, obj["extension_table"], name)
        w = uniqueness_violation(psi)
        if w is not None:
            raise ValueError(f"{name}: extension table is not uniquely extendable: {w.data}")
        return psi
    raise ValueError(f"{name}: need 'satisfying' or 'extension_table'")


def functions_from_json(obj) -> list[ConstraintFunction]:
    """A single function object, a list of them, or {"functions": [...]}."""
    if isinstance(obj, dict) and "functions" in obj:
        obj = obj["functions"]
    if isinstance(obj, dict):
        return [function_from_json(obj)]
    return [function_from_json(o) for o in obj]


def load_functions(path) -> list[ConstraintFunction]:
    return functions_from_json(json.loads(Path(path).read_text()))


def distribution_to_json(dist: ConstraintDistribution) -> dict:
    return {
        "functions": [function_to_json(f) for f in dist.functions],
        "weights": [f"{w.numerator}/{w.denominator}" for w in dist.weights],
    }


def distribution_from_json(obj: dict) -> ConstraintDistribution:
    fns = functions_from_json(obj["functions"])
    weights = obj.get("weights")
    if weights is None:
        return ConstraintDistribution.uniform(fns)
    return ConstraintDistribution(tuple(fns), tuple(Fraction(str(w)) for w in weights))


def load_distribution(path) -> ConstraintDistribution:
    return distribution_from_json(json.loads(Path(path).read_text()))


def instance_to_json(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "k": inst.k,
        "r": inst.r,
        "seed": inst.seed,
        "functions": [function_to_json(f) for f in inst.functions],
        "constraints": [
            {"fn": inst.functions[int(i)].name, "vars": [int(v) for v in vs]}
            for i, vs in zip(inst.fn_ids, inst.variables)
        ],
    }


def instance_from_json(obj: dict) -> Instance:
    fns = functions_from_json(obj["functions"])
    by_name = {f.name: i for i, f in enumerate(fns)}
    if len(by_name) != len(fns):
        raise ValueError("function names must be distinct")
    for f in fns:
        w = uniqueness_violation(f)
        if w is not None:
            raise ValueError(f"{f.name} is not uniquely extendable: {w.data}")
    k = int(obj["k"])
    cons = obj["constraints"]
    try:
        fn_ids = np.array([by_name[c["fn"]] for c in cons], dtype=np.int64)
    except KeyError as e:
        raise ValueError(f"constraint references unknown function {e}") from None
    variables = np.array([c["vars"] for c in cons], dtype=np.int64).reshape(-1, k)
    return Instance(int(obj["n"]), k, int(obj["r"]), tuple(fns), fn_ids, variables, obj.get("seed"))


def load_instance(path) -> Instance:
    return instance_from_json(json.loads(Path(path).read_text()))


def save_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, default=_default)


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "to_json"):
        return o.to_json()
    raise TypeError(f"cannot serialize {type(o).__name__}")
