import json

import pytest

from uecsp.abelian import AbelianGroup, group_constraint
from uecsp.cli import main
from uecsp.instance import ConstraintDistribution
from uecsp.io import distribution_to_json, function_to_json

Z2 = AbelianGroup.cyclic(2)


@pytest.fixture
def files(tmp_path):
    x0, x1 = group_constraint(Z2, 0, 3, "x0"), group_constraint(Z2, 1, 3, "x1")
    (tmp_path / "fns.json").write_text(json.dumps([function_to_json(x0), function_to_json(x1)]))
    (tmp_path / "pi.json").write_text(json.dumps(distribution_to_json(ConstraintDistribution.uniform([x0, x1]))))
    (tmp_path / "z3.json").write_text(json.dumps(function_to_json(group_constraint(AbelianGroup.cyclic(3), 0, 3, "z3"))))
    (tmp_path / "theta.json").write_text(json.dumps({"k": 3, "r1": 3, "r2": 2,
                                                     "table": [{"multiset": [0, 0, 0], "perm": [1, 0]}]}))
    (tmp_path / "x1.json").write_text(json.dumps(function_to_json(x1)))
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_thresholds(capsys):
    code, out = run(capsys, "thresholds", "--k", 3, "--critical")
    assert code == 0
    assert json.loads(out.out)["d_k_over_k"] == pytest.approx(0.917935, abs=1e-6)
    code, out = run(capsys, "thresholds", "--k", 3, "--r", 2, "--d", 2.6)
    assert json.loads(out.out)["r"] == 2


def test_analyze_and_reconstruct(files, capsys):
    code, out = run(capsys, "analyze", files / "fns.json")
    rep = json.loads(out.out)
    assert rep["reducible"] and rep["F2_symmetric"] and rep["group_equivalent"]
    code, out = run(capsys, "reconstruct-group", files / "fns.json", "--alpha", 1)
    assert code == 0 and json.loads(out.out)["success"]


def test_product_and_nongroup(files, capsys):
    code, _ = run(capsys, "product", files / "z3.json", files / "x1.json", "--theta", files / "theta.json",
                  "-o", files / "prod.json")
    assert code == 0
    code, out = run(capsys, "reconstruct-group", files / "prod.json")
    assert code == 1 and not json.loads(out.out)["success"]
    code, out = run(capsys, "nongroup", "--k", 3, "--q1", 3, "--q2", 2, "-o", files / "ng.json")
    prod = json.loads((files / "prod.json").read_text())["satisfying"]
    assert json.loads((files / "ng.json").read_text())["satisfying"] == prod
    code, out = run(capsys, "analyze", files / "ng.json")
    rep = json.loads(out.out)
    assert not rep["F2_symmetric"] and rep["F2_witness"]["kind"] == "F2-asymmetric"


def test_instance_pipeline(files, capsys):
    inst = files / "inst.json"
    assert run(capsys, "gen", "--n", 12, "--m", 10, "--dist", files / "pi.json", "--seed", 5, "-o", inst)[0] == 0
    code, out = run(capsys, "solve", inst)
    assert json.loads(out.out)["status"] in ("SAT", "UNSAT")
    code, out = run(capsys, "enumerate", inst, "--cap", 5000)
    count = json.loads(out.out)["count"]
    code, out = run(capsys, "peel", inst)
    assert json.loads(out.out)["m"] == 10
    code, out = run(capsys, "clusters", inst)
    assert json.loads(out.out)["solutions"] == count
    code, out = run(capsys, "gen", "--n", 12, "--m", 10, "--dist", files / "pi.json", "--seed", 5, "--text")
    assert out.out.startswith("p uecsp 12 10 3 2")


def test_sweep_requires_seed(files, capsys):
    cfg = files / "cfg.json"
    cfg.write_text(json.dumps({"n": 40, "trials": 3, "distribution": "pi.json", "grid": [0.8, 1.0]}))
    code, out = run(capsys, "sweep", "--config", cfg)
    assert code == 2 and "seed" in out.err
    code, out = run(capsys, "sweep", "--config", cfg, "--seed", 1, "-o", files / "a.csv")
    code, out = run(capsys, "sweep", "--config", cfg, "--seed", 1, "--workers", 2, "-o", files / "b.csv")
    assert (files / "a.csv").read_bytes() == (files / "b.csv").read_bytes()


def test_core_size_and_census(files, capsys):
    code, out = run(capsys, "core-size", "--d", 3.0, "--n", 2000, "--trials", 2, "--seed", 1)
    assert code == 0 and json.loads(out.out)["trials"] == 2
    code, out = run(capsys, "census", "--dist", files / "pi.json", "--n", 10, "--d-over-k", 0.9,
                    "--trials", 3, "--seed", 2)
    assert len(json.loads(out.out)) == 3
