import json
import subprocess
import sys

import numpy as np
import pytest

from cartanweyl.checks import compute_tensors, dof_report, run_check
from cartanweyl.cli import main
from cartanweyl.errors import ScenarioError
from cartanweyl.scenarios import CATALOG_NAMES, Scenario, catalog


def test_scenario_json_round_trip(tmp_path):
    scn = catalog("diag-poly", 3)
    path = tmp_path / "scn.json"
    scn.save(path)
    loaded = Scenario.load(path)
    assert loaded.to_dict() == scn.to_dict()


def test_scenario_rejects_unknown_keys():
    with pytest.raises(ScenarioError):
        Scenario.from_dict({"dimension": 3, "points": [[0, 0, 0]], "bogus": 1})


def test_scenario_rejects_low_jet_order():
    with pytest.raises(ScenarioError):
        Scenario(name="x", dimension=3, signature=None,
                 points=[(0.1, 0.2, 0.3)], jet_order=2)


def test_scenario_rejects_bad_expression():
    with pytest.raises(Exception):
        Scenario(name="x", dimension=3, signature=None,
                 vielbein=[["1 +", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
                 points=[(0.1, 0.2, 0.3)])


def test_catalog_names_all_construct():
    for name in CATALOG_NAMES:
        m = 4 if name == "ricci-flat-m4" else 3
        scn = catalog(name, m)
        assert scn.points


def test_flat_compute_tensors():
    rep = compute_tensors(catalog("flat", 3))
    assert rep.passed
    key = next(iter(rep.tensors))
    t = rep.tensors[key]
    assert np.abs(np.array(t["Gamma"])).max() == 0.0
    assert np.abs(np.array(t["W"])).max() == 0.0
    assert np.allclose(np.array(t["g"]), np.diag([1.0, -1.0, -1.0]))


def test_constant_curvature_compute():
    rep = compute_tensors(catalog("constant-curvature", 3))
    assert rep.passed
    for t in rep.tensors.values():
        g = np.array(t["g"])
        P = np.array(t["P"])
        assert np.abs(P - (-0.5) * g).max() < 1e-9


def test_ricci_flat_compute():
    rep = compute_tensors(catalog("ricci-flat-m4", 4))
    assert rep.passed
    for t in rep.tensors.values():
        assert np.abs(np.array(t["P"])).max() < 1e-8
        assert np.abs(np.array(t["C"])).max() < 1e-8
        assert np.abs(np.array(t["W"])).max() > 1e-3


def test_determinism_same_seed_same_payload():
    a = run_check(catalog("generic", 3), "dressing")
    b = run_check(catalog("generic", 3), "dressing")
    assert json.dumps(a.payload(), sort_keys=True) == \
        json.dumps(b.payload(), sort_keys=True)


def test_parallel_matches_sequential():
    scn = catalog("diag-poly", 3)
    a = run_check(scn, "gauge")
    b = run_check(scn, "gauge", points_parallel=True)
    assert json.dumps(a.payload(), sort_keys=True) == \
        json.dumps(b.payload(), sort_keys=True)


def test_cli_check_pass(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = main(["check", "--catalog", "flat", "--suite", "gauge",
                 "--json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert all(c["pass"] for c in doc["payload"]["checks"])
    assert "wall_time_s" in doc["meta"]


def test_cli_dof(capsys):
    code = main(["dof", "-m", "4"])
    assert code == 0
    table = json.loads(capsys.readouterr().out)
    assert table["starting"]["variables"] == 60
    assert table["starting"]["symmetries"] == 11
    assert table["starting"]["total"] == 9


def test_cli_bad_scenario_is_input_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code = main(["check", "--scenario", str(path)])
    assert code == 2


def test_cli_degenerate_vielbein_names_point(tmp_path, capsys):
    scn = catalog("diag-poly", 3)
    d = scn.to_dict()
    d["vielbein"][0][0] = "x0"
    d["points"] = [[0.0, 0.1, 0.2]]
    path = tmp_path / "degenerate.json"
    path.write_text(json.dumps(d))
    code = main(["check", "--scenario", str(path), "--suite", "gauge"])
    err = capsys.readouterr().err
    assert code == 2
    assert "0.0, 0.1, 0.2" in err


def test_cli_compute_and_transform(tmp_path):
    assert main(["compute", "--catalog", "flat"]) == 0
    assert main(["transform", "--catalog", "flat"]) == 0


def test_cli_entry_point_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "cartanweyl.cli", "dof", "-m", "3"],
        capture_output=True, text=True)
    assert proc.returncode == 0
    table = json.loads(proc.stdout)
    assert table["conformal_class"] == 5


def test_failed_check_exit_code(tmp_path):
    scn = catalog("flat", 3)
    scn.tolerance = -1.0  # force every residual to fail
    rep = run_check(scn, "gauge")
    assert not rep.passed


def test_dof_rejects_small_m():
    with pytest.raises(ScenarioError):
        dof_report(2)


@pytest.mark.parametrize("m", range(3, 9))
def test_dof_columns_agree(m):
    table = dof_report(m)
    want = m * (m + 1) // 2 - 1
    assert table["starting"]["total"] == want
    assert table["outcoming"]["total"] == want
    assert table["columns_agree"]


def test_dof_m3_frozen_values():
    table = dof_report(3)
    assert table["starting"]["variables"] == 30
    assert table["starting"]["symmetries"] == 7
    assert table["starting"]["constraints"] == {"torsion": 9, "ricci": 6, "trace": 3}
    assert table["starting"]["total"] == 5


def test_golden_report_structure():
    """The flat gauge report keeps its check names, thresholds and flags."""
    import pathlib
    golden = json.loads(
        (pathlib.Path(__file__).parent / "golden"
         / "flat_gauge_structure.json").read_text())
    rep = run_check(catalog("flat", 3), "gauge")
    payload = rep.payload()
    got = {
        "scenario_name": payload["scenario"]["name"],
        "checks": [{"name": c["name"], "threshold": c["threshold"],
                    "pass": c["pass"]} for c in payload["checks"]],
    }
    assert got == golden


def test_cli_tolerance_and_jet_order_flags(tmp_path):
    out = tmp_path / "r.json"
    code = main(["check", "--catalog", "flat", "--suite", "gauge",
                 "--tolerance", "1e-3", "--jet-order", "5",
                 "--json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["payload"]["scenario"]["tolerance"] == 1e-3
    assert doc["payload"]["scenario"]["jet_order"] == 5


def test_cli_points_parallel_flag():
    assert main(["check", "--catalog", "diag-poly", "--suite", "gauge",
                 "--points-parallel"]) == 0
