"""End-to-end CLI tests driven through main(argv)."""
import json

import pytest

from tanglesim.cli import main


def _write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def ring_scenario(tmp_path):
    return _write(
        tmp_path, "ring.json",
        {"kind": "compliance-net", "horizon": 50.0, "window": 5.0,
         "targets": 0.9, "baselines": 0.5,
         "ring": {"n": 8, "coupling": 0.1, "lag": 1.0}},
    )


def test_simulate_writes_outputs_and_prints_summary(tmp_path, capsys):
    scenario = _write(
        tmp_path, "small.json",
        {"kind": "tangle-reduced", "rate": 40.0, "delay": 1.0,
         "horizon": 8.0, "runs": 3},
    )
    code = main(["simulate", scenario, "--out", str(tmp_path / "res")])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["kind"] == "tangle-reduced"
    assert (tmp_path / "res" / "small_ensemble.csv").exists()
    assert (tmp_path / "res" / "small_summary.json").exists()


def test_simulate_rejects_bad_scenario(tmp_path, capsys):
    scenario = _write(tmp_path, "bad.json", {"kind": "tangle-reduced"})
    assert main(["simulate", scenario]) == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_missing_file(tmp_path, capsys):
    assert main(["simulate", str(tmp_path / "nope.json")]) == 2
    assert "not found" in capsys.readouterr().err


def test_validate_pass_and_report(tmp_path, capsys):
    agent = _write(
        tmp_path, "agent.json",
        {"kind": "tangle-agent", "rate": 60.0, "delay": 3.0,
         "horizon": 30.0, "runs": 40, "seed": 5},
    )
    reduced = _write(
        tmp_path, "reduced.json",
        {"kind": "tangle-reduced", "rate": 60.0, "delay": 3.0,
         "horizon": 30.0, "runs": 40, "seed": 6},
    )
    code = main(["validate", agent, reduced, "--out", str(tmp_path / "rep"),
                 "--workers", "4"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.strip().endswith("validation: PASS")
    report = json.loads((tmp_path / "rep" / "validation_report.json").read_text())
    assert report["passed"] is True
    assert report["max_rel_L"] < 0.05


def test_validate_negative_control_fails(tmp_path, capsys):
    agent = _write(
        tmp_path, "agent.json",
        {"kind": "tangle-agent", "rate": 60.0, "delay": 3.0,
         "horizon": 30.0, "runs": 10, "seed": 5},
    )
    reduced = _write(
        tmp_path, "reduced.json",
        {"kind": "tangle-reduced", "rate": 60.0, "delay": 5.0,
         "horizon": 30.0, "runs": 10, "seed": 6},
    )
    code = main(["validate", agent, reduced])
    assert code == 1
    assert capsys.readouterr().out.strip().endswith("validation: FAIL")


def test_validate_structural_mismatch_is_an_error(tmp_path, capsys):
    agent = _write(
        tmp_path, "agent.json",
        {"kind": "tangle-agent", "rate": 60.0, "delay": 3.0,
         "horizon": 30.0, "runs": 5},
    )
    reduced = _write(
        tmp_path, "reduced.json",
        {"kind": "tangle-reduced", "rate": 60.0, "delay": 3.0,
         "horizon": 60.0, "runs": 5},
    )
    assert main(["validate", agent, reduced]) == 2
    assert "not comparable" in capsys.readouterr().err


def test_stability_pass_for_weak_ring(ring_scenario, capsys):
    code = main(["stability", ring_scenario])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "PASS"
    assert payload["static"]["feasible"] is True
    assert abs(payload["static"]["costs"][0] - 0.22) < 1e-12
    assert payload["ring_condition"] is True
    assert payload["sufficient_condition"]["max_eigenvalue_modulus"] < 2.5


def test_stability_fail_for_strong_ring(tmp_path, capsys):
    strong = _write(
        tmp_path, "strong.json",
        {"kind": "compliance-net", "horizon": 50.0, "window": 5.0,
         "targets": 0.9, "baselines": 0.5,
         "ring": {"n": 8, "coupling": 2.0, "lag": 1.0}},
    )
    code = main(["stability", strong])
    assert code == 1
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "FAIL"
    assert payload["ring_condition"] is False


def test_stability_rejects_wrong_kind(tmp_path, capsys):
    wrong = _write(
        tmp_path, "wrong.json",
        {"kind": "junction", "horizon": 10.0, "mode": "fixed", "Q": 0.9},
    )
    assert main(["stability", wrong]) == 2


def test_roots_tip_characteristic_is_stable(tmp_path, capsys):
    spec = _write(tmp_path, "tip.json", {"kind": "tip-characteristic", "delay": 3.0})
    code = main(["roots", spec])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["count"] == 0
    assert payload["kind"] == "tip-characteristic"


def test_roots_polynomial_known_count(tmp_path, capsys):
    spec = _write(
        tmp_path, "poly.json",
        {"kind": "polynomial", "coefficients": [2.0, -3.0, 1.0],  # (z-1)(z-2)
         "region": {"re": [0.5, 3.0], "im": [-1.0, 1.0]}},
    )
    code = main(["roots", spec])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["count"] == 2


def test_roots_compliance_window(tmp_path, ring_scenario, capsys):
    spec = _write(
        tmp_path, "win.json",
        {"kind": "compliance-window", "network": "ring.json",
         "region": {"re": [0.0001, 3.0], "im": [-6.0, 6.0], "samples": 200}},
    )
    code = main(["roots", spec])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["count"] == 0


def test_roots_contour_error_is_reported(tmp_path, capsys):
    spec = _write(
        tmp_path, "onroot.json",
        {"kind": "polynomial", "coefficients": [-1.0, 1.0],  # z - 1
         "region": {"re": [1.0, 2.0], "im": [-1.0, 1.0]}},  # root on edge
    )
    assert main(["roots", spec]) == 2
    assert "contour" in capsys.readouterr().err


def test_roots_unknown_kind(tmp_path, capsys):
    spec = _write(tmp_path, "odd.json", {"kind": "wavelet"})
    assert main(["roots", spec]) == 2
