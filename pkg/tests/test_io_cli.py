import json
import subprocess
import sys

import numpy as np
import pytest

from povmlab.cli import main
from povmlab.devices import kraus_povm, random_quantum_device
from povmlab.errors import SpecError
from povmlab.io import device_from_dict, device_to_dict, load_povm, povm_from_dict, povm_to_dict, state_from_json
from povmlab.tomography import reconstruct


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _report(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main([*argv, "-o", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


@pytest.mark.parametrize("kind", ["projective", "indirect", "noisy"])
def test_device_round_trip(kind):
    dev = random_quantum_device(3, 4, 5, kind=kind)
    again = device_from_dict(json.loads(json.dumps(device_to_dict(dev))))
    assert np.array_equal(kraus_povm(dev).operators, kraus_povm(again).operators)


def test_povm_round_trip_exact():
    povm = reconstruct(random_quantum_device(3, 3, 1, kind="indirect"))
    again = povm_from_dict(json.loads(json.dumps(povm_to_dict(povm))))
    assert np.max(np.abs(again.operators - povm.operators)) <= 1e-15


@pytest.mark.parametrize("spec,field", [
    ({"dim": 2}, "kind"),
    ({"kind": "projective"}, "dim"),
    ({"kind": "projective", "dim": 2, "basis": [[1, 0]]}, "basis"),
    ({"kind": "indirect", "dim": 2, "ancilla_state": [1, 0]}, "coupling"),
    ({"kind": "quantum-ish", "dim": 2}, "kind"),
])
def test_malformed_device_names_field(spec, field):
    with pytest.raises(SpecError, match=field):
        device_from_dict(spec, "dev.json")


def test_state_from_json_normalizes():
    s = state_from_json({"dims": [["A", 2], ["B", 2]], "amplitudes": [[1, 0], [0, 0], [0, 0], [0, 1]]})
    np.testing.assert_allclose(s.amplitudes, np.array([1, 0, 0, 1j]) / np.sqrt(2))


def test_cli_fig2_a_lambda_exact(tmp_path):
    code, rep = _report(tmp_path, "experiment", "fig2", "--lambda", "0.25", "--exact")
    assert code == 0 and rep["verdict"] == "PASS"
    a = [c for c in rep["checks"] if c["name"].endswith("fig2b.a_lambda")][0]
    assert abs(a["data"]["a_lambda"] - 0.25) <= 1e-12


def test_cli_fig1_same_state(tmp_path):
    cfg = _write(tmp_path, "cfg.json", {"psi": "singlet", "psi_prime": "same"})
    code, rep = _report(tmp_path, "experiment", "fig1", "--config", cfg)
    assert code == 0 and rep["verdict"] == "PASS"


def test_cli_fig1_adversarial(tmp_path):
    _write(tmp_path, "adv.json", {"kind": "adversarial", "dim": 2})
    cfg = _write(tmp_path, "cfg.json", {
        "device": "adv.json",
        "psi": {"dims": [["A", 2], ["B", 2]], "amplitudes": [1, 0, 0, 0]},
        "psi_prime": {"dims": [["A", 2], ["B", 2]], "amplitudes": [0, 1, 0, 0]},
    })
    code, rep = _report(tmp_path, "experiment", "fig1", "--config", cfg)
    assert code == 1 and rep["verdict"] == "FAIL"
    assert max(c["value"] for c in rep["checks"] if "P_a_vs_P_c" in c["name"]) >= 0.1


def test_cli_tomography_projective(tmp_path):
    povm_path = tmp_path / "povm.json"
    code = main(["tomography", "--dim", "2", "--povm", str(povm_path), "-o", str(tmp_path / "r.json")])
    assert code == 0
    np.testing.assert_allclose(load_povm(povm_path).operators, [np.diag([1, 0]), np.diag([0, 1])], atol=1e-15)


def test_cli_tomography_indirect_report_field(tmp_path):
    dev = _write(tmp_path, "dev.json", {"kind": "indirect", "dim": 3, "ancilla_dim": 2, "seed": 4})
    code, rep = _report(tmp_path, "tomography", "--device", dev, "--exact")
    match = [c for c in rep["checks"] if c["name"] == "povm.kraus_match"][0]
    assert code == 0 and match["value"] <= 1e-9
    written = load_povm(tmp_path / "report.povm.json")
    assert np.max(np.abs(written.operators - kraus_povm(device_from_dict(json.loads(open(dev).read()))).operators)) <= 1e-9


def test_cli_povm_file_round_trip(tmp_path):
    dev = _write(tmp_path, "dev.json", {"kind": "noisy", "dim": 2, "outcomes": 3, "seed": 1})
    code, rep = _report(tmp_path, "tomography", "--device", dev)
    written = load_povm(tmp_path / "report.povm.json")
    in_report = povm_from_dict(rep["data"]["povm"])
    assert np.max(np.abs(written.operators - in_report.operators)) <= 1e-15
    assert np.max(np.abs(written.operators - reconstruct(device_from_dict(json.load(open(dev)))).operators)) <= 1e-15


def test_cli_sampled_reports_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["tomography", "--dim", "2", "--shots", "1000000", "--seed", "42", "-o", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_certify_rotated_projective(tmp_path):
    r = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]]) * np.exp(0.3j)
    dev = _write(tmp_path, "dev.json", {"kind": "projective", "dim": 2,
                                        "basis": np.stack([r.real, r.imag], -1).tolist()})
    code, rep = _report(tmp_path, "certify", "--device", dev)
    names = {c["name"] for c in rep["checks"]}
    assert code == 0 and "born.rule_residual" in names and "a_lambda.midpoint" in names


def test_cli_certify_noisy_passes_with_note(tmp_path):
    dev = _write(tmp_path, "dev.json", {"kind": "noisy", "dim": 2, "confusion": [[0.9, 0.1], [0.1, 0.9]]})
    code, rep = _report(tmp_path, "certify", "--device", dev)
    assert code == 0
    assert any("not maximal-certainty" in n for n in rep["notes"])


def test_cli_certify_adversarial_fails_consistency(tmp_path):
    dev = _write(tmp_path, "dev.json", {"kind": "adversarial", "dim": 2})
    code, rep = _report(tmp_path, "certify", "--device", dev)
    assert code == 1
    assert [c for c in rep["checks"] if c["name"] == "tomography.consistency"][0]["verdict"] == "FAIL"


def test_cli_constant_device_certify_is_vacuous(tmp_path):
    dev = _write(tmp_path, "dev.json", {"kind": "noisy", "dim": 2, "confusion": [[1, 1]]})
    code, rep = _report(tmp_path, "certify", "--device", dev)
    assert code == 0 and any("vacuous" in n for n in rep["notes"])


@pytest.mark.parametrize("argv", [
    ["tomography", "--shots", "0"],
    ["experiment", "fig2", "--lambda", "1.5"],
    ["tomography", "--seed", "-1"],
    ["experiment", "fig9"],
    ["tomography", "--device", "/nonexistent.json"],
])
def test_cli_usage_errors(argv):
    assert main(argv) == 2


def test_cli_dimension_mismatch(tmp_path):
    dev = _write(tmp_path, "dev.json", {"kind": "projective", "dim": 3})
    cfg = _write(tmp_path, "cfg.json", {"psi": "singlet", "psi_prime": "same"})
    assert main(["experiment", "fig1", "--device", dev, "--config", cfg]) == 2


def test_cli_malformed_spec_diagnostic(tmp_path, caplog):
    dev = _write(tmp_path, "dev.json", {"kind": "projective", "dim": 2, "basis": [[1, 0]]})
    assert main(["tomography", "--device", dev]) == 2
    assert "dev.json" in caplog.text and "basis" in caplog.text


def test_console_entry_point_exit_status(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "povmlab", "experiment", "fig3", "-o", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(out.read_text())["verdict"] == "PASS"
    assert proc.stdout == ""
