import json

import numpy as np
import pytest

from qrepeater.cli import main
from qrepeater.fock import fidelity
from qrepeater.link import LinkConfig, psi_plus, run_link_exhaustive
from qrepeater.serialize import (
    ensemble_from_json,
    ensemble_to_json,
    state_from_json,
    state_to_json,
)
from qrepeater.swap import pure, run_elementary_swap


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_state_round_trip():
    res = run_link_exhaustive(LinkConfig(p=0.01, error_model="coherent"))
    for o in res.accepted():
        for _, s in o.ensemble:
            back = state_from_json(json.loads(json.dumps(state_to_json(s))))
            assert fidelity(back, s) >= 1 - 1e-12


def test_state_with_photons_round_trip():
    from qrepeater.link import emission_state

    s = emission_state(0.05)
    data = state_to_json(s)
    assert any("H_L:1" in t["label"] for t in data["terms"])
    back = state_from_json(data)
    assert (back - s).norm() < 1e-12


def test_ensemble_round_trip():
    ens = run_link_exhaustive(LinkConfig()).accepted_ensemble(corrected=True)
    back = ensemble_from_json(json.loads(json.dumps(ensemble_to_json(ens))))
    assert back.weights == pytest.approx(ens.weights)
    for (_, a), (_, b) in zip(ens, back):
        assert fidelity(a, b) >= 1 - 1e-12


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "link plus: correct weight" in out
    assert "expected=0.333333333333" in out
    assert "expected=0.166666666667" in out
    assert "FAIL" not in out


def test_verify_negative_control(tmp_path, capsys):
    h = 0.5 * np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]])
    cfg = {"swap": {"matrix": [[[x, 0.0] for x in row] for row in h]}, "verify": {"noise_trials": 2}}
    assert main(["verify", "--config", _write(tmp_path, "bad.json", cfg)]) == 1
    out = capsys.readouterr().out
    assert "FAIL  swap network: correct-case polynomial" in out


def test_link_default_output(tmp_path, capsys):
    out = tmp_path / "link.json"
    assert main(["link", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["acceptance_probability"] == pytest.approx(3e-4)
    assert len(data["accepted_mixture"]) == 5
    comp = data["accepted_mixture"][0]["state"]["terms"][0]
    assert len(comp["amplitude"]) == 2
    back = ensemble_from_json(data["accepted_mixture"])
    assert back.fidelity_to(psi_plus()) == pytest.approx(1 / 3)


def test_link_sampled_mode(tmp_path):
    out = tmp_path / "s.json"
    cfg = _write(tmp_path, "c.json", {"link": {"p": 0.1}})
    assert main(["link", "--config", cfg, "--mode", "sampled", "--trials", "2000", "--seed", "3", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["sampled"]["trials"] == 2000
    assert 0 < data["sampled"]["accepted"] < 2000


def test_swap_outputs(tmp_path, capsys):
    out = tmp_path / "swap.json"
    assert main(["swap", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["acceptance_probability"] == pytest.approx(1 / 36)
    assert data["fidelity"] == pytest.approx(1.0)
    cfg = _write(tmp_path, "h.json", {"swap": {"level": "higher"}})
    assert main(["swap", "--config", cfg, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["acceptance_probability"] == pytest.approx(0.5)


def test_swap_output_states_round_trip(tmp_path):
    out = tmp_path / "swap.json"
    main(["swap", "--out", str(out)])
    data = json.loads(out.read_text())
    direct = run_elementary_swap(
        pure(psi_plus("L", "A")), pure(psi_plus("B", "R"))
    )
    for item in data["accepted"]:
        ens = ensemble_from_json(item["ensemble"])
        assert ens.fidelity_to(psi_plus()) >= 1 - 1e-12
    assert direct.fidelity == pytest.approx(1.0)


def test_chain_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cfg = _write(tmp_path, "c.json", {"chain": {"segments": 2, "link_success": 0.3}})
    assert main(["chain", "--config", cfg, "--seed", "42", "--trials", "100", "--out", str(a)]) == 0
    assert main(["chain", "--config", cfg, "--seed", "42", "--trials", "100", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    cfg = _write(tmp_path, "c.json", {"sweep": {"segments": [2, 4]}, "chain": {"link_success": 0.5}, "trials": 20})
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",")[:4] == ["p", "transmittance", "segments", "noise_strength"]
    assert len(lines) == 3


def test_missing_config(capsys):
    assert main(["chain", "--config", "/nonexistent/run.json"]) == 2
    assert "not found" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg, key",
    [
        ({"link": {"pp": 0.1}}, "pp"),
        ({"bogus": 1}, "bogus"),
        ({"link": {"p": 2}}, "link/p"),
        ({"chain": {"segments": 6}}, "segments"),
        ({"link": {"p": 0.3}}, "link"),
        ({"link": {"detectors": {"kind": "ccd"}}}, "link/detectors/kind"),
    ],
)
def test_bad_config_names_key(tmp_path, capsys, cfg, key):
    path = _write(tmp_path, "bad.json", cfg)
    assert main(["chain", "--config", path, "--trials", "5"]) == 2
    assert key in capsys.readouterr().err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "x.json"
    path.write_text("{not json")
    assert main(["link", "--config", str(path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_bad_flag_values(capsys):
    assert main(["chain", "--trials", "0"]) == 2
