import io
import json

import pandas as pd
import pytest

from wclab.cli.args import COMMANDS
from wclab.cli.config import ExperimentConfig
from wclab.cli.main import main
from wclab.config.settings import CONFIGS_PATH


def _json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_constants_report(capsys):
    assert main(["constants", "--d", "2", "--delta", "0.01", "--T", "4100", "--quiet"]) == 0
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["admissible"] is False
    assert report["h"] == 0.5
    assert "violated:" in captured.err


def test_validate_only(capsys):
    assert main(["constants", "--d", "2", "--delta", "0.01", "--T", "4100", "--strategy", "validate-only"]) == 0
    assert _json(capsys)["status"] == "inadmissible"


def test_alternate_search(capsys):
    assert main(["constants", "--d", "2", "--strategy", "alternate"]) == 0
    pair = _json(capsys)
    assert pair["status"] == "converged"
    assert pair["report"]["admissible"] is True


def test_constants_scan(capsys):
    args = ["constants", "--d", "2", "--scan-deltas", "1e-13", "0.01", "--scan-temperatures", "2e5", "--emit", "csv"]
    assert main(args) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "delta,T,h,M,C_P,admissible"
    assert len(lines) == 3


def test_config_with_flag_override(tmp_path, capsys):
    path = tmp_path / "constants.json"
    path.write_text(json.dumps({"command": "constants", "params": {"d": 2, "delta": 0.01, "T": 4100}}))
    assert main(["constants", "--config", str(path), "--delta", "1e-13", "--T", "2e5"]) == 0
    report = _json(capsys)
    assert (report["delta"], report["T"]) == (1e-13, 2e5)
    assert report["admissible"] is True


@pytest.mark.parametrize(
    "content",
    [
        "{not json",
        json.dumps({"command": "kappa", "params": {}}),
        json.dumps({"command": "constants", "params": {"bogus": 1}}),
        json.dumps({"command": "constants", "params": {"delta": "small"}}),
        json.dumps({"command": "constants", "extra": True}),
    ],
)
def test_bad_configs_are_usage_errors(tmp_path, capsys, content):
    path = tmp_path / "config.json"
    path.write_text(content)
    assert main(["constants", "--config", str(path)]) == 1
    assert "Error:" in capsys.readouterr().err


def test_inadmissible_verification_fails(capsys):
    assert main(["verify", "rho-onestep", "--d", "2", "--delta", "0.01", "--T", "4100", "--quiet"]) == 2
    assert "violated" in capsys.readouterr().err


def test_kappa_profile_artifacts(tmp_path):
    args = ["kappa", "profile", "--d", "2", "--n-radii", "50", "--emit", "both", "--output-dir", str(tmp_path)]
    assert main(args) == 0
    summary = json.loads((tmp_path / "kappa.json").read_text())
    assert summary["r_star"] == pytest.approx(405.2)
    frame = pd.read_csv(tmp_path / "kappa.csv")
    assert list(frame.columns) == ["radius", "kappa", "grad_norm"]
    assert len(frame) == 50
    meta = json.loads((tmp_path / "kappa.meta.json").read_text())
    assert meta["artifacts"] == ["kappa.json", "kappa.csv"]


def test_kappa_eval(capsys):
    assert main(["kappa", "eval", "--d", "2", "--points", "0", "0", "3", "4", "--emit", "csv"]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert frame["radius"].tolist() == [0.0, 5.0]
    assert frame["kappa"][0] == pytest.approx(4862.4)


def test_tail_bound(capsys):
    args = ["bounds", "tail", "--n", "100", "--u", "0.1", "--theta", "0.05", "--C", "0.01", "--C0", "0.25", "--M", "2"]
    assert main(args) == 0
    assert _json(capsys)["bound"] == pytest.approx(0.8828, abs=1e-4)


def test_supplied_rates_skip_the_drift_setup(monkeypatch, capsys):
    def no_setup(args):
        raise AssertionError("drift setup built although theta and M were given")

    monkeypatch.setattr("wclab.cli.commands.build_setup", no_setup)
    args = ["bounds", "tail", "--n", "100", "--u", "0.1", "--theta", "0.05", "--C", "0.01", "--C0", "0.25", "--M", "2"]
    assert main(args) == 0
    assert _json(capsys)["bound"] == pytest.approx(0.8828, abs=1e-4)
    assert main(["bounds", "bias", "--n", "1000", "--theta", "0.005", "--M", "2", "--w1", "1"]) == 0
    assert _json(capsys)["bias"]["total"] is None


def test_kappa_conditions_without_drift_use_the_driftless_gate(capsys):
    base = ["verify", "kappa-conditions", "--d", "2", "--delta", "0.5", "--T", "1", "--quiet"]
    assert main(base) == 2
    assert "T_1, T_2" in capsys.readouterr().err
    assert main(base + ["--drift-free"]) == 2
    err = capsys.readouterr().err
    assert "delta_4" in err and "T_1" not in err


def test_confidence_interval(capsys):
    args = ["bounds", "ci", "--t", "10", "--h", "0.5", "--T", "1", "--C0", "0", "--M", "1", "--alpha", "0.05"]
    assert main(args) == 0
    assert _json(capsys)["interval"]["half_width"] == pytest.approx(1.71788, rel=1e-5)


def test_entropy_gate_violation_fails(capsys):
    assert main(["bounds", "entropy", "--n", "10", "--delta", "0.01"]) == 2
    assert "exp" in capsys.readouterr().err


def test_simulation_does_not_depend_on_threads(tmp_path):
    base = ["simulate", "ensemble", "--d", "2", "--replicas", "100", "--steps", "20", "--init-std", "1.0"]
    base += ["--emit", "csv", "--quiet", "--seed", "3"]
    for threads in ("1", "3"):
        assert main(base + ["--threads", threads, "--output-dir", str(tmp_path / threads)]) == 0
    first = (tmp_path / "1" / "simulate.csv").read_bytes()
    assert first == (tmp_path / "3" / "simulate.csv").read_bytes()
    assert first.startswith(b"step,replica,x0,x1")


def test_coupled_simulation(capsys):
    assert main(["simulate", "coupled", "--steps", "5", "--x0", "0", "--y0", "1", "--T", "1e-9", "--emit", "csv"]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert frame["distance"].iloc[-1] == pytest.approx(0.99**5)


def test_exact_transport_between_csv_clouds(tmp_path, capsys):
    pd.DataFrame({"x0": [0.0, 1.0]}).to_csv(tmp_path / "mu.csv", index=False)
    pd.DataFrame({"x0": [3.0, 2.0]}).to_csv(tmp_path / "nu.csv", index=False)
    assert main(["ot", "--mu", str(tmp_path / "mu.csv"), "--nu", str(tmp_path / "nu.csv")]) == 0
    assert _json(capsys)["distance"] == pytest.approx(2.0)


def test_gradient_commutation_passes():
    args = ["verify", "grad-commute", "--k", "3", "--x", "0.5", "--estimator", "quadrature", "--quiet"]
    assert main(args) == 0


def test_help_and_unknown_commands(capsys):
    assert main(["--help"]) == 0
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["constants", "--help"]) == 0
    assert main(["constants", "--delta", "abc"]) == 1


@pytest.mark.parametrize("path", sorted(CONFIGS_PATH.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_are_valid(path):
    config = ExperimentConfig.load(path)
    args = config.defaults()
    assert isinstance(args, COMMANDS[config.command])
