import json
import shutil
from pathlib import Path

import pytest

from anisodiff.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def quick_config(tmp_path, **over):
    text = (CONFIGS / "quick_2d.cfg").read_text().replace("runs/quick", str(tmp_path / "quick"))
    for k, v in over.items():
        text += f"{k} = {json.dumps(v)}\n"
    path = tmp_path / "quick.cfg"
    path.write_text(text)
    return path


def test_derive_json(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["derive", "--dim", "3", "--alpha", "0.5", "--p", "2.2,2.4,2.6", "--json", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["schema_version"] == 1
    assert rep["lambda_1"] == pytest.approx(5.055452436, rel=1e-9)
    assert "lambda_1" in capsys.readouterr().out


def test_derive_stdout_only(capsys):
    assert main(["derive", "--dim", "2", "--alpha", "1", "--p", "2,2", "--json", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["p_bar"] == 2.0


def test_derive_invalid_exit_1(capsys):
    assert main(["derive", "--dim", "2", "--alpha", "1.5", "--p", "2,2"]) == 1
    assert "alpha" in capsys.readouterr().err
    assert main(["derive", "--dim", "2"]) == 1


def test_derive_from_config():
    assert main(["derive", "--config", str(CONFIGS / "two_d.cfg"), "--json", "-"]) == 0


def test_run_fit_energy_pipeline(tmp_path):
    cfg = quick_config(tmp_path)
    assert main(["run", str(cfg)]) == 0
    summary = json.loads((tmp_path / "quick" / "summary.json").read_text())
    assert summary["schema_version"] == 1 and summary["abort"] is None
    assert summary["final"]["mass_v"] == pytest.approx(summary["initial"]["mass_v"], rel=1e-12)

    fit = tmp_path / "fit.json"
    assert main(["fit", str(tmp_path / "quick" / "series.csv"), "--config", str(cfg), "--window", "0.5,2", "--out", str(fit)]) == 0
    rep = json.loads(fit.read_text())
    assert set(rep["verdicts"]) == {"ultracontractivity", "support_law", "rectangle"}

    en = tmp_path / "energy.json"
    assert main(["energy", str(tmp_path / "quick" / "snapshots"), str(CONFIGS / "quick_2d_probes.json"), "--out", str(en)]) == 0
    reports = json.loads(en.read_text())
    assert len(reports) == 4
    assert all(r["schema_version"] == 1 for r in reports)
    assert reports[-1]["vacuous"] and reports[-1]["lhs_gradient"] == 0.0
    assert all(r["ratio"] is not None for r in reports[:3])


def test_run_domain_exhausted_exit_3(tmp_path):
    cfg = quick_config(tmp_path)
    text = cfg.read_text().replace("solver.t_end = 2.0", "solver.t_end = 500.0").replace("snapshots.times", "# snapshots.times")
    cfg.write_text(text)
    assert main(["run", str(cfg)]) == 3


def test_run_stiffness_exit_2(tmp_path):
    assert main(["run", str(quick_config(tmp_path, **{"solver.dt_min": 1.0}))]) == 2


def test_run_bad_config_exit_1(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("dim = 2\n")
    assert main(["run", str(bad)]) == 1
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1


def test_check_exit_codes(tmp_path):
    assert main(["check", "--trials", "1000", "--out", str(tmp_path / "c.json")]) == 0
    assert json.loads((tmp_path / "c.json").read_text())["passed"]
    assert main(["check", "--trials", "1000", "--expect-fail", "--out", str(tmp_path / "x.json")]) == 0
    with pytest.warns(UserWarning):
        assert main(["check", "--trials", "0", "--out", str(tmp_path / "z.json")]) == 0


def test_oracle_command(tmp_path):
    out = tmp_path / "o.json"
    assert main(["oracle", "heat", "--resolution", "32", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["runs"][0]["cells"] == 32


def test_console_script_installed():
    assert shutil.which("anisodiff") is not None
