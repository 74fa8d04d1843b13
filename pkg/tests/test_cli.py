import csv
import json

import pytest

from superbath.cli import ConfigError, main, validate_config

BASE = {"preset": "qubit-z", "T": 0.0, "g": 0.5, "sigma": 10.0, "M": 200, "K": 7, "L_max": 4, "seed": 3}


def write_config(tmp_path, **over):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**BASE, **over}))
    return str(p)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_run_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path), "--out", str(out)]) == 0
    for name in ("run.json", "energy_trace.csv", "params_history.csv", "checkpoint.json"):
        assert (out / name).exists()
    doc = json.loads((out / "run.json").read_text())
    assert doc["record"]["E_min_history"][-1] == pytest.approx(-1.0, abs=1e-9)
    lines = (out / "energy_trace.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash: ") and lines[1] == "# seed: 3"
    assert "E_min" in capsys.readouterr().out


def test_run_is_reproducible(tmp_path):
    cfg = write_config(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", cfg, "--out", str(a)]) == 0
    assert main(["run", "--config", cfg, "--out", str(b)]) == 0
    for name in ("energy_trace.csv", "params_history.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_resume_matches_fresh_run(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    first = (out / "energy_trace.csv").read_bytes()
    assert main(["run", "--config", cfg, "--out", str(out), "--resume"]) == 0
    assert (out / "energy_trace.csv").read_bytes() == first


def test_resume_rejects_other_config(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", write_config(tmp_path), "--out", str(out)]) == 0
    assert main(["run", "--config", write_config(tmp_path, seed=4), "--out", str(out), "--resume"]) == 1
    assert "different configuration" in capsys.readouterr().err


def test_output_dir_from_environment(tmp_path, monkeypatch):
    env_dir = tmp_path / "env"
    monkeypatch.setenv("SUPERBATH_OUTPUT_DIR", str(env_dir))
    assert main(["run", "--config", write_config(tmp_path, L_max=1), "--out", str(tmp_path / "cli")]) == 0
    assert (env_dir / "run.json").exists()
    assert not (tmp_path / "cli").exists()


@pytest.mark.parametrize("field,value", [
    ("density_family", "lorentzian"),
    ("operators", "bosons"),
    ("g", -1.0),
    ("K", 0),
    ("preset", "nope"),
    ("M", "many"),
])
def test_invalid_config_names_field(tmp_path, capsys, field, value):
    assert main(["run", "--config", write_config(tmp_path, **{field: value}), "--out", str(tmp_path)]) == 1
    assert f"config field '{field}'" in capsys.readouterr().err


def test_unknown_key_and_missing_file(tmp_path, capsys):
    assert main(["run", "--config", write_config(tmp_path, colour="red")]) == 1
    assert "'colour'" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    with pytest.raises(ConfigError):
        validate_config({"preset": "qubit-z", "density_family": "tabulated"})


def test_unknown_suite_exits_one():
    assert main(["verify", "no-such-suite"]) == 1


def test_deterministic_suite_rejects_seed(capsys):
    assert main(["verify", "kms", "--seed", "1"]) == 1
    assert "config field 'seed'" in capsys.readouterr().err


def test_verify_kms_report(tmp_path):
    path = tmp_path / "kms.json"
    assert main(["verify", "kms", "--out", str(path)]) == 0
    rep = json.loads(path.read_text())
    assert rep["suite"] == "kms" and rep["passed"] and rep["n_failed"] == 0
    assert {"config_hash", "seed", "checks", "seconds"} <= set(rep)


def test_sweep(tmp_path):
    out = tmp_path / "sw"
    cfg = write_config(tmp_path, L_max=2)
    assert main(["sweep", "--config", cfg, "--param", "seed", "--values", "1,2", "--out", str(out)]) == 0
    rows = read_rows(out / "sweep.csv")
    assert rows[0][0] == "seed" and [r[0] for r in rows[1:]] == ["1", "2"]
    assert main(["sweep", "--config", cfg, "--param", "preset", "--values", "a", "--out", str(out)]) == 1
    assert main(["sweep", "--config", cfg, "--param", "g", "--values", "x", "--out", str(out)]) == 1


def test_nuclear_command(tmp_path, capsys):
    table = tmp_path / "iso.csv"
    table.write_text("Z,N,E_gamma_keV,half_life_s,label\n73,107,75.3,1.18e22,Ta-180m\n72,106,2446,9.8e8,Hf-178m2\n")
    out = tmp_path / "nuc"
    assert main(["nuclear", str(table), str(out)]) == 0
    rows = read_rows(out / "powers.csv")
    assert rows[0][:3] == ["Z", "N", "A"] and len(rows) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("Z,N,E_gamma_keV,half_life_s,label\n73,107,75.3,0,x\n")
    assert main(["nuclear", str(bad), str(out)]) == 1
    assert "line 2" in capsys.readouterr().err
