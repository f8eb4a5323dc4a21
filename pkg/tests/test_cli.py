import json

import numpy as np
import pytest

from dirac_isp.cli import csv_header, main
from dirac_isp.config import CHECKS, load_config, parse_config
from dirac_isp.errors import ConfigError
from dirac_isp.examples import generate_example, scalar_v


def write_cfg(tmp_path, cfg_dict, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg_dict))
    return path


def scalar_dict(points=41, **checks):
    d = generate_example("scalar").to_dict()
    d["grid"]["points"] = points
    d["checks"] = {c: checks.get(c, False) for c in CHECKS}
    return d


def read_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1)


def test_csv_header():
    assert csv_header(1) == "x, Re v_11, Im v_11"
    assert csv_header(2).split(", ")[-2:] == ["Re v_22", "Im v_22"]


def test_run_scalar(tmp_path, capsys):
    cfg = write_cfg(tmp_path, scalar_dict(roundtrip=True))
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    data = read_csv(out / "potential.csv")
    assert data.shape == (41, 3)
    np.testing.assert_allclose(data[:, 1], scalar_v(data[:, 0]), rtol=0, atol=1e-8)
    assert np.all(data[:, 2] == 0) or np.abs(data[:, 2]).max() < 1e-12
    rep = json.loads((out / "report.json").read_text())
    assert rep["status"] == "PASS" and rep["checks"]["roundtrip"]["status"] == "PASS"
    assert rep["enabled_checks"] == ["roundtrip"]


def test_run_theta2_zero(tmp_path):
    d = scalar_dict()
    d["theta2"] = [[[0.0, 0.0]]]
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_cfg(tmp_path, d)), "--out", str(out)]) == 0
    assert np.all(read_csv(out / "potential.csv")[:, 1:] == 0)


def test_run_non_unitary_r(tmp_path, capsys):
    d = scalar_dict()
    d["R"] = [[[1.5, 0.0]]]
    code = main(["run", "--config", str(write_cfg(tmp_path, d)), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "NonUnitaryR" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_parse_error_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "n": 1,\n  "p": 1,\n  "beta": [[[0, 1.5]]\n}\n')
    with pytest.raises(ConfigError, match=r"line 5, column 1"):
        load_config(path)
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "line 5" in capsys.readouterr().err


def test_config_errors_name_the_field():
    d = scalar_dict()
    d["theta1"] = [[[2.0]]]
    with pytest.raises(ConfigError, match=r"theta1\[0\]\[0\]"):
        parse_config(d)
    d = scalar_dict()
    d["checks"]["plot"] = True
    with pytest.raises(ConfigError, match="unknown"):
        parse_config(d)


def test_config_round_trip():
    cfg = generate_example("two-delay")
    again = parse_config(json.loads(cfg.dumps()))
    np.testing.assert_array_equal(again.beta, cfg.beta)
    assert again.D == cfg.D and again.enabled_checks() == cfg.enabled_checks()


def test_bad_tolerance_env(tmp_path, monkeypatch, capsys):
    cfg = write_cfg(tmp_path, scalar_dict())
    monkeypatch.setenv("DIRAC_ISP_TOL", "abc")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "DIRAC_ISP_TOL" in capsys.readouterr().err


def test_failed_check_exit_code(tmp_path):
    d = scalar_dict(roundtrip=True)
    d["tolerances"] = {"roundtrip": 1e-30}
    out = tmp_path / "out"
    assert main(["run", "--config", str(write_cfg(tmp_path, d)), "--out", str(out)]) == 1
    rep = json.loads((out / "report.json").read_text())
    assert rep["status"] == "FAIL" and rep["checks"]["roundtrip"]["status"] == "FAIL"


def test_example_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["example", "random-pe", "--seed", "7", "--n", "3", "--p", "2",
                     "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert parse_config(json.loads(a.read_text())).n == 3


def test_run_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, generate_example("two-delay").to_dict())
    d = json.loads(cfg.read_text())
    d["grid"]["points"] = 81
    d["checks"] = {c: False for c in CHECKS}
    cfg.write_text(json.dumps(d))
    for name in ("a", "b"):
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "potential.csv").read_bytes() == \
        (tmp_path / "b" / "potential.csv").read_bytes()


def test_check_override(tmp_path):
    cfg = write_cfg(tmp_path, scalar_dict())
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out),
                 "--check", "roundtrip"]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["enabled_checks"] == ["roundtrip"]
