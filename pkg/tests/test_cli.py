import csv
import io
import json
import os

import pytest

from cmera.cli import EXIT_CONFIG, EXIT_OK, atomic_write, load_config, main
from cmera.errors import ConfigError


def run_cli(tmp_path, *args):
    return main(["--output", str(tmp_path), *args])


def read_csv(path):
    return list(csv.reader(io.StringIO(path.read_text())))


def manifest(tmp_path, command):
    return json.loads((tmp_path / f"manifest_{command}.json").read_text())


def test_profile(tmp_path):
    assert run_cli(tmp_path, "profile", "--k-count", "20", "--ode-check") == EXIT_OK
    rows = read_csv(tmp_path / "alpha.csv")
    assert rows[0] == ["k", "alpha", "local_error"]
    assert len(rows) == 21
    assert (tmp_path / "alpha_ode.csv").exists()
    report = json.loads((tmp_path / "profile_report.json").read_text())
    assert report
    m = manifest(tmp_path, "profile")
    assert m["status"] == "ok" and m["cache"] == "miss"
    assert all(not f["stale"] for f in m["files"])


def test_profile_sharp_variant(tmp_path):
    assert run_cli(tmp_path, "profile", "--variant", "sharp", "--k-count", "10") == EXIT_OK
    rows = read_csv(tmp_path / "alpha.csv")[1:]
    for k, a, _, _ in rows:
        assert float(a) == pytest.approx(min(float(k), 1.0))


def test_kernel(tmp_path):
    assert run_cli(tmp_path, "kernel", "--kind", "both", "--x-count", "12", "--x-max", "6") == EXIT_OK
    rows = read_csv(tmp_path / "kernel_mu_phi.csv")
    assert rows[0] == ["x", "lambda_x", "mu_singular", "mu_regular", "mu_total", "err", "sign"]
    assert (tmp_path / "kernel_mu_pi.csv").exists()
    assert json.loads((tmp_path / "kernel_summary.json").read_text())


def test_correlators(tmp_path):
    assert run_cli(tmp_path, "correlators", "--x-count", "5") == EXIT_OK
    for name in ("dphi_dphi", "mixed_dphi_dbar", "TT", "phi_phi_subtracted"):
        rows = read_csv(tmp_path / f"correlator_{name}.csv")
        assert rows[0] == ["separation", "value", "error"] and len(rows) == 6


def test_conformal_data(tmp_path):
    assert run_cli(tmp_path, "conformal-data") == EXIT_OK
    doc = json.loads((tmp_path / "conformal_data.json").read_text())
    assert abs(doc["central_charge"]["value"] - 1) < 0.02


def test_generators(tmp_path):
    assert run_cli(tmp_path, "generators", "--n-levels", "3") == EXIT_OK
    algebra = json.loads((tmp_path / "algebra.json").read_text())
    assert len(algebra) == 6 and all(r["pass"] for r in algebra)
    rows = read_csv(tmp_path / "ns_spectrum.csv")
    assert len(rows) == 4


def test_flow_zero_scale_is_constant(tmp_path):
    assert run_cli(tmp_path, "--lambda", "2", "flow", "--s-ir", "0") == EXIT_OK
    rows = read_csv(tmp_path / "flow_profile.csv")
    assert rows[0] == ["k", "beta"]
    assert {r[1] for r in rows[1:]} == {"2.0"}


def test_json_format(tmp_path):
    assert run_cli(tmp_path, "--format", "json", "flow", "--s-ir", "-0.5") == EXIT_OK
    doc = json.loads((tmp_path / "flow_profile.json").read_text())
    assert doc["columns"] == ["k", "beta"]


def test_bad_config_lists_all_violations(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[general]\nlambda = -1\n[kernel]\nx_count = 0\n[nonsense]\na = 1\n")
    code = main(["--config", str(ini), "--output", str(tmp_path / "o"), "kernel"])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "lambda" in err and "x_count" in err and "nonsense" in err


def test_bad_flag_value(tmp_path):
    assert run_cli(tmp_path, "--lambda", "abc", "flow") == EXIT_CONFIG


def test_precedence(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[general]\nlambda = 3\n[flow]\ns_ir = -2\n")
    cfg = load_config(str(ini), {"lam": "5"})
    assert cfg.lam == 5.0 and cfg.s_ir == -2.0
    assert load_config(None, {}).lam == 1.0
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"), {})


def test_deterministic_and_cached(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(a, "--no-cache", "flow", "--s-ir", "-1") == EXIT_OK
    assert run_cli(b, "--no-cache", "flow", "--s-ir", "-1") == EXIT_OK
    first = (a / "flow_trajectory.csv").read_bytes()
    assert first == (b / "flow_trajectory.csv").read_bytes()
    m1 = (a / "manifest_flow.json").read_bytes()
    assert run_cli(a, "--no-cache", "flow", "--s-ir", "-1") == EXIT_OK
    assert (a / "manifest_flow.json").read_bytes() == m1
    assert run_cli(a, "flow", "--s-ir", "-1") == EXIT_OK
    assert manifest(a, "flow")["cache"] == "hit"
    assert (a / "flow_trajectory.csv").read_bytes() == first


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "x" / "f.txt"
    atomic_write(target, "hello")
    atomic_write(target, "world")
    assert target.read_text() == "world"
    assert [p for p in os.listdir(target.parent) if p.startswith(".tmp-")] == []


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out
