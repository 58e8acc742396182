import json
import os
import shutil
import subprocess
import sys

import pytest

from phasefield.cli import DEFAULT_SEED, ConfigError, main, validate_config


def write(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run_cli(tmp_path, sub, cfg, *extra, out="out"):
    path = write(tmp_path, f"{sub}.json", cfg)
    return main([sub, "--config", path, "--out", str(tmp_path / out), *extra])


def test_validate_defaults_and_errors():
    cfg = validate_config({"metric": "euclidean"}, "check-metric")
    assert cfg["seed"] == DEFAULT_SEED == 0x5EED and cfg["schema_version"] == "1"
    with pytest.raises(ConfigError) as exc:
        validate_config({"metric": "euclidean", "bogus": 1}, "check-metric")
    assert exc.value.field == "bogus"
    with pytest.raises(ConfigError) as exc:
        validate_config({"symbol": "x", "window": {}, "sample_spec": {"mid_pts": 3}}, "diag")
    assert exc.value.field == "sample_spec.mid_pts"
    with pytest.raises(ConfigError):
        validate_config({"metric": "euclidean", "seed": -1}, "check-metric")
    with pytest.raises(ConfigError):
        validate_config({"metric": "euclidean", "schema_version": "2"}, "check-metric")


def test_diag_missing_window_exit_2_names_field(tmp_path, capsys):
    code = run_cli(tmp_path, "diag", {"metric": "euclidean", "symbol": "chirp"})
    assert code == 2
    assert "config field 'window'" in capsys.readouterr().err


def test_unknown_key_and_bad_json_exit_2(tmp_path, capsys):
    assert run_cli(tmp_path, "classify", {"symbol": "const1", "bogus": 1}) == 2
    assert "'bogus'" in capsys.readouterr().err
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["norms", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert main(["norms", "--config", str(tmp_path / "missing.json")]) == 2


def test_bad_symbol_and_grid_are_config_errors(tmp_path, capsys):
    assert run_cli(tmp_path, "norms", {"symbol": "sin(x"}) == 2
    assert "'symbol'" in capsys.readouterr().err
    assert run_cli(tmp_path, "windows", {"metric": "euclidean", "window": {"kind": "bump"}, "y_points": 25}) == 2


def test_divergence_exit_3_writes_diagnostics(tmp_path):
    cfg = {"symbol": "1/(x-x)", "window": {"kind": "wigner"}, "sample_spec": {"mid_points": 1}}
    assert run_cli(tmp_path, "diag", cfg) == 3
    rep = json.loads((tmp_path / "out" / "diag.diagnostics.json").read_text())
    assert rep["status"] == "diverged" and "error" in rep["results"]
    assert not (tmp_path / "out" / "diag.json").exists()


def test_gstft_selftest_exit_0(tmp_path):
    assert run_cli(tmp_path, "gstft", {"metric": "euclidean"}, "--selftest") == 0
    rep = json.loads((tmp_path / "out" / "gstft.json").read_text())
    assert rep["results"]["selftest"] is True and rep["status"] == "ok"


def test_selftest_only_for_gstft(tmp_path):
    assert run_cli(tmp_path, "norms", {"symbol": "const1"}, "--selftest") == 2


def test_classify_const1_consistent(tmp_path):
    cfg = {"metric": "euclidean", "symbol": "const1", "sample_spec": {"mid_points": 5}, "equivalence": False}
    assert run_cli(tmp_path, "classify", cfg) == 0
    rep = json.loads((tmp_path / "out" / "classify.json").read_text())
    assert rep["results"]["verdict"] == "consistent_in_class"
    assert rep["library_version"] and len(rep["config_hash"]) == 64


def test_outputs_byte_identical_across_runs_and_workers(tmp_path, monkeypatch):
    cfg = {"metric": "srd:1/4:1/4", "symbol": "sinsin", "window": {"kind": "wigner"},
           "sample_spec": {"mid_points": 3}}
    monkeypatch.delenv("PF_WORKERS", raising=False)
    assert run_cli(tmp_path, "diag", cfg, "--workers", "1", out="a") == 0
    assert run_cli(tmp_path, "diag", cfg, "--workers", "3", out="b") == 0
    monkeypatch.setenv("PF_WORKERS", "2")
    assert run_cli(tmp_path, "diag", cfg, out="c") == 0
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == ["diag.csv", "diag.json", "diag_plot.py"]
    for n in names:
        data = (tmp_path / "a" / n).read_bytes()
        assert (tmp_path / "b" / n).read_bytes() == data
        assert (tmp_path / "c" / n).read_bytes() == data
    assert (tmp_path / "a" / "diag.csv").read_bytes().split(b"\r\n")[0] == b"x,xi,y,eta,mid_x,mid_xi,gdist,modulus"
    monkeypatch.setenv("PF_WORKERS", "many")
    assert run_cli(tmp_path, "diag", cfg, out="d") == 2


def test_seed_changes_weyl_battery(tmp_path):
    cfg = {"symbol": "const1", "battery": {"count": 20}}
    assert run_cli(tmp_path, "weyl", cfg, out="a") == 0
    assert run_cli(tmp_path, "weyl", cfg, "--seed", "7", out="b") == 0
    a = json.loads((tmp_path / "a" / "weyl.json").read_text())
    b = json.loads((tmp_path / "b" / "weyl.json").read_text())
    assert a["seed"] == 0x5EED and b["seed"] == 7
    assert a["results"]["ambiguity_law_max_abs_err"] <= 1e-5
    assert (tmp_path / "a" / "weyl.csv").read_bytes() != (tmp_path / "b" / "weyl.csv").read_bytes()


@pytest.mark.parametrize("sub,cfg", [
    ("check-metric", {"metric": "srd:1/2:1/2", "samples": {"n_points": 128, "n_pairs": 256}}),
    ("windows", {"metric": "euclidean", "window": {"kind": "bump", "r": 1.0}, "seminorm_orders": [0, 1]}),
    ("norms", {"metric": "euclidean", "symbol": "jb_xi", "s_values": [0, 2]}),
    ("gstft", {"metric": "euclidean"}),
])
def test_other_subcommands_write_artifacts(tmp_path, sub, cfg):
    assert run_cli(tmp_path, sub, cfg) == 0
    stem = sub.replace("-", "_")
    rep = json.loads((tmp_path / "out" / f"{stem}.json").read_text())
    assert rep["subcommand"] == sub and rep["schema_version"] == "1"
    assert (tmp_path / "out" / f"{stem}.csv").exists()
    compile((tmp_path / "out" / f"{stem}_plot.py").read_text(), "plot", "exec")


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("pf")
    cmd = [exe] if exe else [sys.executable, "-m", "phasefield.cli"]
    p = write(tmp_path, "c.json", {"symbol": "const1", "battery": {"count": 5}})
    res = subprocess.run(cmd + ["weyl", "--config", p, "--out", str(tmp_path / "o")], capture_output=True)
    assert res.returncode == 0, res.stderr
