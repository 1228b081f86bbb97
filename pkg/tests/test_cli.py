"""CLI contract: subcommands, output files, exit codes, env fallback."""

import json
import shutil
import subprocess
import sys

import pytest

from oamem import cli, config


def small_raw(**edits):
    raw = config.load_raw("fig2_lgplus")
    raw["trials"] = 400
    raw["grid"] = {"n_radial": 64, "n_azimuthal": 32}
    raw["memory"]["n_shells"] = 4
    raw["memory"]["n_z"] = 80
    raw["sampling"] = {"dt_s": 5e-9}
    for dotted, value in edits.items():
        node = raw
        keys = dotted.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = value
    return raw


@pytest.fixture()
def small_cfg_path(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small_raw()))
    return str(path)


def test_validate_builtin_ok(capsys):
    assert cli.main(["validate", "--config", "fig2_lgplus"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("ok: fig2_lgplus")
    assert "hash" in out


def test_validate_rejects_bad_config(tmp_path, capsys):
    bad = small_raw()
    del bad["source"]["waist_m"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert cli.main(["validate", "--config", str(path)]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_validate_surfaces_numerics(tmp_path, capsys):
    # valid config whose step size violates the RK4 rate bound
    raw = small_raw(**{"memory.optical_depth": 60.0, "sampling.dt_s": 1e-8})
    path = tmp_path / "stiff.json"
    path.write_text(json.dumps(raw))
    assert cli.main(["validate", "--config", str(path)]) == cli.EXIT_NUMERICS
    assert "numerics error" in capsys.readouterr().err


def test_unknown_builtin_name_is_config_error(capsys):
    assert cli.main(["validate", "--config", "no_such"]) == cli.EXIT_CONFIG
    assert "built-ins" in capsys.readouterr().err


def test_missing_config_path_is_io_error(tmp_path, capsys):
    missing = str(tmp_path / "nope" / "x.json")
    assert cli.main(["validate", "--config", missing]) == cli.EXIT_IO
    assert "i/o error" in capsys.readouterr().err


def test_run_writes_counts_and_metrics(small_cfg_path, tmp_path, capsys):
    out = tmp_path / "results"
    code = cli.main(["run", "--config", small_cfg_path, "--trials", "300",
                     "--out", str(out)])
    assert code == cli.EXIT_OK
    stdout = capsys.readouterr().out
    assert "efficiency" in stdout and "imbalance" in stdout
    csvs = sorted(p.name for p in out.glob("*.csv"))
    assert csvs == ["fig2_lgplus_memory_counts.csv", "fig2_lgplus_reference_counts.csv"]
    meta = json.loads((out / "fig2_lgplus_metrics.json").read_text())
    assert meta["trials"] == 300
    assert meta["seed"] == small_raw()["seed"]
    assert meta["extras"]["matched_channel"] == "plus"


def test_run_honors_env_out_dir(small_cfg_path, tmp_path, monkeypatch, capsys):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("OAMEM_OUT_DIR", str(env_dir))
    assert cli.main(["run", "--config", small_cfg_path, "--trials", "200"]) == cli.EXIT_OK
    capsys.readouterr()
    assert (env_dir / "fig2_lgplus_metrics.json").exists()


def test_run_twice_is_byte_identical(small_cfg_path, tmp_path, capsys):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert cli.main(["run", "--config", small_cfg_path, "--trials", "300",
                         "--out", str(out), "--workers", "2"]) == cli.EXIT_OK
    capsys.readouterr()
    for name in ("fig2_lgplus_memory_counts.csv", "fig2_lgplus_reference_counts.csv",
                 "fig2_lgplus_metrics.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_run_out_colliding_with_file_is_io_error(small_cfg_path, tmp_path, capsys):
    blocker = tmp_path / "blocked"
    blocker.write_text("")
    code = cli.main(["run", "--config", small_cfg_path, "--trials", "100",
                     "--out", str(blocker)])
    assert code == cli.EXIT_IO
    assert "i/o error" in capsys.readouterr().err


def test_sweep_writes_points_in_order(small_cfg_path, tmp_path, capsys):
    out = tmp_path / "sweep"
    code = cli.main([
        "sweep", "--config", small_cfg_path, "--trials", "200",
        "--param", "detector.quantum_efficiency", "--values", "0.4,0.5",
        "--out", str(out),
    ])
    assert code == cli.EXIT_OK
    stdout = capsys.readouterr().out
    assert "detector.quantum_efficiency=0.4" in stdout
    payload = json.loads((out / "fig2_lgplus_sweep.json").read_text())
    assert payload["param"] == "detector.quantum_efficiency"
    assert [pt["value"] for pt in payload["points"]] == [0.4, 0.5]
    assert payload["trials"] == 200
    for pt in payload["points"]:
        assert "efficiency" in pt and "imbalance" in pt


def test_sweep_rejects_bad_param_before_running(small_cfg_path, capsys):
    code = cli.main(["sweep", "--config", small_cfg_path,
                     "--param", "memory.bogus", "--values", "1,2"])
    assert code == cli.EXIT_CONFIG
    assert "does not exist" in capsys.readouterr().err


def test_sweep_rejects_non_json_values(small_cfg_path, capsys):
    code = cli.main(["sweep", "--config", small_cfg_path,
                     "--param", "detector.quantum_efficiency",
                     "--values", "zero"])
    assert code == cli.EXIT_CONFIG
    capsys.readouterr()
    code = cli.main(["sweep", "--config", small_cfg_path,
                     "--param", "detector.quantum_efficiency", "--values", ","])
    assert code == cli.EXIT_CONFIG


def test_decompose_prints_mode_table(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("OAMEM_OUT_DIR", raising=False)
    assert cli.main(["decompose", "--config", "fig2_tem10"]) == cli.EXIT_OK
    stdout = capsys.readouterr().out
    assert "source mode powers" in stdout
    assert "winding totals" in stdout
    out = tmp_path / "modes"
    assert cli.main(["decompose", "--config", "fig2_tem10",
                     "--out", str(out)]) == cli.EXIT_OK
    capsys.readouterr()
    payload = json.loads((out / "fig2_tem10_modes.json").read_text())
    # superposition splits evenly over the two windings
    assert payload["winding_power"]["1"] == pytest.approx(
        payload["winding_power"]["-1"], rel=1e-12)
    assert payload["powers"]["0,1"] == pytest.approx(payload["powers"]["0,-1"],
                                                     rel=1e-12)


def test_module_entry_point(small_cfg_path):
    proc = subprocess.run(
        [sys.executable, "-m", "oamem.cli", "validate", "--config", small_cfg_path],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("ok:")
    script = shutil.which("oamem")
    if script:
        proc = subprocess.run([script, "validate", "--config", small_cfg_path],
                              capture_output=True, text=True)
        assert proc.returncode == 0
