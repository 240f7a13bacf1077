import json
import math
import os
import stat

import pytest

from vselbow.cli import EXIT_CONFIG, EXIT_FAULT, EXIT_METRIC, EXIT_OK, main
from vselbow.config import build_plant, build_scenario, load_config
from vselbow.errors import ConfigError
from vselbow.io import atomic_write, config_hash, provenance, read_table

QUICK = {"characterize": {"period_s": 10.0, "repetitions": 1, "presets": 5}}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(tmp_path, *argv, out="out"):
    return main([*argv, "--out", str(tmp_path / out)])


# -- config -------------------------------------------------------------------


def test_defaults_validate():
    doc = load_config()
    assert doc["layout"] == "aa" and doc["simulate"]["target_deg"] == 120.0


def test_unknown_key_names_its_path(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(write_config(tmp_path, {"plant": {"gravty": 9.8}}))
    assert e.value.path == "plant"
    with pytest.raises(ConfigError) as e:
        load_config(write_config(tmp_path, {"simulate": {"horizon_s": -1}}))
    assert e.value.path == "simulate/horizon_s"


def test_bad_json_and_missing_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ConfigError):
        load_config(str(p))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "none.json"))


def test_build_plant_applies_overrides():
    doc = load_config(overrides={"layout": "d2", "plant": {"gravity": 0.0, "obstacle_deg": 45.0,
                                                           "payload": {"mass_kg": 1.0}}})
    cfg = build_plant(doc)
    assert cfg.layout.kind == "D2" and cfg.gravity == 0.0
    assert cfg.contact.theta_obs == pytest.approx(math.radians(45))
    assert cfg.payload.m_L == 1.0


def test_scenario_overrides_are_checked():
    doc = load_config(overrides={"scenario": {"params": {"mass": 1.0}, "horizon_s": 2.0}})
    spec = build_scenario(doc, "payload")
    assert spec.params["mass"] == 1.0 and spec.params["lever"] == 0.142 and spec.horizon == 2.0
    doc = load_config(overrides={"scenario": {"params": {"weight": 1.0}}})
    with pytest.raises(ConfigError) as e:
        build_scenario(doc, "payload")
    assert e.value.path == "scenario/params/weight"


def test_hash_ignores_execution_keys():
    a = load_config(overrides={"output_dir": "x", "characterize": {"parallel": 4}})
    b = load_config(overrides={"output_dir": "y"})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(load_config(overrides={"seed": 1}))


# -- io -----------------------------------------------------------------------


def test_atomic_write_replaces_and_respects_umask(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    atomic_write(p, "one")
    atomic_write(p, "two")
    assert p.read_text() == "two"
    assert [x.name for x in p.parent.iterdir()] == ["f.txt"]
    mask = os.umask(0)
    os.umask(mask)
    assert stat.S_IMODE(p.stat().st_mode) == 0o666 & ~mask


def test_provenance_fields():
    prov = provenance({"a": 1}, seed=5)
    assert prov["seed"] == 5 and prov["tool"] == "vselbow" and len(prov["config_sha256"]) == 64


# -- commands -----------------------------------------------------------------


def test_simulate_writes_trajectory_and_summary(tmp_path):
    assert run(tmp_path, "simulate", "--seed", "3") == EXIT_OK
    out = tmp_path / "out"
    first = (out / "trajectory.csv").read_text().splitlines()[0]
    assert first.startswith("# vselbow ") and first.endswith("seed=3")
    columns, rows = read_table(out / "trajectory.csv")
    assert len(rows) == 800 and columns[-2:] == ("theta_pc_rad", "halt_flag")
    summary = json.loads((out / "simulate.json").read_text())
    assert summary["final_theta_o_deg"] == pytest.approx(120.0, abs=1.0)
    assert summary["provenance"]["seed"] == 3


def test_zero_horizon_gives_header_only_log(tmp_path):
    cfg = write_config(tmp_path, {"simulate": {"horizon_s": 0.0}})
    assert run(tmp_path, "simulate", "--config", cfg) == EXIT_OK
    lines = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[0].startswith("#") and lines[1].startswith("t_s")


def test_open_loop_hold(tmp_path):
    cfg = write_config(tmp_path, {"layout": "d2", "simulate": {"mode": "open_loop", "horizon_s": 0.5,
                                                               "start_deg": 40.0}})
    assert run(tmp_path, "simulate", "--config", cfg, "--preset", "S5") == EXIT_OK
    columns, rows = read_table(tmp_path / "out" / "trajectory.csv")
    assert len(rows) == 100 and "theta_pc_rad" not in columns


@pytest.mark.parametrize("argv, code, needle", [
    (["simulate", "--layout", "xx"], EXIT_CONFIG, "layout"),
    (["simulate", "--preset", "S12"], EXIT_CONFIG, "simulate/preset"),
    (["scenario", "juggle"], EXIT_CONFIG, "impact"),
    (["fit", "missing.csv"], EXIT_CONFIG, "samples"),
])
def test_config_errors_exit_2(tmp_path, capsys, argv, code, needle):
    assert run(tmp_path, *argv) == code
    assert needle in capsys.readouterr().err


def test_failing_scenario_exits_4(tmp_path, capsys):
    cfg = write_config(tmp_path, {"scenario": {"thresholds": {"steady_deg": 0.01}, "horizon_s": 1.0}})
    assert run(tmp_path, "scenario", "payload", "--config", cfg) == EXIT_METRIC
    assert "FAIL payload:stiff_steady" in capsys.readouterr().out


def test_protocol_fault_exits_3(tmp_path, capsys):
    # zero impulse: nothing oscillates, so no decay lifetime can be measured
    cfg = write_config(tmp_path, {"scenario": {"params": {"impulse_deg_s": 1e-9}, "horizon_s": 1.0}})
    assert run(tmp_path, "scenario", "impact", "--config", cfg) == EXIT_FAULT
    assert "impact" in capsys.readouterr().err


def test_passing_scenario_writes_outputs(tmp_path):
    assert run(tmp_path, "scenario", "payload") == EXIT_OK
    out = tmp_path / "out"
    doc = json.loads((out / "payload.json").read_text())
    assert doc["passed"] and doc["checks"]["soft_dropped"]
    assert (out / "payload_soft.csv").exists() and (out / "payload_stiff.csv").exists()


def test_characterize_and_fit_round_trip(tmp_path):
    cfg = write_config(tmp_path, {"layout": "d2", **QUICK})
    assert run(tmp_path, "characterize", "--config", cfg) == EXIT_OK
    out = tmp_path / "out"
    for name in ("datasheet.json", "surface.json", "samples.csv", "surface_grid.csv", "speed.csv", "svt.csv"):
        assert (out / name).exists()
    sheet = json.loads((out / "datasheet.json").read_text())
    assert sheet["layout"] == "D2" and sheet["compliance"]["rom"]
    assert main(["fit", str(out / "samples.csv"), "--out", str(tmp_path / "fit")]) == EXIT_OK
    fitted = json.loads((tmp_path / "fit" / "surface.json").read_text())["surface"]
    assert fitted["r2"] > 0.99


def test_parallel_characterization_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"layout": "aa", **QUICK})
    assert run(tmp_path, "characterize", "--config", cfg, out="a") == EXIT_OK
    assert run(tmp_path, "characterize", "--config", cfg, "--parallel", "2", out="b") == EXIT_OK
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert capsys.readouterr().out.startswith("vselbow ")
