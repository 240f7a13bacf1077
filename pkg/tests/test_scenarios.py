import math

import numpy as np
import pytest

from conftest import elastic
from vselbow.errors import ConfigError, EmgFormatError
from vselbow.io import provenance, read_table, write_trajectory
from vselbow.presets import default_gains, default_plant, resolve_preset
from vselbow.scenarios import (
    KINDS,
    ScenarioSpec,
    bundled_emg_path,
    default_spec,
    demo_emg,
    format_emg_csv,
    impact_posture,
    impact_trial,
    interaction_estimate,
    obstacle_trial,
    oscillation_lifetime,
    payload_trial,
    read_emg_csv,
    run_emg_replay,
    run_obstacle,
    run_payload_hold,
    run_scenario,
    segment_intents,
)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ScenarioSpec("juggle", "AA")
    with pytest.raises(ConfigError) as e:
        ScenarioSpec("impact", "AA", horizon=1.0, events=((2.0, "impulse"),))
    assert e.value.path == "events/0"
    spec = default_spec("impact").with_(params={"impulse_deg_s": -50.0})
    assert spec.params["mean_deflection_deg"] == 6.0  # merged, not replaced
    with pytest.raises(ConfigError):
        spec.event_time("ramp_start")
    with pytest.raises(ConfigError):
        default_spec("juggle")


def test_lifetime_of_damped_sinusoid():
    t = np.arange(0, 4, 1e-3)
    for tau in (0.3, 0.7):
        x = 0.2 * np.exp(-t / tau) * np.cos(2 * np.pi * 6 * t)
        assert oscillation_lifetime(t, x) == pytest.approx(tau, rel=0.02)
    assert oscillation_lifetime(t, np.zeros_like(t)) is None


def _impact(preset, impulse, horizon=1.5):
    cfg = default_plant("D2")
    soft = resolve_preset("soft", cfg.transmission.theta_s_range)
    tp = impact_posture(cfg, soft, math.radians(6.0))
    ts = resolve_preset(preset, cfg.transmission.theta_s_range)
    return impact_trial(cfg, default_gains("D2"), tp, ts, 0.5, impulse, horizon)


@pytest.mark.parametrize("impulse_deg_s", [-40.0, -80.0, -141.0, -200.0, 120.0])
def test_stiff_joint_deflects_less_under_every_impulse(impulse_deg_s):
    dv = math.radians(impulse_deg_s)
    peaks = {}
    for preset in ("soft", "stiff"):
        d = _impact(preset, dv).column("delta_rad")
        base = d[0]
        peaks[preset] = np.max(np.abs(d - base))
    assert peaks["stiff"] < peaks["soft"]


def test_zero_impulse_leaves_joint_at_rest():
    d = _impact("soft", 0.0).column("delta_rad")
    assert np.ptp(d) < 1e-12


def test_obstacle_peak_torque_grows_with_preset():
    # overshoot small enough that no preset reaches a motor's torque limit
    spec = default_spec("obstacle").with_(presets=tuple(f"S{i}" for i in range(1, 10)),
                                          params={"overshoot_deg": 8.0})
    res = run_obstacle(spec)
    peaks = [abs(res.metrics[f"S{i}"]["peak_tau_hat_Nm"]) for i in range(1, 10)]
    assert np.all(np.diff(peaks) >= -1e-9)
    assert peaks[-1] > 5 * peaks[3] > 0


def test_unreachable_obstacle_is_a_config_error():
    spec = default_spec("obstacle").with_(params={"overshoot_deg": -5.0})
    with pytest.raises(ConfigError) as e:
        run_obstacle(spec)
    assert e.value.path == "params/overshoot_deg"


def test_no_contact_means_zero_estimate():
    cfg = default_plant("AA")
    surf = elastic("AA").surface
    ts = resolve_preset("stiff", cfg.transmission.theta_s_range)
    _, est, tc, contact = obstacle_trial(cfg, default_gains("AA"), surf, ts, math.radians(20), math.radians(60),
                                         math.radians(50), math.radians(60), 0.2, 1.0)
    assert not contact.any()
    assert np.all(est == 0.0) and np.all(tc == 0.0)


def test_estimate_recomputes_bitwise_from_logged_csv(tmp_path):
    cfg = default_plant("AA")
    surf = elastic("AA").surface
    ts = resolve_preset("soft", cfg.transmission.theta_s_range)
    obs = math.radians(60)
    traj, est, _, contact = obstacle_trial(cfg, default_gains("AA"), surf, ts, math.radians(20), obs,
                                           math.radians(93.5), math.radians(60), 0.2, 1.5)
    assert contact.any()
    path = write_trajectory(tmp_path / "o.csv", traj, provenance({}))
    columns, rows = read_table(path)
    a = np.array(rows)
    col = {c: a[:, i] for i, c in enumerate(columns)}
    gc = cfg.gravity * (cfg.payload.m_L * cfg.payload.L_L + cfg.segment.m_F * cfg.segment.l_F)
    again = interaction_estimate(surf, col["theta_s_rad"], col["delta_rad"], col["theta_o_rad"], gc)
    again = np.where(np.abs(col["theta_o_rad"] - obs) < 1e-12, again, 0.0)
    assert np.array_equal(again, est)


def test_empty_payload_is_held(layout):
    spec = default_spec("payload").with_(layout=layout, params={"mass": 0.0}, horizon=1.5)
    res = run_payload_hold(spec)
    assert res.metrics["soft"]["held"] and res.metrics["stiff"]["held"]


def test_payload_drop_threshold_override():
    cfg = default_plant("D2")
    ts = resolve_preset("stiff", cfg.transmission.theta_s_range)
    _, dropped, limit = payload_trial(cfg, default_gains("D2"), ts, math.radians(90), 2.0, 0.142, 0.0, 1.0,
                                      threshold=math.radians(1.0))
    assert limit == math.radians(1.0) and dropped is not None


# -- EMG ---------------------------------------------------------------------


def _write(tmp_path, text):
    p = tmp_path / "emg.csv"
    p.write_text(text)
    return p


@pytest.mark.parametrize("body, line", [
    ("a, b, c\n0, 0, 0\n", 1),
    ("t_s, biceps, triceps\n0, 0, 0\n0.01, x, 0\n", 3),
    ("t_s, biceps, triceps\n0, 0, 0\n0.01, 0.1\n", 3),
    ("t_s, biceps, triceps\n# note\n0, 0, 0\n0, 0.1, 0\n", 4),
    ("t_s, biceps, triceps\n0, 0, 0\n0.01, 1.5, 0\n", 3),
    ("t_s, biceps, triceps\n0, nan, 0\n", 2),
])
def test_emg_format_errors_carry_line_numbers(tmp_path, body, line):
    p = _write(tmp_path, body)
    with pytest.raises(EmgFormatError) as e:
        read_emg_csv(p)
    assert e.value.line == line
    assert f"{p}:{line}:" in str(e.value)


def test_emg_empty_and_missing_files(tmp_path):
    with pytest.raises(EmgFormatError):
        read_emg_csv(_write(tmp_path, ""))
    with pytest.raises(EmgFormatError):
        read_emg_csv(_write(tmp_path, "t_s, biceps, triceps\n"))
    with pytest.raises(EmgFormatError):
        read_emg_csv(tmp_path / "nope.csv")


def test_silent_emg_produces_no_events(tmp_path):
    t = np.arange(0, 2.0, 0.01)
    p = _write(tmp_path, format_emg_csv(t, 0 * t, 0 * t))
    res = run_emg_replay(default_spec("emg_replay"), emg_file=p)
    assert res.metrics["events"] == []
    assert not res.checks["label_sequence"]


def test_bundled_emg_matches_generator():
    assert bundled_emg_path().read_text() == format_emg_csv(*demo_emg())
    t, a_b, a_t = read_emg_csv(bundled_emg_path())
    assert t.size == 701 and t[-1] == pytest.approx(7.0)


def test_segment_intents_merges_and_drops_blips():
    hist = [(k * 0.005, 0.5, 0.0, False, 0, 0) for k in range(40)]
    hist += [(0.2 + k * 0.005, 0.0, 0.0, False, 0, 0) for k in range(5)]  # short rest
    hist += [(0.225 + k * 0.005, 0.5, 0.0, False, 0, 0) for k in range(40)]
    hist += [(0.425 + k * 0.005, -0.5, 0.0, False, 0, 0) for k in range(3)]  # blip
    ev = segment_intents(hist, 0.1)
    assert [e["label"] for e in ev] == ["flex"]
    assert ev[0]["k0"] == 0 and ev[0]["k1"] == 84


def test_registry_covers_all_kinds():
    for kind in KINDS:
        assert default_spec(kind).kind == kind
    res = run_scenario(default_spec("payload").with_(presets=("stiff",), horizon=0.5))
    assert set(res.checks) == {"stiff_held", "stiff_steady"}
    assert res.to_dict()["scenario"] == "payload"
