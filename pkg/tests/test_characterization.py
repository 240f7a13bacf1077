import json
import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import datasheet, elastic
from vselbow.characterization import (
    ElasticProtocolConfig,
    branch_hysteresis,
    check_requirements,
    exploration_range,
    posture_for_output,
    run_svt_characterization,
    surface_grid,
    svt_from_trace,
)
from vselbow.errors import ProtocolError
from vselbow.plant import GRAVITY, PayloadSpec, SegmentProps
from vselbow.presets import default_plant


def triangle_passes(h, k=10.0, n=50, cycles=3):
    """Linear spring with a constant-width hysteresis band h."""
    up = np.linspace(-1.0, 1.0, n)
    delta, tau, flag = [], [], []
    for _ in range(cycles):
        for t in up:
            tau.append(t), delta.append(t / k + h / 2), flag.append(1)
        for t in up[::-1]:
            tau.append(t), delta.append(t / k - h / 2), flag.append(0)
    return np.array(delta), np.array(tau), np.array(flag)


def test_branch_hysteresis_oracle():
    for h in (0.0, 0.01, 0.05):
        assert branch_hysteresis(*triangle_passes(h)) == pytest.approx(h, abs=1e-12)
    assert branch_hysteresis([], [], []) == 0.0
    d, t, f = triangle_passes(0.02)
    assert branch_hysteresis(d, t, np.ones_like(f)) == 0.0  # one branch only


def test_svt_from_trace_linear_ramp():
    t = np.linspace(0, 2, 2001)
    x = np.clip(t, 0, 1.0) * 3.0
    assert svt_from_trace(t, x, 3.0) == pytest.approx(0.8, abs=1e-9)
    assert svt_from_trace(t, x * 0.5, 3.0) is None


@pytest.mark.parametrize("kp", [5.0, 10.0, 25.0])
def test_svt_first_order_oracle(layout, kp):
    # an unsaturated proportional loop is a first-order lag with tau_c = 1/kp
    cfg = default_plant(layout)
    fast = dict(omega_max=1e4, accel=0.0)
    cfg = cfg.with_(motor1=replace(cfg.motor1, **fast), motor2=replace(cfg.motor2, **fast), sync_saturation=False)
    res = run_svt_characterization(cfg, (kp, kp), horizon=2.0)
    assert res.reached
    assert res.svt == pytest.approx(math.log(9.0) / kp, abs=2 * 0.005)


def test_exploration_range():
    seg = SegmentProps.from_mass(0.9, 0.13, 0.1)
    assert exploration_range(9.7, PayloadSpec(), seg, 0.3) == (0.0, math.radians(120))
    lo, hi = exploration_range(9.7, PayloadSpec(3.0, 0.3), seg, 0.3)
    gc = GRAVITY * (0.9 + 0.9 * 0.065)
    assert lo == 0.0 and gc * math.sin(hi) == pytest.approx(0.7 * 9.7)
    with pytest.raises(ProtocolError):
        exploration_range(0.0, PayloadSpec(3.0, 0.3), seg, 0.3)
    with pytest.raises(ValueError):
        exploration_range(9.7, PayloadSpec(), seg, 1.0)


def test_posture_for_output_is_an_equilibrium(layout):
    cfg = default_plant(layout).with_(payload=PayloadSpec(2.0, 0.3))
    tp = posture_for_output(cfg.surface, 1.0, 1.2, cfg)
    gc = GRAVITY * (2.0 * 0.3 + cfg.segment.m_F * cfg.segment.l_F)
    assert float(cfg.surface.elastic(1.0, 1.2 - tp)) == pytest.approx(-gc * math.sin(1.2), abs=1e-10)


def test_protocol_config_validation():
    with pytest.raises(ValueError):
        ElasticProtocolConfig(period=5.0)
    with pytest.raises(ValueError):
        ElasticProtocolConfig(n_presets=2)


def test_elastic_result_shape(layout):
    res = elastic(layout)
    assert len(res.sweeps) == 9 and all(s.valid for s in res.sweeps)
    assert res.samples.shape[1] == 5
    assert set(np.unique(res.samples[:, 4])) <= {0.0, 1.0}
    assert res.surface.r2 > 0.99
    # deflection shrinks and stiffness grows with preload
    assert res.deflection[-1] < res.deflection[0]
    grid = surface_grid(res.surface, 5, 7)
    assert grid.shape == (35, 4)


def test_requirement_flags(layout):
    report, _ = datasheet(layout)
    flags = report.compliance
    assert flags["rom"] and flags["stiffness_range"] and flags["active_torque"] and flags["passive_load_5kg"]
    # the D2 layout's invariant output speed sits below the 250 deg/s requirement
    assert flags["speed"] == (layout == "AA")
    assert flags["all"] == all(v for k, v in flags.items() if k != "all")
    worse = check_requirements(replace(report, sigma_range=(3.0, 80.0)))
    assert not worse["stiffness_range"] and not worse["all"]
    weak = check_requirements(replace(report, passive_limit=14.0))
    assert not weak["passive_load_5kg"]


def test_report_serializes(layout):
    report, _ = datasheet(layout)
    doc = json.loads(report.to_json(allow_nan=False))
    assert doc["layout"] == layout
    assert len(doc["speed_table"]) == 9
    assert doc["surface"]["degrees"] == {"theta_s": 4, "delta": 5}
