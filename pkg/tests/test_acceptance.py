"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line (printed in the pytest terminal summary)
before asserting.  Run alone with ``pytest tests/test_acceptance.py``.
"""
import math
import sys
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import datasheet, elastic, record
from vselbow import kernel as K
from vselbow.characterization import posture_drift, run_svt_characterization, static_drift
from vselbow.cli import main
from vselbow.control import ControllerConfig, ElbowController, mix_references, run_closed_loop
from vselbow.errors import PassiveOverload
from vselbow.plant import ElbowLayout, PayloadSpec, Simulator
from vselbow.presets import default_gains, default_plant, preset_levels, resolve_preset
from vselbow.scenarios import EMG_LABELS, default_spec, explored_deflection, run_scenario
from vselbow.transmission import PolynomialSurface, fit_polynomial_surface

pytestmark = pytest.mark.acceptance

LAYOUTS = ("AA", "D2")
TICK = 0.005  # high-level control period [s]


def within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def test_criterion_01_identification_fidelity():
    parts, ok = [], True
    for lay in LAYOUTS:
        t0 = time.perf_counter()
        res = elastic(lay, frictionless=True)
        dt = time.perf_counter() - t0
        cfg = default_plant(lay, frictionless=True)
        surf, true = res.surface, cfg.surface
        lo, hi = true.theta_s_range
        worst = 0.0
        # interior grid: 10-90 % of the preload span, half the explored deflection
        for ts in np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 7):
            reach = explored_deflection(res.sweeps, ts)
            for d in np.linspace(-0.5 * reach, 0.5 * reach, 9):
                a = float(true.stiffness(ts, d))
                worst = max(worst, abs(float(surf.stiffness(ts, d)) - a) / a)
        good = surf.r2 >= 0.99 and surf.rmse <= 0.3 and worst <= 0.05 and dt < 20.0
        ok &= good
        parts.append(f"{lay} R2={surf.r2:.5f} RMSE={surf.rmse:.4f} Nm sigma err={worst:.1%} ({dt:.1f} s)")
    record(1, ok, "; ".join(parts))
    assert ok


def test_criterion_02_exact_recovery():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(5):
        raw = rng.uniform(0.5, 2.0, (5, 6)) * rng.choice([-1.0, 1.0], (5, 6))
        dom = ((0.0, 5.5), (-0.8, 0.8))
        truth = PolynomialSurface.from_monomials(raw, dom)
        ts, d = rng.uniform(*dom[0], 400), rng.uniform(*dom[1], 400)
        fit = fit_polynomial_surface(np.column_stack([ts, d, truth.evaluate(ts, d)]))
        worst = max(worst, float(np.max(np.abs(fit.monomial_coefficients() - raw) / np.abs(raw))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 1.0
    record(2, ok, f"max relative coefficient error {worst:.2e} ({dt * 1e3:.0f} ms for 5 fits)")
    assert ok


def test_criterion_03_stiffness_ranges():
    targets = {"AA": (0.65, 77.0), "D2": (1.0, 93.0)}
    parts, ok = [], True
    for lay in LAYOUTS:
        lo, hi = datasheet(lay)[0].sigma_range
        good = within(lo, targets[lay][0], 0.2) and within(hi, targets[lay][1], 0.2) and lo <= 2.0 and hi >= 60.0
        ok &= good
        parts.append(f"{lay} [{lo:.3g}, {hi:.3g}] Nm/rad")
    record(3, ok, "; ".join(parts))
    assert ok


def test_criterion_04_deflection_and_hysteresis():
    parts, ok = [], True
    for lay in LAYOUTS:
        r = datasheet(lay)[0]
        good = r.delta_stiff_deg < r.delta_soft_deg and r.hysteresis_stiff_deg < r.hysteresis_soft_deg
        ok &= good
        parts.append(f"{lay} delta {r.delta_stiff_deg:.2f} < {r.delta_soft_deg:.2f} deg, "
                     f"H {r.hysteresis_stiff_deg:.3f} < {r.hysteresis_soft_deg:.3f} deg")
    record(4, ok, "; ".join(parts))
    assert ok


def test_criterion_05_speed_properties():
    aa = datasheet("AA")[0].speed_table
    d2 = datasheet("D2")[0].speed_table
    d2_speeds = np.array([[f, abs(e)] for _, _, f, e in d2])
    d2_ok = np.ptp(d2_speeds) <= 0.01 * d2_speeds.min() and within(d2_speeds.mean(), 127.5, 0.15)
    flex = np.array([f for _, _, f, _ in aa])
    ext = np.array([abs(e) for _, _, _, e in aa])
    mono = bool(np.all(np.diff(flex) < 0) and np.all(np.diff(ext) < 0))
    asym = bool(np.all(ext > flex))
    tuned = (within(ext[0], 306, 0.15) and within(flex[0], 265, 0.15)
             and within(ext[-1], 238, 0.15) and within(flex[-1], 232, 0.15))
    ok = d2_ok and mono and asym and tuned
    record(5, ok, f"D2 {d2_speeds.min():.2f}-{d2_speeds.max():.2f} deg/s; AA soft {ext[0]:.0f}/{flex[0]:.0f}, "
                  f"stiff {ext[-1]:.0f}/{flex[-1]:.0f} deg/s (ext/flex), decreasing={mono}")
    assert ok


def test_criterion_06_stiffness_variation_time():
    d2 = datasheet("D2")[0]
    aa = datasheet("AA")[0]
    d2_ok = abs(d2.svt_loaded - d2.svt_unloaded) <= TICK
    aa_ok = aa.svt_loaded > aa.svt_unloaded
    oracle = []
    for lay in LAYOUTS:
        cfg = default_plant(lay)
        fast = dict(omega_max=1e4, accel=0.0)
        cfg = cfg.with_(motor1=replace(cfg.motor1, **fast), motor2=replace(cfg.motor2, **fast),
                        sync_saturation=False)
        kp = 10.0
        res = run_svt_characterization(cfg, (kp, kp), horizon=2.0)
        oracle.append(abs(res.svt - math.log(9.0) / kp))
    oracle_ok = max(oracle) <= 2 * TICK
    ok = d2_ok and aa_ok and oracle_ok
    record(6, ok, f"D2 {d2.svt_unloaded:.4f}/{d2.svt_loaded:.4f} s; AA {aa.svt_unloaded:.3f} < {aa.svt_loaded:.3f} s;"
                  f" first-order oracle error {max(oracle) * 1e3:.2f} ms")
    assert ok


def test_criterion_07_posture_compensation():
    parts, ok = [], True
    for lay in LAYOUTS:
        cfg = default_plant(lay)
        surf = elastic(lay).surface
        comp, _ = posture_drift(cfg, surface=surf, compensation=True)
        oracle = static_drift(cfg)
        good = abs(comp) < math.radians(1.0) and abs(comp) <= 0.2 * abs(oracle)
        ok &= good
        parts.append(f"{lay} drift {math.degrees(comp):+.3f} deg vs uncompensated {math.degrees(oracle):.2f} deg")
    # zero load: the compensator never acts
    rng = np.random.default_rng(7)
    worst = 0.0
    for lay in LAYOUTS:
        cfg = default_plant(lay).with_(gravity=0.0)
        gains = default_gains(lay)
        lo, hi = cfg.transmission.theta_s_range
        for _ in range(5):
            levels = rng.uniform(lo, hi, 6)
            sim = Simulator(cfg, gains)
            sim.reset(0.5, levels[0])
            ctl = ElbowController(cfg.layout, ControllerConfig.for_plant(cfg, gains, compensation=True), (lo, hi),
                                  elastic(lay).surface)
            traj = run_closed_loop(sim, ctl, lambda t, o: (0.5, levels[min(int(t / 0.25), 5)]), 1.5)
            worst = max(worst, float(np.max(np.abs(traj.column("theta_pc_rad")))))
    ok &= worst < 1e-9
    parts.append(f"zero-load |theta_pc| max {worst:.1e} rad")
    record(7, ok, "; ".join(parts))
    assert ok


def test_criterion_08_control_identities():
    rng = np.random.default_rng(8)
    inv = 0.0
    for lay in LAYOUTS:
        layout = ElbowLayout(lay)
        for tp, ts in zip(rng.uniform(-2, 4, 10_000), rng.uniform(0, 6, 10_000)):
            p, s = layout.forward(*mix_references(layout, tp, ts))
            inv = max(inv, abs(p - tp), abs(s - ts))
    eps_ok = inv <= 1e-14
    # unloaded closed loop: no gravity, no payload, no transmission friction
    eq1 = 0.0
    for lay in LAYOUTS:
        cfg = default_plant(lay).with_(gravity=0.0)
        cfg = cfg.with_(transmission=replace(cfg.transmission, tau_fric=0.0, tau_stiction=0.0))
        gains = default_gains(lay)
        for ts in preset_levels(cfg.transmission.theta_s_range):
            sim = Simulator(cfg, gains)
            sim.reset(0.2, ts)
            ctl = ElbowController(cfg.layout, ControllerConfig.for_plant(cfg, gains), cfg.transmission.theta_s_range)
            a = run_closed_loop(sim, ctl, lambda t, o: (1.5, ts), 3.0).array()[-100:]
            eq1 = max(eq1, math.degrees(float(np.max(np.abs(a[:, 5] - a[:, 3])))))
    ok = eps_ok and eq1 < 0.1
    record(8, ok, f"mix inverse error {inv:.1e} rad over 2x10^4 inputs; settled |theta_o - theta_p| {eq1:.4f} deg")
    assert ok


def _hold_sim(target_load, strict=False):
    """Stiff D2 holding a hanging bag whose reflected load on the posture motor is ``target_load``."""
    cfg = default_plant("D2")
    ts = resolve_preset("stiff", cfg.transmission.theta_s_range)

    def make(mass):
        sim = Simulator(cfg.with_(payload=PayloadSpec(mass, 0.30)), default_gains("D2"), strict=strict)
        sim.reset(math.pi / 2, ts)
        return sim

    mass = brentq(lambda m: abs(make(m).loads()[0]) - target_load, 0.0, 10.0, xtol=1e-12)
    return make(mass), mass


def test_criterion_09_non_backdrivability():
    sim, mass = _hold_sim(15.0)
    th0 = (float(sim.S[K.TH1]), float(sim.S[K.TH2]))
    sim.advance(10_000)
    th1 = (float(sim.S[K.TH1]), float(sim.S[K.TH2]))
    held = th0 == th1 and sim.motor_work == (0.0, 0.0) and sim.fault_flags == 0
    load = sim.peak_loads[0]
    over, _ = _hold_sim(16.0, strict=True)
    try:
        over.advance(1)
        raised = False
    except PassiveOverload as exc:
        raised = exc.load > 15.3
    ok = held and raised and abs(load - 15.0) < 0.1
    record(9, ok, f"{mass:.2f} kg bag -> {load:.2f} Nm held 10 s: angle change "
                  f"{max(abs(a - b) for a, b in zip(th0, th1))}, work {sum(sim.motor_work)} J; 16 Nm raises={raised}")
    assert ok


def test_criterion_10_scenario_suite():
    impact = run_scenario(default_spec("impact")).metrics
    obstacle = run_scenario(default_spec("obstacle")).metrics
    payload = run_scenario(default_spec("payload")).metrics
    emg = run_scenario(default_spec("emg_replay")).metrics
    soft, stiff = impact["soft"], impact["stiff"]
    checks = {
        "impact": stiff["peak_deg"] < 1.0 and within(soft["peak_deg"], 10.0, 0.3)
        and soft["lifetime_s"] is not None and within(soft["lifetime_s"], 0.7, 0.3),
        "obstacle": within(obstacle["ratio"], 4.9, 0.2),
        "payload": payload["stiff"]["held"] and payload["stiff"]["steady_deg"] <= 2.0
        and not payload["soft"]["held"],
        "emg": emg["labels"] == list(EMG_LABELS),
    }
    ok = all(checks.values())
    record(10, ok, f"impact soft peak {soft['peak_deg']:.2f} deg, lifetime {soft['lifetime_s']:.3f} s, "
                   f"stiff peak {stiff['peak_deg']:.3f} deg; obstacle ratio {obstacle['ratio']:.2f}; payload stiff "
                   f"{payload['stiff']['steady_deg']:.2f} deg, soft dropped at {payload['soft']['dropped_at_s']} s; "
                   f"emg {emg['labels']}")
    assert ok, checks


def test_criterion_11_determinism(tmp_path):
    runs = [
        ["simulate", "--seed", "11"],
        ["characterize", "--layout", "d2", "--seed", "11"],
        ["scenario", "impact", "--seed", "11"],
        ["scenario", "emg_replay", "--seed", "11"],
    ]
    same, files = True, 0
    for i, argv in enumerate(runs):
        a, b = tmp_path / f"{i}a", tmp_path / f"{i}b"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        names = sorted(p.name for p in a.iterdir())
        same &= names == sorted(p.name for p in b.iterdir())
        for n in names:
            files += 1
            same &= (a / n).read_bytes() == (b / n).read_bytes()
    record(11, same, f"{files} output files byte-identical across two runs")
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
