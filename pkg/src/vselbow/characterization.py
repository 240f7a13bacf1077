"""Elastic, output-speed and stiffness-variation protocols, and the datasheet they produce."""
from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.signal import medfilt

from .control import ControllerConfig, ElbowController, run_closed_loop
from .errors import ProtocolError
from .plant import GRAVITY, ROM, PayloadSpec, PlantConfig, SegmentProps, Simulator, equilibrium_deflection
from .presets import default_gains, preset_levels
from .transmission import PolynomialSurface, fit_polynomial_surface

log = logging.getLogger(__name__)

MASS_PER_NM = 1.0 / 3.0  # rough hand-load rule: W [kg] ~ tau [Nm] / 3


@dataclass(frozen=True)
class ElasticProtocolConfig:
    payload: PayloadSpec = PayloadSpec(3.0, 0.30)
    period: float = 20.0
    repetitions: int = 3
    n_presets: int = 9
    margin: float = 0.3
    decimation: int = 10  # keep every n-th 200 Hz sample for the fit
    odd_fit: bool = True
    lead_in: float = 1.0  # periods of amplitude ease-in before recording

    def __post_init__(self):
        if self.period < 10.0:
            raise ValueError("quasi-static sweeps need a period of at least 10 s")
        if self.repetitions < 1 or self.n_presets < 5:
            raise ValueError("need >= 1 repetition and >= 5 presets (the surface is quartic in theta_s)")
        if not 0 <= self.margin < 1:
            raise ValueError("margin must be in [0, 1)")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")


def _gravity_coef(seg, load, g):
    m_f = 0.0 if seg is None else seg.m_F * seg.l_F
    return g * (load.m_L * load.L_L + m_f)


def exploration_range(torque_limit, load: PayloadSpec, seg: SegmentProps | None, margin, gravity=GRAVITY, rom=ROM):
    """Largest output interval inside the RoM whose gravity torque stays within the margin-reduced limit."""
    if not 0 <= margin < 1:
        raise ValueError("margin must be in [0, 1)")
    lim = (1.0 - margin) * abs(float(torque_limit))
    gc = _gravity_coef(seg, load, gravity)
    lo, hi = rom
    if gc <= lim:
        return lo, hi
    if lim <= 0:
        raise ProtocolError("elastic", "torque limit leaves an empty exploration range")
    a = math.asin(lim / gc)
    first = (lo, min(a, hi))
    second = (max(math.pi - a, lo), hi)
    if second[1] - second[0] > first[1] - first[0]:
        return second
    if first[1] <= first[0]:
        raise ProtocolError("elastic", "empty exploration range")
    return first


def posture_for_output(surface, theta_s, theta_o, cfg: PlantConfig):
    """Posture that places the forearm at ``theta_o`` in static equilibrium."""
    gc = _gravity_coef(cfg.segment, cfg.payload, cfg.gravity)
    tau = gc * math.sin(theta_o)
    if tau == 0.0:
        return theta_o
    d = brentq(lambda x: float(surface.elastic(theta_s, x)) + tau, -math.pi, math.pi, xtol=1e-13)
    return theta_o - d


# --------------------------------------------------------------------------
# elastic characterization


@dataclass
class PresetSweep:
    index: int
    theta_s: float
    samples: np.ndarray  # columns theta_s, delta, tau, theta_o, loading
    valid: bool
    reason: str = ""
    peak_speed: float = 0.0
    speed_limit: float = 0.0


def _sweep_preset(args):
    cfg, gains, proto, index, theta_s = args
    surface = cfg.surface
    lo, hi = exploration_range(cfg.torque_limits[1], cfg.payload, cfg.segment, proto.margin, cfg.gravity, cfg.rom)
    # the posture reference is a pure sine between the postures that place the
    # forearm at the ends of the exploration range
    p_lo = posture_for_output(surface, theta_s, lo, cfg)
    p_hi = posture_for_output(surface, theta_s, hi, cfg)
    mid, amp = 0.5 * (p_lo + p_hi), 0.5 * (p_hi - p_lo)
    w = 2 * math.pi / proto.period
    lead = proto.lead_in * proto.period  # amplitude eases in so no free oscillation is left ringing
    horizon = lead + proto.period * proto.repetitions

    def reference(t, obs):
        x = min(t / lead, 1.0) if lead > 0 else 1.0
        env = x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
        return mid - amp * env * math.cos(w * t), theta_s

    sim = Simulator(cfg, gains=gains)
    sim.reset(mid, theta_s)
    ctl = ElbowController(cfg.layout, ControllerConfig.for_plant(cfg, gains), surface.theta_s_range)
    traj = run_closed_loop(sim, ctl, reference, horizon)
    arr = traj.array()[int(round(lead / ctl.cfg.high_period)):]
    cols = traj.columns
    tho = arr[:, cols.index("theta_o_rad")]
    ths = arr[:, cols.index("theta_s_rad")]
    dl = arr[:, cols.index("delta_rad")]
    gc = _gravity_coef(cfg.segment, cfg.payload, cfg.gravity)
    tau = -gc * np.sin(tho)  # static torque balanced by the joint
    speed = np.gradient(tho, ctl.cfg.high_period)
    loading = (np.gradient(np.abs(tau)) > 0).astype(float)
    data = np.column_stack([ths, dl, tau, tho, loading])[:: proto.decimation]

    peak = float(np.max(np.abs(speed)))
    limit = 1.05 * amp * w * 1.5
    valid, reason = True, ""
    loads = sim.peak_loads
    if sim.fault_flags:
        valid, reason = False, f"motor fault flags {sim.fault_flags}"
    elif loads[0] > cfg.motor1.tau_peak or loads[1] > cfg.motor2.tau_peak:
        valid, reason = False, "motor torque saturated during sweep"
    elif peak > limit:
        valid, reason = False, f"not quasi-static: peak speed {peak:.3g} rad/s > {limit:.3g}"
    return PresetSweep(index, float(theta_s), data, valid, reason, peak, limit)


def _passes(flag):
    """Index ranges of consecutive runs with a constant loading flag."""
    edges = np.flatnonzero(np.diff(flag) != 0) + 1
    bounds = np.concatenate([[0], edges, [flag.size]])
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b - a >= 4]


def branch_hysteresis(delta, tau, loading, n_grid=200, trim=0.01):
    """Max angular gap between loading and unloading branches at equal torque [rad].

    Each monotone pass is interpolated linearly on a common torque grid; passes
    of the same direction are averaged before comparing the two branches.
    """
    delta, tau, flag = (np.asarray(x, float) for x in (delta, tau, loading))
    if tau.size == 0:
        return 0.0
    # the branches turn around within ``trim`` of either end of the torque span
    t0, t1 = float(tau.min()), float(tau.max())
    lo, hi = t0 + trim * (t1 - t0), t1 - trim * (t1 - t0)
    if not hi > lo:
        return 0.0
    grid = np.linspace(lo, hi, n_grid)
    branches = {0.0: [], 1.0: []}
    for a, b in _passes(flag):
        t, d = tau[a:b], delta[a:b]
        order = np.argsort(t)
        t, d = t[order], d[order]
        inside = (grid >= t[0]) & (grid <= t[-1])
        curve = np.full(grid.shape, np.nan)
        curve[inside] = np.interp(grid[inside], t, d)
        branches[float(flag[a] > 0.5)].append(curve)
    if not branches[0.0] or not branches[1.0]:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # grid points no pass covers
        up = np.nanmean(np.vstack(branches[1.0]), axis=0)
        down = np.nanmean(np.vstack(branches[0.0]), axis=0)
    gap = np.abs(up - down)
    gap = gap[np.isfinite(gap)]
    return float(gap.max()) if gap.size else 0.0


@dataclass
class ElasticResult:
    sweeps: list
    surface: PolynomialSurface
    samples: np.ndarray
    deflection: list  # max |delta| per preset [rad]
    hysteresis: list  # per preset [rad]
    sigma_range: tuple[float, float]


def run_elastic_characterization(cfg: PlantConfig, gains=None, proto=ElasticProtocolConfig(), parallel=1):
    """Sweep each preset quasi-statically under a known payload and fit the torque surface."""
    cfg = cfg.with_(payload=proto.payload)
    gains = gains or default_gains(cfg.layout.kind)
    levels = preset_levels(cfg.transmission.theta_s_range, proto.n_presets)
    jobs = [(cfg, gains, proto, i + 1, float(t)) for i, t in enumerate(levels)]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            sweeps = list(ex.map(_sweep_preset, jobs))
    else:
        sweeps = [_sweep_preset(j) for j in jobs]
    sweeps.sort(key=lambda s: s.index)
    for s in sweeps:
        if not s.valid:
            log.warning("preset S%d excluded from the fit: %s", s.index, s.reason)
    good = [s for s in sweeps if s.valid]
    if len(good) < 5:
        raise ProtocolError("elastic", "fewer than 5 valid presets for the quartic preload fit")
    samples = np.vstack([s.samples for s in good])
    surface = fit_polynomial_surface(samples[:, :3], odd_in_delta=proto.odd_fit)
    deflection = [float(np.max(np.abs(s.samples[:, 1]))) for s in sweeps]
    hysteresis = [branch_hysteresis(s.samples[:, 1], s.samples[:, 2], s.samples[:, 4]) for s in sweeps]
    sig = np.concatenate([
        np.asarray(surface.stiffness(s.samples[:, 0], s.samples[:, 1]), float) for s in good
    ] + [np.asarray(surface.stiffness(np.array([s.theta_s]), np.zeros(1)), float) for s in good])
    return ElasticResult(sweeps, surface, samples, deflection, hysteresis, (float(sig.min()), float(sig.max())))


# --------------------------------------------------------------------------
# output speed


def _median_speed(theta, period):
    filtered = medfilt(np.asarray(theta, float), 5) if len(theta) >= 5 else np.asarray(theta, float)
    return np.gradient(filtered, period)


def _speed_step(cfg, gains, theta_s, start, stop, settle_speed=math.radians(1.0), max_time=10.0):
    sim = Simulator(cfg, gains=gains)
    sim.reset(start, theta_s)
    ctl = ElbowController(cfg.layout, ControllerConfig.for_plant(cfg, gains), cfg.transmission.theta_s_range)
    traj = run_closed_loop(sim, ctl, lambda t, obs: (stop, theta_s), 1.5)
    th = list(traj.column("theta_o_rad"))
    while True:
        # settled: the output has stopped moving (friction may leave a small offset)
        tail = np.array(th[-41:])
        if np.all(np.abs(np.diff(tail)) < settle_speed * ctl.cfg.high_period):
            break
        if len(th) * ctl.cfg.high_period >= max_time:
            raise ProtocolError("speed", f"no settling within {max_time:g} s at theta_s={theta_s:.3g} rad")
        more = run_closed_loop(sim, ctl, lambda t, obs: (stop, theta_s), 0.5)
        th.extend(more.column("theta_o_rad"))
    v = _median_speed(th, ctl.cfg.high_period)
    return float(np.max(np.abs(v))), np.array(th)


def run_speed_characterization(cfg: PlantConfig, gains=None, presets=None, parallel=1):
    """Full-RoM steps in both directions with gravity off; rows (index, theta_s, flex, ext) in rad/s."""
    cfg = cfg.with_(gravity=0.0, payload=PayloadSpec(0.0, cfg.payload.L_L))
    gains = gains or default_gains(cfg.layout.kind)
    levels = preset_levels(cfg.transmission.theta_s_range) if presets is None else np.asarray(presets)
    lo, hi = ROM
    rows = []
    for i, ts in enumerate(levels):
        up, _ = _speed_step(cfg, gains, float(ts), lo, hi)
        down, _ = _speed_step(cfg, gains, float(ts), hi, lo)
        rows.append((i + 1, float(ts), up, -down))
    return rows


# --------------------------------------------------------------------------
# stiffness variation time


@dataclass
class SvtResult:
    load: float
    svt: float | None
    residual: float  # rad, preload error at the end of the record
    reached: bool
    times: np.ndarray
    theta_s: np.ndarray


def _crossing(t, x, level):
    idx = np.nonzero(x >= level)[0]
    if idx.size == 0:
        return None
    i = int(idx[0])
    if i == 0:
        return float(t[0])
    return float(t[i - 1] + (level - x[i - 1]) / (x[i] - x[i - 1]) * (t[i] - t[i - 1]))


def svt_from_trace(t, theta_s, theta_s_max, theta_s_min=0.0):
    """10 % to 90 % preload transit time of a logged step."""
    span = theta_s_max - theta_s_min
    t10 = _crossing(t, theta_s, theta_s_min + 0.1 * span)
    t90 = _crossing(t, theta_s, theta_s_min + 0.9 * span)
    if t10 is None or t90 is None:
        return None
    return t90 - t10


def run_svt_characterization(cfg: PlantConfig, gains=None, load=0.0, lever=0.30, margin=0.3, horizon=3.0):
    """Preload step from minimum to maximum, optionally under a payload held near the torque limit."""
    gains = gains or default_gains(cfg.layout.kind)
    payload = PayloadSpec(load, lever)
    cfg = cfg.with_(payload=payload)
    lo, hi = cfg.transmission.theta_s_range
    surface = cfg.surface
    theta_p = 0.0
    if load > 0:
        gc = _gravity_coef(cfg.segment, payload, cfg.gravity)
        theta_o = math.asin(min(1.0, (1 - margin) * cfg.torque_limits[1] / gc))
        theta_p = posture_for_output(surface, hi, theta_o, cfg)
    sim = Simulator(cfg, gains=gains)
    sim.reset(theta_p, lo)
    ctl = ElbowController(cfg.layout, ControllerConfig.for_plant(cfg, gains), (lo, hi))
    traj = run_closed_loop(sim, ctl, lambda t, obs: (theta_p, hi), horizon)
    t = traj.column("t_s")
    ts = traj.column("theta_s_rad")
    svt = svt_from_trace(t, ts, hi, lo)
    residual = float(hi - ts[-1]) if ts.size else float(hi - lo)
    return SvtResult(load, svt, residual, svt is not None, t, ts)


# --------------------------------------------------------------------------
# report


@dataclass
class CharacterizationReport:
    layout: str
    surface: PolynomialSurface
    sigma_range: tuple[float, float]
    delta_soft_deg: float
    delta_stiff_deg: float
    hysteresis_soft_deg: float
    hysteresis_stiff_deg: float
    deflection_deg: list
    hysteresis_deg: list
    presets: list  # theta_s per preset [rad]
    invalid_presets: list
    speed_table: list  # (index, theta_s, flex deg/s, ext deg/s)
    svt_unloaded: float | None
    svt_loaded: float | None
    svt_residual: dict
    rom_deg: tuple[float, float]
    torque_limits: tuple[float, float]
    passive_limit: float
    compliance: dict = field(default_factory=dict)

    def to_dict(self):
        d = {k: v for k, v in asdict(self).items() if k != "surface"}
        d["surface"] = self.surface.to_dict()
        d["speed_table"] = [
            {"preset": int(i), "theta_s_rad": ts, "flexion_deg_s": f, "extension_deg_s": e}
            for i, ts, f, e in self.speed_table
        ]
        d["sigma_range"] = list(self.sigma_range)
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, **kw)


def check_requirements(report: CharacterizationReport):
    """Compliance with the prosthetic-elbow requirement table."""
    rom_ok = report.rom_deg[0] <= 0.0 + 1e-9 and report.rom_deg[1] >= 120.0 - 1e-9
    s_lo, s_hi = report.sigma_range
    stiff_ok = s_lo <= 2.0 and s_hi >= 60.0
    ext, flex = report.torque_limits
    torque_ok = flex >= 5.9 and abs(ext) >= 2.8
    if report.speed_table:
        flex_speed = max(r[2] for r in report.speed_table)
        ext_speed = max(abs(r[3]) for r in report.speed_table)
        speed_ok = min(flex_speed, ext_speed) >= 250.0
    else:
        speed_ok = False
    passive_ok = report.passive_limit * MASS_PER_NM >= 5.0 - 1e-9
    flags = {
        "rom": bool(rom_ok),
        "stiffness_range": bool(stiff_ok),
        "active_torque": bool(torque_ok),
        "speed": bool(speed_ok),
        "passive_load_5kg": bool(passive_ok),
    }
    flags["all"] = all(flags.values())
    return flags


def characterize(cfg: PlantConfig, gains=None, proto=ElasticProtocolConfig(), parallel=1, keep=None):
    """Run all three protocols and assemble the datasheet.

    ``keep`` (a dict) receives the raw elastic result and SVT traces when given.
    """
    gains = gains or default_gains(cfg.layout.kind)
    elastic = run_elastic_characterization(cfg, gains, proto, parallel)
    speeds = run_speed_characterization(cfg, gains)
    svt0 = run_svt_characterization(cfg, gains, 0.0, proto.payload.L_L, proto.margin)
    svt3 = run_svt_characterization(cfg, gains, proto.payload.m_L, proto.payload.L_L, proto.margin)
    deg = math.degrees
    report = CharacterizationReport(
        layout=cfg.layout.kind,
        surface=elastic.surface,
        sigma_range=elastic.sigma_range,
        delta_soft_deg=deg(elastic.deflection[0]),
        delta_stiff_deg=deg(elastic.deflection[-1]),
        hysteresis_soft_deg=deg(elastic.hysteresis[0]),
        hysteresis_stiff_deg=deg(elastic.hysteresis[-1]),
        deflection_deg=[deg(x) for x in elastic.deflection],
        hysteresis_deg=[deg(x) for x in elastic.hysteresis],
        presets=[s.theta_s for s in elastic.sweeps],
        invalid_presets=[{"preset": s.index, "reason": s.reason} for s in elastic.sweeps if not s.valid],
        speed_table=[(i, ts, deg(f), deg(e)) for i, ts, f, e in speeds],
        svt_unloaded=svt0.svt,
        svt_loaded=svt3.svt,
        svt_residual={"unloaded_rad": svt0.residual, "loaded_rad": svt3.residual},
        rom_deg=(deg(cfg.rom[0]), deg(cfg.rom[1])),
        torque_limits=tuple(cfg.torque_limits),
        passive_limit=min(cfg.motor1.tau_lock, cfg.motor2.tau_lock),
    )
    report.compliance = check_requirements(report)
    if keep is not None:
        keep["elastic"] = elastic
        keep["svt"] = (svt0, svt3)
    return report


def surface_grid(surface: PolynomialSurface, n_theta=25, n_delta=41):
    """Plot-ready mesh rows (theta_s, delta, tau, sigma) over the fitted domain."""
    (t0, t1), (d0, d1) = surface.domain
    T, D = np.meshgrid(np.linspace(t0, t1, n_theta), np.linspace(d0, d1, n_delta), indexing="ij")
    tau = surface.evaluate(T, D)
    sig = surface.stiffness(T, D)
    return np.column_stack([T.ravel(), D.ravel(), np.ravel(tau), np.ravel(sig)])


# --------------------------------------------------------------------------
# posture drift under a preload ramp


def _hanging_pose(cfg: PlantConfig, theta_o0):
    lo = cfg.transmission.theta_s_range[0]
    return brentq(lambda p: p + equilibrium_deflection(cfg.surface, lo, p, cfg.segment, cfg.payload, cfg.gravity)
                  - theta_o0, -math.pi, math.pi, xtol=1e-13)


def static_drift(cfg: PlantConfig, load=PayloadSpec(3.0, 0.30), theta_o0=math.radians(30.0)):
    """Output drift of an uncompensated min-to-max preload change, from static equilibria [rad]."""
    cfg = cfg.with_(payload=load)
    hi = cfg.transmission.theta_s_range[1]
    tp = _hanging_pose(cfg, theta_o0)
    return tp + equilibrium_deflection(cfg.surface, hi, tp, cfg.segment, cfg.payload, cfg.gravity) - theta_o0


def posture_drift(cfg: PlantConfig, gains=None, surface=None, compensation=True, load=PayloadSpec(3.0, 0.30),
                  theta_o0=math.radians(30.0), ramp=8.0, settle=1.5):
    """Simulated output drift while the preload ramps from minimum to maximum under a hanging load.

    Returns ``(drift [rad], trajectory)``; ``surface`` is the model the
    compensator uses (the fitted surface in practice).
    """
    gains = gains or default_gains(cfg.layout.kind)
    cfg = cfg.with_(payload=load)
    lo, hi = cfg.transmission.theta_s_range
    tp = _hanging_pose(cfg, theta_o0)
    sim = Simulator(cfg, gains=gains)
    sim.reset(tp, lo)
    ctl_cfg = ControllerConfig.for_plant(cfg, gains, compensation=compensation)
    ctl = ElbowController(cfg.layout, ctl_cfg, (lo, hi), surface if surface is not None else cfg.surface)
    traj = run_closed_loop(sim, ctl, lambda t, obs: (tp, lo + (hi - lo) * min(t / ramp, 1.0)), ramp + settle)
    tho = traj.column("theta_o_rad")
    return float(tho[-1] - tho[0]), traj
