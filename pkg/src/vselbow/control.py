"""Motor position loops, reference mixing, posture compensation and the EMG mapper."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .plant import LOG_COLUMNS, ROM, ElbowLayout, Simulator

CONTROL_COLUMNS = LOG_COLUMNS + ("theta_pc_rad", "halt_flag")


@dataclass(frozen=True)
class EmgConfig:
    deadband: float = 0.1
    cocontraction: float = 0.2
    speed_gain: float = 1.0
    stiffness_gain: float = 1.25
    max_speed: float = 1.5  # rad/s joint speed at |omega_r| = 1

    def __post_init__(self):
        if not 0 <= self.deadband < 1 or not 0 <= self.cocontraction < 1:
            raise ValueError("deadband and cocontraction threshold must be in [0, 1)")
        if self.speed_gain <= 0 or self.stiffness_gain <= 0 or self.max_speed <= 0:
            raise ValueError("EMG gains must be positive")


@dataclass(frozen=True)
class ControllerConfig:
    kp: tuple[float, float] = (20.0, 20.0)
    omega_limits: tuple[float, float] = (5.0, 5.0)  # rad/s per motor
    high_period: float = 0.005
    motor_period: float = 0.001
    compensation: bool = False
    eps_sigma: float = 1e-3
    emg: EmgConfig = EmgConfig()

    def __post_init__(self):
        if min(self.kp) <= 0 or min(self.omega_limits) <= 0:
            raise ValueError("gains and speed limits must be positive")
        if self.high_period <= 0 or self.motor_period <= 0:
            raise ValueError("control periods must be positive")
        ratio = self.high_period / self.motor_period
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("motor period must divide the high-level period")

    @property
    def substeps(self) -> int:
        return int(round(self.high_period / self.motor_period))

    @classmethod
    def for_plant(cls, plant_cfg, gains, **kw):
        limits = (plant_cfg.motor1.omega_max, plant_cfg.motor2.omega_max)
        return cls(kp=tuple(gains), omega_limits=limits, motor_period=plant_cfg.dt, **kw)


# --------------------------------------------------------------------------
# mixing


@dataclass(frozen=True)
class MixResult:
    theta1: float
    theta2: float
    saturated: bool

    def __iter__(self):
        return iter((self.theta1, self.theta2))


def mix_references(layout: ElbowLayout, theta_p_ref, theta_s_ref, preload_range=None) -> MixResult:
    """Motor references from posture and preload references.

    An out-of-range preload is clamped and reported through ``saturated``.
    """
    saturated = False
    if preload_range is not None:
        lo, hi = preload_range
        if theta_s_ref < lo or theta_s_ref > hi:
            theta_s_ref = min(max(theta_s_ref, lo), hi)
            saturated = True
    th1, th2 = layout.inverse(theta_p_ref, theta_s_ref)
    return MixResult(th1, th2, saturated)


def controller_tick(cfg: ControllerConfig, state, refs):
    """Per-motor velocity commands ``K_p (theta_i^r - theta_i)``, saturated at the speed limits.

    Only ``state.theta1`` and ``state.theta2`` are read.
    """
    out = []
    for kp, lim, r, th in zip(cfg.kp, cfg.omega_limits, refs, (state.theta1, state.theta2)):
        u = kp * (r - th)
        out.append(min(max(u, -lim), lim))
    return tuple(out)


# --------------------------------------------------------------------------
# posture compensation


@dataclass(frozen=True)
class CompensatorState:
    theta_pc: float = 0.0
    theta_s_ref: float | None = None  # preload reference of the last tick
    delta: float | None = None  # deflection measured at the last tick
    delta_hat: float | None = None
    skipped: bool = False


def _partials(surface, theta_s, delta):
    try:
        (t0, t1), (d0, d1) = surface.domain
    except (AttributeError, TypeError):
        t0, t1 = surface.theta_s_range
        d0, d1 = -math.inf, math.inf
    ts = min(max(theta_s, t0), t1)
    if hasattr(surface, "delta_max"):
        d1 = float(surface.delta_max(ts))
        d0 = -d1
    d = min(max(delta, d0), d1)
    kw = {"extrapolate": True} if hasattr(surface, "coefficients") else {}
    return float(surface.stiffness(ts, d, **kw)), float(surface.preload_sensitivity(ts, d, **kw))


def compensate_posture(comp: CompensatorState, surface, theta_s_ref_next, delta, eps_sigma=1e-3):
    """One posture-compensation update keeping the elastic torque constant across a preload step."""
    if comp.theta_s_ref is None:
        return replace(comp, theta_s_ref=theta_s_ref_next, delta=delta, skipped=False)
    step = theta_s_ref_next - comp.theta_s_ref
    if step == 0.0:
        return replace(comp, delta=delta, skipped=False)
    sigma, dfs = _partials(surface, comp.theta_s_ref, delta)
    if not sigma > eps_sigma:
        return replace(comp, theta_s_ref=theta_s_ref_next, delta=delta, skipped=True)
    delta_hat = delta - dfs / sigma * step
    return CompensatorState(comp.theta_pc + delta - delta_hat, theta_s_ref_next, delta, delta_hat, False)


# --------------------------------------------------------------------------
# EMG


@dataclass(frozen=True)
class EmgSample:
    a_b: float
    a_t: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a_b", min(max(float(self.a_b), 0.0), 1.0))
        object.__setattr__(self, "a_t", min(max(float(self.a_t), 0.0), 1.0))


@dataclass(frozen=True)
class EmgCommand:
    speed: float  # normalized joint speed in [-1, 1], flexion positive
    stiffness: float  # normalized stiffness in [0, 1]
    halt: bool


def emg_map(sample: EmgSample, cfg: EmgConfig = EmgConfig()) -> EmgCommand:
    diff = sample.a_b - sample.a_t
    common = min(sample.a_b, sample.a_t)
    stiffness = min(max(cfg.stiffness_gain * common, 0.0), 1.0)
    halt = common > cfg.cocontraction and abs(diff) < cfg.deadband
    if halt or abs(diff) < cfg.deadband:
        speed = 0.0
    else:
        speed = min(max(cfg.speed_gain * diff, -1.0), 1.0)
    return EmgCommand(speed, stiffness, halt)


def stiffness_curve(surface, n=201):
    """Zero-deflection stiffness sampled over the preload range."""
    lo, hi = surface.theta_s_range
    ts = np.linspace(lo, hi, n)
    kw = {"extrapolate": True} if hasattr(surface, "coefficients") else {}
    return ts, np.array([float(surface.stiffness(t, 0.0, **kw)) for t in ts])


def preload_for_stiffness(surface, sigma):
    """Preload whose zero-deflection stiffness equals ``sigma`` (clamped to the achievable range)."""
    lo, hi = surface.theta_s_range
    kw = {"extrapolate": True} if hasattr(surface, "coefficients") else {}

    def res(t):
        return float(surface.stiffness(t, 0.0, **kw)) - sigma

    r0, r1 = res(lo), res(hi)
    if r0 >= 0:
        return lo
    if r1 <= 0:
        return hi
    return brentq(res, lo, hi, xtol=1e-12)


# --------------------------------------------------------------------------
# closed loop


class ElbowController:
    """High-level loop: posture/preload references to motor references."""

    def __init__(self, layout: ElbowLayout, cfg: ControllerConfig, preload_range, surface=None):
        if cfg.compensation and surface is None:
            raise ValueError("posture compensation needs an identified torque surface")
        self.layout = layout
        self.cfg = cfg
        self.preload_range = tuple(preload_range)
        self.surface = surface
        self.reset()

    def reset(self):
        self.comp = CompensatorState()
        self.saturated = False
        self.skipped = False

    def update(self, delta_measured, theta_p_ref, theta_s_ref) -> MixResult:
        lo, hi = self.preload_range
        ts = min(max(theta_s_ref, lo), hi)
        if self.cfg.compensation:
            self.comp = compensate_posture(self.comp, self.surface, ts, delta_measured, self.cfg.eps_sigma)
            self.skipped = self.comp.skipped
        mix = mix_references(self.layout, theta_p_ref + self.comp.theta_pc, theta_s_ref, self.preload_range)
        self.saturated = mix.saturated
        return mix


@dataclass
class Trajectory:
    columns: tuple
    rows: list = field(default_factory=list)

    def array(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, len(self.columns)))
        return np.array(self.rows, dtype=float)

    def column(self, name) -> np.ndarray:
        return self.array()[:, self.columns.index(name)] if self.rows else np.zeros(0)


def run_closed_loop(sim: Simulator, controller: ElbowController, reference: Callable, horizon, on_tick=None,
                    fine=False):
    """Run the 200 Hz loop for ``horizon`` seconds.

    ``reference(t, obs)`` returns ``(theta_p_ref, theta_s_ref)``; ``obs`` is the
    sampled :class:`ElbowState`.  One log row is recorded per tick, sampled
    before that tick's commands are applied; with ``fine`` a row is also kept
    after every motor step.  ``on_tick(sim, k)`` runs before each tick
    (payload changes, drops).
    """
    n = controller.cfg.substeps
    if abs(n * sim.cfg.dt - controller.cfg.high_period) > 1e-12:
        raise ValueError("plant step does not match the controller's motor period")
    ticks = int(round(horizon / controller.cfg.high_period))
    traj = Trajectory(CONTROL_COLUMNS)
    for k in range(ticks):
        if on_tick is not None:
            on_tick(sim, k)
        obs = sim.state()
        tp, ts = reference(obs.t, obs)
        mix = controller.update(obs.delta, tp, ts)
        extra = (controller.comp.theta_pc, int(bool(getattr(reference, "halt", False))))
        traj.rows.append(sim.log_row() + extra)
        sim.set_motor_refs(mix.theta1, mix.theta2)
        if fine:
            for j in range(n):
                if j:
                    traj.rows.append(sim.log_row() + extra)
                sim.advance(1)
        else:
            sim.advance(n)
    return traj


class EmgDriver:
    """Turns replayed EMG envelopes into posture and preload references (zero-order hold)."""

    def __init__(self, times, a_b, a_t, surface, cfg: EmgConfig = EmgConfig(), period=0.005, theta_p0=0.0):
        self.times = np.asarray(times, float)
        self.a_b = np.asarray(a_b, float)
        self.a_t = np.asarray(a_t, float)
        self.cfg = cfg
        self.period = period
        self.surface = surface
        ts, sig = stiffness_curve(surface)
        self.sigma_lo, self.sigma_hi = float(sig.min()), float(sig.max())
        self.theta_p = theta_p0
        self.halt = False
        self.command = EmgCommand(0.0, 0.0, False)
        self.history = []

    def sample(self, t) -> EmgSample:
        i = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        i = min(max(i, 0), len(self.times) - 1)
        return EmgSample(self.a_b[i], self.a_t[i], t)

    def preload_for(self, sample: EmgSample):
        """Preload reference for the stiffness an EMG sample asks for."""
        cmd = emg_map(sample, self.cfg)
        return preload_for_stiffness(self.surface, self.sigma_lo + cmd.stiffness * (self.sigma_hi - self.sigma_lo))

    def __call__(self, t, obs):
        sample = self.sample(t)
        cmd = emg_map(sample, self.cfg)
        self.command = cmd
        self.halt = cmd.halt
        self.theta_p = min(max(self.theta_p + cmd.speed * self.cfg.max_speed * self.period, ROM[0]), ROM[1])
        ts = self.preload_for(sample)
        self.history.append((t, cmd.speed, cmd.stiffness, cmd.halt, self.theta_p, ts))
        return self.theta_p, ts
