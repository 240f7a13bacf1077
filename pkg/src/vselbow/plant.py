"""Fixed-step elbow dynamics for the AA and D2 layouts.

Frame: upper arm vertical, ``theta_o = 0`` fully extended (hanging),
flexion positive.  The elastic joint balances the external torque
``f(theta_s, delta)``; the forearm equation of motion is::

    I * theta_o'' = -f(theta_s, delta) - b * theta_o' - tau_g(theta_o) + tau_contact

with ``delta = theta_o - theta_p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernel as K
from .errors import IntegrationFault, PassiveOverload
from .transmission import SyntheticSurface, SyntheticTransmissionParams

GRAVITY = 9.81
PASSIVE_LIMIT = 15.3  # Nm, worm-gear tooth strength
ROM = (0.0, math.radians(120.0))


@dataclass(frozen=True)
class MotorUnit:
    """Gearmotor with a non-backdrivable worm stage, as seen at its output pulley.

    ``omega_max`` is the no-load output speed; available speed falls linearly
    to zero as the opposing load reaches ``tau_peak``.  ``accel`` bounds the
    output acceleration (0 means unbounded).
    """

    name: str
    tau_nominal: float
    tau_peak: float
    ratio: float
    efficiency: float
    omega_max: float
    tau_lock: float = PASSIVE_LIMIT
    accel: float = 0.0
    non_backdrivable: bool = True

    def __post_init__(self):
        if not 0 < self.tau_nominal <= self.tau_peak:
            raise ValueError(f"{self.name}: need 0 < tau_nominal <= tau_peak")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"{self.name}: efficiency must be in (0, 1]")
        if self.ratio < 1:
            raise ValueError(f"{self.name}: transmission ratio must be >= 1")
        if self.omega_max <= 0 or self.tau_lock <= 0 or self.accel < 0:
            raise ValueError(f"{self.name}: omega_max, tau_lock must be positive, accel >= 0")
        if not self.non_backdrivable:
            raise ValueError(f"{self.name}: only non-backdrivable units are modeled")

    def available_speed(self, opposing_load):
        x = 1.0 - opposing_load / self.tau_peak
        return self.omega_max * min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class ElbowLayout:
    kind: str  # "AA" or "D2"
    pulley_ratio: float = 1.0  # R_m / R_o, AA only

    def __post_init__(self):
        if self.kind not in ("AA", "D2"):
            raise ValueError(f"unknown layout {self.kind!r}")
        if self.kind == "AA" and self.pulley_ratio != 1.0:
            raise ValueError("only equal motor and output pulleys are supported")

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "AA":
            return np.array([[0.5, 0.5], [-1.0, 1.0]])
        return np.eye(2)

    def forward(self, theta1, theta2):
        """Motor angles -> (theta_p, theta_s)."""
        if self.kind == "AA":
            return 0.5 * (theta1 + theta2), theta2 - theta1
        return theta1, theta2

    def inverse(self, theta_p, theta_s):
        """(theta_p, theta_s) -> motor angles."""
        if self.kind == "AA":
            return theta_p - 0.5 * theta_s, theta_p + 0.5 * theta_s
        return theta_p, theta_s

    @property
    def code(self) -> float:
        return 0.0 if self.kind == "AA" else 1.0


@dataclass(frozen=True)
class SegmentProps:
    m_F: float  # kg
    l_F: float  # m, elbow to F-segment COM
    L: float  # m, segment length
    I_F: float  # kg m^2 about the elbow
    b: float  # Nm s/rad, viscous damping on the forearm

    def __post_init__(self):
        if min(self.m_F, self.l_F, self.L, self.I_F, self.b) <= 0:
            raise ValueError("segment properties must be positive")
        if self.I_F < self.m_F * self.l_F**2 * (1 - 1e-12):
            raise ValueError("I_F below the point-mass bound m_F * l_F^2")

    @classmethod
    def from_mass(cls, m_F, L, b, l_F=None):
        l = L / 2 if l_F is None else l_F
        return cls(m_F=m_F, l_F=l, L=L, I_F=m_F * l * l, b=b)


@dataclass(frozen=True)
class PayloadSpec:
    m_L: float = 0.0
    L_L: float = 0.30

    def __post_init__(self):
        if self.m_L < 0 or self.L_L <= 0:
            raise ValueError("payload mass must be >= 0 and lever arm > 0")


@dataclass(frozen=True)
class ContactSpec:
    theta_obs: float | None = None  # rad, flexion-side stop
    impulses: tuple[tuple[float, float], ...] = ()  # (t [s], delta omega [rad/s])


@dataclass(frozen=True)
class ElbowState:
    theta1: float
    theta2: float
    theta_p: float
    theta_s: float
    theta_o: float
    delta: float
    omega_o: float
    t: float
    omega1: float = 0.0
    omega2: float = 0.0


# --------------------------------------------------------------------------
# elementary operations


def gravity_torque(theta_o, seg: SegmentProps, load: PayloadSpec, g=GRAVITY):
    """Gravity torque about the elbow pulling toward extension [Nm]."""
    return g * np.sin(theta_o) * (load.m_L * load.L_L + seg.m_F * seg.l_F)


def total_inertia(seg: SegmentProps, load: PayloadSpec):
    return seg.I_F + load.m_L * load.L_L**2


def reflected_loads(layout: ElbowLayout, surface: SyntheticSurface, theta_s, delta):
    """Torque each motor must exert (positive direction) to hold the configuration."""
    f = float(surface.elastic(theta_s, delta))
    pre = float(surface.pretension(theta_s))
    if layout.kind == "AA":
        ts_load = pre + 0.5 * surface.params.a0 * float(surface.preload_gain_slope(theta_s)) * delta**2
        return -0.5 * f - ts_load, -0.5 * f + ts_load
    return -f, pre


@dataclass(frozen=True)
class MotorStepResult:
    theta: float
    omega: float
    power: float
    fault: PassiveOverload | None = None


def motor_step(unit: MotorUnit, theta_ref, theta, omega_cmd, dt, load=0.0, omega=0.0):
    """Advance one motor by ``dt`` toward its commanded velocity.

    ``load`` is the torque the motor must exert in the positive direction.
    A zero command holds the angle exactly (worm lock) and draws no power.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    fault = None
    if abs(load) > unit.tau_lock:
        fault = PassiveOverload(unit.name, abs(load), unit.tau_lock)
    if omega_cmd == 0.0:
        return MotorStepResult(theta, 0.0, 0.0, fault)
    opposing = load if omega_cmd > 0 else -load
    avail = unit.available_speed(opposing)
    target = math.copysign(min(abs(omega_cmd), avail), omega_cmd)
    if unit.accel > 0:
        lim = unit.accel * dt
        omega = omega + min(max(target - omega, -lim), lim)
    else:
        omega = target
    return MotorStepResult(theta + omega * dt, omega, abs(load * omega), fault)


def _elastic(surface, theta_s, delta):
    if isinstance(surface, SyntheticSurface):
        return float(surface.elastic(theta_s, delta))
    return float(surface.evaluate(theta_s, delta, extrapolate=True))


def dynamics_step(state: ElbowState, surface, seg: SegmentProps, load: PayloadSpec,
                  contact: ContactSpec | None, dt, layout: ElbowLayout, *,
                  gravity=GRAVITY, tau_fric=0.0, tau_stiction=0.0, stuck=False):
    """One semi-implicit Euler step of the forearm with motor angles as given.

    Motor velocities in ``state`` move the posture coordinate at the
    implied rate; impulses are applied by the caller.  Returns
    ``(new_state, contact_torque, stuck)``.
    """
    if dt > 1e-3 + 1e-15:
        raise ValueError("dt must not exceed 1 ms")
    inertia = total_inertia(seg, load)
    gcoef = gravity * (load.m_L * load.L_L + seg.m_F * seg.l_F)
    theta_p, theta_s = layout.forward(state.theta1, state.theta2)
    if layout.kind == "AA":
        vp = 0.5 * (state.omega1 + state.omega2)
    else:
        vp = state.omega1
    d = state.theta_o - theta_p
    f = _elastic(surface, theta_s, d)
    vfree = state.omega_o + dt * (-f - seg.b * state.omega_o - gcoef * math.sin(state.theta_o)) / inertia
    tau_st = max(tau_stiction, tau_fric)
    rel = vfree - vp
    cap = dt * (tau_st if stuck else tau_fric) / inertia
    if abs(rel) <= cap:
        vn, stuck = vp, True
    else:
        slip = dt * tau_fric / inertia
        vn, stuck = (vfree - slip if rel > 0 else vfree + slip), False
    thn = state.theta_o + dt * vn
    tc = 0.0
    if contact is not None and contact.theta_obs is not None and thn > contact.theta_obs:
        tc = -inertia * vn / dt
        thn, vn = contact.theta_obs, 0.0
    if not (math.isfinite(thn) and math.isfinite(vn)):
        raise IntegrationFault("non-finite forearm state", state)
    new = replace(state, theta_p=theta_p, theta_s=theta_s, theta_o=thn, delta=thn - theta_p,
                  omega_o=vn, t=state.t + dt)
    return new, tc, stuck


def equilibrium_deflection(surface: SyntheticSurface, theta_s, theta_p, seg, load, gravity=GRAVITY):
    """Static deflection where the elastic torque balances gravity at theta_p + delta."""
    gcoef = gravity * (load.m_L * load.L_L + seg.m_F * seg.l_F)

    def residual(d):
        return float(surface.elastic(theta_s, d)) + gcoef * math.sin(theta_p + d)

    if gcoef == 0.0 or residual(0.0) == 0.0:
        return 0.0
    lo, hi = -math.pi, math.pi
    return brentq(residual, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)


# --------------------------------------------------------------------------
# simulator


@dataclass(frozen=True)
class PlantConfig:
    layout: ElbowLayout
    motor1: MotorUnit
    motor2: MotorUnit
    transmission: SyntheticTransmissionParams
    segment: SegmentProps
    payload: PayloadSpec = PayloadSpec()
    contact: ContactSpec = ContactSpec()
    gravity: float = GRAVITY
    dt: float = 1e-3
    sync_saturation: bool | None = None  # default: on for AA
    torque_limits: tuple[float, float] = (-9.7, 9.7)  # active joint torque (extension, flexion)
    rom: tuple[float, float] = ROM

    def __post_init__(self):
        if not 0 < self.dt <= 1e-3 + 1e-15:
            raise ValueError("dt must be in (0, 1 ms]")

    @property
    def synced(self):
        return self.layout.kind == "AA" if self.sync_saturation is None else self.sync_saturation

    @property
    def surface(self) -> SyntheticSurface:
        return SyntheticSurface(self.transmission)

    def with_(self, **changes) -> "PlantConfig":
        return replace(self, **changes)


def pack_params(cfg: PlantConfig) -> np.ndarray:
    P = np.zeros(K.PARAM_SIZE)
    tp = cfg.transmission
    lo, hi = tp.theta_s_range
    m1, m2 = cfg.motor1, cfg.motor2
    P[K.DT] = cfg.dt
    P[K.LAYOUT] = cfg.layout.code
    P[K.SYNC] = 1.0 if cfg.synced else 0.0
    P[K.WMAX1], P[K.TAUM1], P[K.LOCK1], P[K.ACC1] = m1.omega_max, m1.tau_peak, m1.tau_lock, m1.accel
    P[K.WMAX2], P[K.TAUM2], P[K.LOCK2], P[K.ACC2] = m2.omega_max, m2.tau_peak, m2.tau_lock, m2.accel
    P[K.A0] = tp.a0
    P[K.GAIN] = tp.stiffening_ratio - 1.0
    P[K.TS_LO] = lo
    P[K.TS_SPAN] = hi - lo
    P[K.A1] = tp.a1
    P[K.PRE0], P[K.PRE1] = tp.pretension
    P[K.INERTIA] = total_inertia(cfg.segment, cfg.payload)
    P[K.GCOEF] = cfg.gravity * (cfg.payload.m_L * cfg.payload.L_L + cfg.segment.m_F * cfg.segment.l_F)
    P[K.DAMP] = cfg.segment.b
    P[K.TAU_ST] = tp.breakaway
    P[K.TAU_FR] = tp.tau_fric
    obs = cfg.contact.theta_obs
    P[K.THETA_OBS] = K.NO_OBSTACLE if obs is None else obs
    return P


LOG_COLUMNS = (
    "t_s", "theta1_rad", "theta2_rad", "theta_p_rad", "theta_s_rad", "theta_o_rad",
    "delta_rad", "omega_o_rad_s", "tau_elastic_Nm", "fault",
)


class Simulator:
    """Owns one plant instance and advances it on the 1 kHz motor clock."""

    def __init__(self, cfg: PlantConfig, gains=(10.0, 10.0), backend=None, strict=False):
        self.cfg = cfg
        self.surface = cfg.surface
        self.P = pack_params(cfg)
        self.set_gains(*gains)
        self.S = K.new_state()
        self.R = np.zeros(2)
        self.ticks = 0
        self.strict = strict
        self._advance = {None: K.advance, "python": K.py_advance, "cython": K.c_advance}[backend]
        if self._advance is None:
            raise RuntimeError("compiled kernel not available")
        self._impulses = sorted(cfg.contact.impulses)
        self._next_impulse = 0
        self.reset(0.0, cfg.transmission.theta_s_range[0])

    # -- setup --------------------------------------------------------------

    def reset(self, theta_p, theta_s, theta_o=None, settle=True):
        """Place motors at (theta_p, theta_s); forearm at static equilibrium unless given."""
        th1, th2 = self.cfg.layout.inverse(theta_p, theta_s)
        self.S[:] = K.new_state()
        self.S[K.TH1], self.S[K.TH2] = th1, th2
        if theta_o is None:
            if settle:
                d = equilibrium_deflection(self.surface, theta_s, theta_p, self.cfg.segment,
                                           self.cfg.payload, self.cfg.gravity)
            else:
                d = 0.0
            theta_o = theta_p + d
        obs = self.cfg.contact.theta_obs
        if obs is not None and theta_o > obs:
            theta_o = obs
        self.S[K.THO] = theta_o
        self.S[K.STUCK] = 1.0
        self.R[:] = (th1, th2)
        self.ticks = 0
        self._next_impulse = 0

    def set_payload(self, payload: PayloadSpec):
        self.cfg = self.cfg.with_(payload=payload)
        self.P[K.INERTIA] = total_inertia(self.cfg.segment, payload)
        self.P[K.GCOEF] = self.cfg.gravity * (payload.m_L * payload.L_L + self.cfg.segment.m_F * self.cfg.segment.l_F)

    def set_gains(self, kp1, kp2):
        """Proportional gains of the two motor position loops [1/s]."""
        if kp1 <= 0 or kp2 <= 0:
            raise ValueError("motor loop gains must be positive")
        self.P[K.KP1] = kp1
        self.P[K.KP2] = kp2

    def set_motor_refs(self, theta1_ref, theta2_ref):
        self.R[0] = theta1_ref
        self.R[1] = theta2_ref

    def apply_impulse(self, delta_omega):
        self.S[K.VO] += delta_omega
        self.S[K.STUCK] = 0.0

    # -- stepping -----------------------------------------------------------

    @property
    def t(self):
        return self.ticks * self.cfg.dt

    def advance(self, n):
        """Advance ``n`` motor ticks, applying scheduled impulses exactly once."""
        while n > 0:
            chunk = n
            if self._next_impulse < len(self._impulses):
                t_imp, dv = self._impulses[self._next_impulse]
                k_imp = int(round(t_imp / self.cfg.dt))
                if k_imp <= self.ticks:
                    self.apply_impulse(dv)
                    self._next_impulse += 1
                    continue
                chunk = min(n, k_imp - self.ticks)
            status = self._advance(self.S, self.P, self.R, chunk)
            if status:
                raise IntegrationFault(f"plant integration diverged near t={self.t:.3f} s", self.state())
            self.ticks += chunk
            n -= chunk
        if self.strict:
            self.raise_faults()

    def raise_faults(self):
        flags = int(self.S[K.FLAGS])
        for bit, unit, load in ((K.FLAG_OVERLOAD_1, self.cfg.motor1, K.PEAK1),
                                (K.FLAG_OVERLOAD_2, self.cfg.motor2, K.PEAK2)):
            if flags & bit:
                raise PassiveOverload(unit.name, float(self.S[load]), unit.tau_lock, float(self.S[K.FAULT_T]))

    # -- observation ----------------------------------------------------------

    @property
    def fault_flags(self) -> int:
        return int(self.S[K.FLAGS])

    @property
    def stuck(self) -> bool:
        return bool(self.S[K.STUCK])

    @property
    def motor_work(self):
        return float(self.S[K.WORK1]), float(self.S[K.WORK2])

    @property
    def peak_loads(self):
        """Largest |load| seen by each motor since the last reset [Nm]."""
        return float(self.S[K.PEAK1]), float(self.S[K.PEAK2])

    @property
    def contact_torque(self):
        return float(self.S[K.TAU_CONTACT])

    def state(self) -> ElbowState:
        S = self.S
        th1, th2, tho = float(S[K.TH1]), float(S[K.TH2]), float(S[K.THO])
        thp, ths = self.cfg.layout.forward(th1, th2)
        return ElbowState(th1, th2, thp, ths, tho, tho - thp, float(S[K.VO]), self.t,
                          float(S[K.W1]), float(S[K.W2]))

    def loads(self):
        st = self.state()
        return reflected_loads(self.cfg.layout, self.surface, st.theta_s, st.delta)

    def log_row(self):
        st = self.state()
        f = float(self.surface.elastic(st.theta_s, st.delta))
        return (st.t, st.theta1, st.theta2, st.theta_p, st.theta_s, st.theta_o, st.delta,
                st.omega_o, f, self.fault_flags)


def format_log(rows: Sequence[Sequence[float]], columns=LOG_COLUMNS, header_comment=None) -> str:
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append(", ".join(columns))
    for row in rows:
        lines.append(", ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))  # shortest exact round-trip
