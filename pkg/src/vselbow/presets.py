"""Default device descriptions for the two elbow layouts.

Motor rows are the published gearmotor data.  Output speeds, accelerations,
friction and segment damping are tuned values; see the README for what each
one was tuned against.
"""
import math

import numpy as np

from .plant import ElbowLayout, MotorUnit, PlantConfig, SegmentProps
from .transmission import SyntheticTransmissionParams

N_PRESETS = 9

# AA: biceps flexes (motor 2), triceps extends (motor 1)
AA_BICEPS = MotorUnit("biceps", tau_nominal=3.9, tau_peak=8.7, ratio=336, efficiency=0.32,
                      omega_max=5.28, accel=18.0)
AA_TRICEPS = MotorUnit("triceps", tau_nominal=0.6, tau_peak=3.9, ratio=111, efficiency=0.33,
                       omega_max=9.3, accel=18.0)

D2_POSITION = MotorUnit("position", tau_nominal=5.5, tau_peak=9.7, ratio=588, efficiency=0.27,
                        omega_max=2.23, accel=15.0)
D2_STIFFNESS = MotorUnit("stiffness", tau_nominal=2.4, tau_peak=8.3, ratio=525, efficiency=0.30,
                         omega_max=2.3, accel=0.0)

AA_TRANSMISSION = SyntheticTransmissionParams(
    k_spring=2.4, lever=math.sqrt(0.65 / 2400.0), stiffening_ratio=117.0, a1=12.5,
    theta_s_range=(0.0, 5.5), delta_max_soft=0.85, delta_max_stiff=0.15,
    tau_fric=0.016, tau_stiction=0.016, pretension=(1.15, 1.89),
)
D2_TRANSMISSION = SyntheticTransmissionParams(
    k_spring=4.17, lever=math.sqrt(1.0 / 4170.0), stiffening_ratio=90.0, a1=10.4,
    theta_s_range=(0.0, math.pi), delta_max_soft=0.84, delta_max_stiff=0.15,
    tau_fric=0.001, tau_stiction=0.04, pretension=(0.3, 0.6),
)

AA_SEGMENT = SegmentProps.from_mass(m_F=0.894, L=0.133, b=0.12)
D2_SEGMENT = SegmentProps.from_mass(m_F=0.413, L=0.124, b=2 * 0.413 * 0.062**2 / 0.9)

# default motor position-loop gains [1/s]; D2 runs softer
AA_GAINS = (20.0, 20.0)
D2_GAINS = (8.0, 8.0)


def default_plant(layout="AA", frictionless=False) -> PlantConfig:
    kind = layout.upper()
    if kind == "AA":
        cfg = PlantConfig(ElbowLayout("AA"), AA_TRICEPS, AA_BICEPS, AA_TRANSMISSION, AA_SEGMENT,
                          torque_limits=(-3.9, 8.7))
    elif kind == "D2":
        cfg = PlantConfig(ElbowLayout("D2"), D2_POSITION, D2_STIFFNESS, D2_TRANSMISSION, D2_SEGMENT,
                          torque_limits=(-9.7, 9.7), rom=(0.0, math.radians(142.0)))
    else:
        raise ValueError(f"unknown layout {layout!r}")
    if frictionless:
        # no Coulomb term and (numerically) no viscous damping: no hysteresis source left
        seg = SegmentProps(cfg.segment.m_F, cfg.segment.l_F, cfg.segment.L, cfg.segment.I_F, 1e-9)
        cfg = cfg.with_(transmission=cfg.transmission.frictionless(), segment=seg)
    return cfg


def default_gains(layout="AA"):
    return AA_GAINS if layout.upper() == "AA" else D2_GAINS


def preset_levels(theta_s_range, n=N_PRESETS):
    """Preload levels S1..Sn spaced uniformly over the preload range."""
    if n < 3:
        raise ValueError("need at least 3 presets")
    lo, hi = theta_s_range
    return np.linspace(lo, hi, n)


def resolve_preset(name, theta_s_range, n=N_PRESETS):
    """Map 'soft' / 'stiff' / 'mid' / 'S3' / 3 (1-based) to a preload value."""
    levels = preset_levels(theta_s_range, n)
    key = str(name).strip().lower()
    aliases = {"soft": 1, "min": 1, "mid": (n + 1) // 2, "stiff": n, "max": n, "rigid": n}
    if key in aliases:
        idx = aliases[key]
    else:
        idx = int(key[1:]) if key.startswith("s") else int(key)
    if not 1 <= idx <= n:
        raise ValueError(f"preset index {idx} outside 1..{n}")
    return float(levels[idx - 1])
