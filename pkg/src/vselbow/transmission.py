"""Elastic torque surfaces: the synthetic ground-truth plant map and fitted polynomials.

All surfaces map a preload ``theta_s`` [rad] and a deflection ``delta`` [rad]
to the external torque [Nm] the joint balances at that deflection.  The
restoring torque acting on the forearm is therefore ``-f(theta_s, delta)``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DomainError, IllConditionedError

_DOMAIN_TOL = 1e-9


class TorqueSurface(Protocol):
    def evaluate(self, theta_s, delta): ...

    def stiffness(self, theta_s, delta): ...

    def preload_sensitivity(self, theta_s, delta): ...

    @property
    def theta_s_range(self) -> tuple[float, float]: ...


@dataclass(frozen=True)
class SyntheticTransmissionParams:
    """Parameters of the synthetic antagonistic transmission.

    ``f = a0 * g(u) * delta + a1 * delta**3`` with ``a0 = k * r_eff**2`` the
    zero-preload stiffness, ``u`` the preload normalized to [0, 1] and
    ``g(u) = 1 + (stiffening_ratio - 1) * u**2``.
    """

    k_spring: float  # N/mm
    lever: float  # m, effective spring lever arm
    stiffening_ratio: float  # g(1) / g(0)
    a1: float  # Nm/rad^3
    theta_s_range: tuple[float, float]
    delta_max_soft: float  # rad, envelope at minimum preload
    delta_max_stiff: float  # rad, envelope at maximum preload
    tau_fric: float = 0.0  # Nm, sliding (Coulomb) torque
    tau_stiction: float = 0.0  # Nm, breakaway torque; never below tau_fric
    pretension: tuple[float, float] = (0.0, 0.0)  # Nm at min / max preload

    def __post_init__(self):
        lo, hi = self.theta_s_range
        if not hi > lo:
            raise ValueError("theta_s_range must be increasing")
        if self.k_spring <= 0 or self.lever <= 0 or self.stiffening_ratio < 1:
            raise ValueError("spring rate, lever and stiffening ratio must be positive (ratio >= 1)")
        if self.a1 < 0:
            raise ValueError("a1 must be non-negative")
        if self.tau_fric < 0 or self.tau_stiction < 0:
            raise ValueError("friction torques must be non-negative")
        if not (self.delta_max_soft > 0 and self.delta_max_stiff > 0):
            raise ValueError("deflection envelope must be positive")

    @property
    def a0(self) -> float:
        return self.k_spring * 1e3 * self.lever**2

    @property
    def breakaway(self) -> float:
        return max(self.tau_stiction, self.tau_fric)

    def frictionless(self) -> "SyntheticTransmissionParams":
        return _replace(self, tau_fric=0.0, tau_stiction=0.0)


def _replace(obj, **changes):
    from dataclasses import replace

    return replace(obj, **changes)


class SyntheticSurface:
    """Closed-form ground-truth surface built from :class:`SyntheticTransmissionParams`."""

    def __init__(self, params: SyntheticTransmissionParams):
        self.params = params
        lo, hi = params.theta_s_range
        self._lo = float(lo)
        self._span = float(hi - lo)
        self._gain = params.stiffening_ratio - 1.0

    @property
    def theta_s_range(self):
        return self.params.theta_s_range

    def _u(self, theta_s):
        return np.clip((np.asarray(theta_s, dtype=float) - self._lo) / self._span, 0.0, 1.0)

    def preload_gain(self, theta_s):
        u = self._u(theta_s)
        return 1.0 + self._gain * u * u

    def preload_gain_slope(self, theta_s):
        ts = np.asarray(theta_s, dtype=float)
        u = self._u(ts)
        inside = (ts >= self._lo) & (ts <= self._lo + self._span)
        return np.where(inside, 2.0 * self._gain * u / self._span, 0.0)

    def delta_max(self, theta_s):
        u = self._u(theta_s)
        p = self.params
        return p.delta_max_soft + (p.delta_max_stiff - p.delta_max_soft) * u

    def check_domain(self, theta_s, delta):
        ts = np.asarray(theta_s, dtype=float)
        d = np.asarray(delta, dtype=float)
        lo, hi = self.theta_s_range
        if np.any(ts < lo - _DOMAIN_TOL):
            raise DomainError(f"theta_s below minimum preload {lo:.6g} rad", "theta_s_min")
        if np.any(ts > hi + _DOMAIN_TOL):
            raise DomainError(f"theta_s above maximum preload {hi:.6g} rad", "theta_s_max")
        if np.any(np.abs(d) > self.delta_max(ts) + _DOMAIN_TOL):
            raise DomainError("|delta| exceeds the deflection envelope delta_max(theta_s)", "delta_max")

    def elastic(self, theta_s, delta):
        """Elastic torque without domain checks (plant use)."""
        d = np.asarray(delta, dtype=float)
        return self.params.a0 * self.preload_gain(theta_s) * d + self.params.a1 * d**3

    def evaluate(self, theta_s, delta):
        self.check_domain(theta_s, delta)
        return self.elastic(theta_s, delta)

    def stiffness(self, theta_s, delta):
        self.check_domain(theta_s, delta)
        d = np.asarray(delta, dtype=float)
        return self.params.a0 * self.preload_gain(theta_s) + 3.0 * self.params.a1 * d**2

    def preload_sensitivity(self, theta_s, delta):
        self.check_domain(theta_s, delta)
        d = np.asarray(delta, dtype=float)
        return self.params.a0 * self.preload_gain_slope(theta_s) * d

    def pretension(self, theta_s):
        """Pretension torque each preload motor holds at zero deflection."""
        u = self._u(theta_s)
        p0, p1 = self.params.pretension
        return p0 + (p1 - p0) * u

    def stiffness_extremes(self, n=201):
        """(min, max) of the stiffness over the full domain on a dense grid."""
        lo, hi = self.theta_s_range
        ts = np.linspace(lo, hi, n)
        dm = self.delta_max(ts)
        grid = np.linspace(-1.0, 1.0, n)
        T, G = np.meshgrid(ts, grid, indexing="ij")
        D = G * dm[:, None]
        s = self.stiffness(T, D)
        return float(s.min()), float(s.max())


def synthetic_torque(params: SyntheticTransmissionParams, theta_s, delta, delta_rate_sign=0):
    """Synthetic transmission torque plus the Coulomb term ``tau_fric * sign``."""
    if delta_rate_sign not in (-1, 0, 1):
        raise ValueError("delta_rate_sign must be -1, 0 or +1")
    surface = SyntheticSurface(params)
    return surface.evaluate(theta_s, delta) + params.tau_fric * delta_rate_sign


# --------------------------------------------------------------------------
# polynomial surfaces


@dataclass(frozen=True)
class AffineMap:
    """x_scaled = (x - center) / half_width."""

    center: float
    half_width: float

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.half_width

    @classmethod
    def spanning(cls, lo, hi):
        half = 0.5 * (hi - lo)
        return cls(0.5 * (hi + lo), half if half > 0 else 1.0)


@dataclass(frozen=True)
class PolynomialSurface:
    """``tau = sum c_ij x^i y^j`` in rescaled coordinates x(theta_s), y(delta).

    ``coefficients`` has shape (deg_theta + 1, deg_delta + 1).  When
    ``odd_in_delta`` is set only odd powers of ``y`` are non-zero and the
    delta map is centered at zero.
    """

    coefficients: np.ndarray
    theta_map: AffineMap
    delta_map: AffineMap
    domain: tuple[tuple[float, float], tuple[float, float]]
    r2: float = float("nan")
    rmse: float = float("nan")
    odd_in_delta: bool = False
    n_samples: int = 0
    _coef_dtheta: np.ndarray = field(init=False, repr=False, compare=False)
    _coef_ddelta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 2:
            raise ValueError("coefficients must be a 2D matrix")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        i = np.arange(c.shape[0])[:, None]
        j = np.arange(c.shape[1])[None, :]
        dth = (c * i)[1:, :] / self.theta_map.half_width
        ddl = (c * j)[:, 1:] / self.delta_map.half_width
        object.__setattr__(self, "_coef_dtheta", dth if dth.size else np.zeros((1, c.shape[1])))
        object.__setattr__(self, "_coef_ddelta", ddl if ddl.size else np.zeros((c.shape[0], 1)))

    @property
    def degrees(self):
        return self.coefficients.shape[0] - 1, self.coefficients.shape[1] - 1

    @property
    def theta_s_range(self):
        return self.domain[0]

    def contains(self, theta_s, delta, tol=1e-9):
        (t0, t1), (d0, d1) = self.domain
        ts = np.asarray(theta_s, dtype=float)
        d = np.asarray(delta, dtype=float)
        return (ts >= t0 - tol) & (ts <= t1 + tol) & (d >= d0 - tol) & (d <= d1 + tol)

    def _check(self, theta_s, delta, extrapolate):
        if extrapolate:
            return
        if not np.all(self.contains(theta_s, delta)):
            raise DomainError("evaluation outside the fitted domain (extrapolation)", "fitted_domain")

    def _polyval(self, coef, theta_s, delta):
        x = self.theta_map.forward(theta_s)
        y = self.delta_map.forward(delta)
        return np.polynomial.polynomial.polyval2d(x, y, coef)

    def evaluate(self, theta_s, delta, extrapolate=False):
        self._check(theta_s, delta, extrapolate)
        return self._polyval(self.coefficients, theta_s, delta)

    def stiffness(self, theta_s, delta, extrapolate=False):
        self._check(theta_s, delta, extrapolate)
        return self._polyval(self._coef_ddelta, theta_s, delta)

    def preload_sensitivity(self, theta_s, delta, extrapolate=False):
        self._check(theta_s, delta, extrapolate)
        return self._polyval(self._coef_dtheta, theta_s, delta)

    # -- raw monomial form --------------------------------------------------

    @classmethod
    def from_monomials(cls, raw, domain, odd_in_delta=False):
        """Build from raw coefficients ``tau = sum r_ij theta_s^i delta^j``."""
        raw = np.asarray(raw, dtype=float)
        (t0, t1), (d0, d1) = domain
        tmap = AffineMap.spanning(t0, t1)
        dmap = _delta_map(d0, d1, odd_in_delta)
        scaled = _substitute(raw, tmap.center, tmap.half_width, dmap.center, dmap.half_width)
        return cls(scaled, tmap, dmap, ((t0, t1), (d0, d1)), odd_in_delta=odd_in_delta)

    def monomial_coefficients(self):
        """Coefficients of the same polynomial in unscaled theta_s and delta."""
        tm, dm = self.theta_map, self.delta_map
        # x = (t - ct)/ht = -ct/ht + t/ht
        return _substitute(
            self.coefficients, -tm.center / tm.half_width, 1.0 / tm.half_width,
            -dm.center / dm.half_width, 1.0 / dm.half_width,
        )

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        deg_t, deg_d = self.degrees
        return {
            "degrees": {"theta_s": deg_t, "delta": deg_d},
            "domain": {
                "theta_s_rad": list(self.domain[0]),
                "delta_rad": list(self.domain[1]),
            },
            "maps": {
                "theta_s": {"center": self.theta_map.center, "half_width": self.theta_map.half_width},
                "delta": {"center": self.delta_map.center, "half_width": self.delta_map.half_width},
            },
            "odd_in_delta": self.odd_in_delta,
            "coefficients": [[float(v) for v in row] for row in self.coefficients],
            "r2": _json_float(self.r2),
            "rmse_Nm": _json_float(self.rmse),
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, doc):
        maps = doc["maps"]
        coef = np.array(doc["coefficients"], dtype=float)
        deg = doc["degrees"]
        if coef.shape != (deg["theta_s"] + 1, deg["delta"] + 1):
            raise ValueError("coefficient matrix shape does not match declared degrees")
        dom = doc["domain"]
        return cls(
            coef,
            AffineMap(**maps["theta_s"]),
            AffineMap(**maps["delta"]),
            (tuple(dom["theta_s_rad"]), tuple(dom["delta_rad"])),
            r2=_from_json_float(doc.get("r2")),
            rmse=_from_json_float(doc.get("rmse_Nm")),
            odd_in_delta=bool(doc.get("odd_in_delta", False)),
            n_samples=int(doc.get("n_samples", 0)),
        )

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _json_float(v):
    v = float(v)
    return v if np.isfinite(v) else None


def _from_json_float(v):
    return float("nan") if v is None else float(v)


def _delta_map(d0, d1, odd):
    if odd:
        half = max(abs(d0), abs(d1))
        return AffineMap(0.0, half if half > 0 else 1.0)
    return AffineMap.spanning(d0, d1)


def _substitute(coef, a, b, c, d):
    """Coefficients of sum coef_ij (a + b x)^i (c + d y)^j in powers of x, y."""
    ni, nj = coef.shape
    ti = _binomial_matrix(ni, a, b)  # ti[i, p]: coefficient of x^p in (a + b x)^i
    tj = _binomial_matrix(nj, c, d)
    return ti.T @ coef @ tj


def _binomial_matrix(n, a, b):
    m = np.zeros((n, n))
    for i in range(n):
        for p in range(i + 1):
            m[i, p] = comb(i, p) * a ** (i - p) * b**p
    return m


def _design(x, y, deg_t, deg_d, odd):
    cols = []
    index = []
    for i in range(deg_t + 1):
        xi = x**i
        for j in range(deg_d + 1):
            if odd and j % 2 == 0:
                continue
            cols.append(xi * y**j)
            index.append((i, j))
    return np.column_stack(cols), index


def fit_polynomial_surface(samples, degrees=(4, 5), odd_in_delta=False, rcond=1e-12):
    """Least-squares fit of a 2D polynomial surface to (theta_s, delta, tau) samples.

    ``samples`` is an (N, 3) array-like.  Raises ``ValueError`` for too few or
    non-finite samples and :class:`IllConditionedError` when the design matrix
    is rank deficient.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("samples must have shape (N, 3): theta_s, delta, tau")
    deg_t, deg_d = degrees
    if deg_t < 0 or deg_d < 0:
        raise ValueError("degrees must be non-negative")
    n_min = (deg_t + 1) * (deg_d + 1)
    if data.shape[0] < n_min:
        raise ValueError(f"need at least {n_min} samples, got {data.shape[0]}")
    if not np.all(np.isfinite(data)):
        raise ValueError("samples contain non-finite values")
    ts, dl, tau = data.T
    if np.unique(ts).size < 3:
        raise ValueError("samples must span at least 3 distinct theta_s values")

    t0, t1 = float(ts.min()), float(ts.max())
    d0, d1 = float(dl.min()), float(dl.max())
    if odd_in_delta:
        # oddness defines the mirrored half as well
        d1 = max(abs(d0), abs(d1))
        d0 = -d1
    tmap = AffineMap.spanning(t0, t1)
    dmap = _delta_map(d0, d1, odd_in_delta)
    A, index = _design(tmap.forward(ts), dmap.forward(dl), deg_t, deg_d, odd_in_delta)

    sv = np.linalg.svd(A, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if sv[-1] <= rcond * sv[0]:
        raise IllConditionedError("rank-deficient design matrix", cond)

    sol, *_ = np.linalg.lstsq(A, tau, rcond=None)
    coef = np.zeros((deg_t + 1, deg_d + 1))
    for (i, j), v in zip(index, sol):
        coef[i, j] = v

    resid = tau - A @ sol
    ss_res = float(resid @ resid)
    centered = tau - tau.mean()
    ss_tot = float(centered @ centered)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0.0 else float("nan")
    rmse = float(np.sqrt(ss_res / tau.size))
    return PolynomialSurface(
        coef, tmap, dmap, ((t0, t1), (d0, d1)), r2=r2, rmse=rmse,
        odd_in_delta=odd_in_delta, n_samples=int(tau.size),
    )


def stiffness_of(surface, theta_s, delta):
    """Joint stiffness d f / d delta of any surface at (theta_s, delta)."""
    return surface.stiffness(theta_s, delta)


# --------------------------------------------------------------------------
# CSV samples

SAMPLE_COLUMNS = ("theta_s_rad", "delta_rad", "tau_Nm")


def read_samples_csv(path) -> np.ndarray:
    """Samples (theta_s, delta, tau) from a CSV; extra columns and ``#`` comment lines are ignored."""
    rows = []
    cols = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in row]
            if cols is None:
                missing = [c for c in SAMPLE_COLUMNS if c not in cells]
                if missing:
                    raise ValueError(f"{path}:{lineno}: header lacks {', '.join(missing)}")
                cols = [cells.index(c) for c in SAMPLE_COLUMNS]
                width = len(cells)
                continue
            if len(cells) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns")
            try:
                rows.append([float(cells[i]) for i in cols])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if cols is None:
        raise ValueError(f"{path}: empty file")
    return np.array(rows, dtype=float).reshape(-1, 3)


def format_samples_csv(samples: Iterable[Sequence[float]]) -> str:
    lines = [", ".join(SAMPLE_COLUMNS)]
    for ts, d, tau in samples:
        lines.append(f"{float(ts)!r}, {float(d)!r}, {float(tau)!r}")
    return "\n".join(lines) + "\n"
