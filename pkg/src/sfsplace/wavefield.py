"""2D wave fields and their cylindrical-harmonic expansions.

Conventions (time dependence exp(-i w t)):

* free-field Green's function of a line source: G(r | r_s) = (i/4) H_0^(1)(k |r - r_s|)
* plane wave with propagation angle phi: u(r) = A exp(i k (cos phi, sin phi) . r)
* interior expansion about a center c: u(r) = sum_m a_m J_m(k r') exp(i m phi'),
  with (r', phi') polar coordinates of r - c.

Expansion coefficients follow from the Jacobi-Anger identity for plane waves
and from Graf's addition theorem for exterior point sources (valid strictly
inside the source distance).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import math

import numpy as np

from . import specfun

__all__ = [
    "Point2",
    "Frequency",
    "CircularRegion",
    "ExpansionConfig",
    "ExpansionCoeffs",
    "PlaneWave",
    "truncation_order",
    "expansion_for",
    "green2d",
    "green2d_many",
    "planewave_coeffs",
    "pointsource_coeffs",
    "evaluate_expansion",
    "evaluate_expansion_many",
]

_COINCIDENT_TOL = 1e-12


class Point2(NamedTuple):
    x: float
    y: float


def _as_xy(p):
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (2,):
        raise ValueError("expected a 2D point")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return float(arr[0]), float(arr[1])


def _as_points(points):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of points")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


@dataclass(frozen=True)
class Frequency:
    """Single temporal frequency; wavenumber derives from the sound speed."""

    hz: float
    sound_speed: float = 343.0

    def __post_init__(self):
        if not (math.isfinite(self.hz) and self.hz > 0.0):
            raise ValueError("hz must be positive and finite")
        if not (math.isfinite(self.sound_speed) and self.sound_speed > 0.0):
            raise ValueError("sound_speed must be positive and finite")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.hz

    @property
    def wavenumber(self) -> float:
        return self.omega / self.sound_speed


@dataclass(frozen=True)
class CircularRegion:
    """Disc-shaped target region."""

    center: Point2
    radius: float

    def __post_init__(self):
        cx, cy = _as_xy(self.center)
        object.__setattr__(self, "center", Point2(cx, cy))
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError("radius must be positive and finite")


@dataclass(frozen=True)
class ExpansionConfig:
    """Truncated interior expansion: orders -max_order..max_order about center.

    valid_radius documents the disc the truncation is calibrated for;
    0 means unchecked. Exterior sources must lie outside that disc.
    """

    max_order: int
    center: Point2
    valid_radius: float = 0.0

    def __post_init__(self):
        if int(self.max_order) != self.max_order or self.max_order < 0:
            raise ValueError("max_order must be a nonnegative integer")
        object.__setattr__(self, "max_order", int(self.max_order))
        cx, cy = _as_xy(self.center)
        object.__setattr__(self, "center", Point2(cx, cy))
        if not (math.isfinite(self.valid_radius) and self.valid_radius >= 0.0):
            raise ValueError("valid_radius must be nonnegative")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.max_order, self.max_order + 1)

    @property
    def size(self) -> int:
        return 2 * self.max_order + 1


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Coefficient vector a_m, m = -max_order..max_order, about config.center."""

    values: np.ndarray
    config: ExpansionConfig

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.ndim != 1 or vals.size != self.config.size:
            raise ValueError(
                f"coefficient vector must have length {self.config.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PlaneWave:
    """Unit-amplitude-by-default plane wave propagating at angle direction (rad)."""

    direction: float
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not math.isfinite(self.direction):
            raise ValueError("direction must be finite")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")


def truncation_order(freq: Frequency, region: CircularRegion) -> int:
    """Expansion order M = ceil(k R) + 10 for a disc of radius R."""
    return int(math.ceil(freq.wavenumber * region.radius)) + 10


def expansion_for(region: CircularRegion, freq: Frequency) -> ExpansionConfig:
    """ExpansionConfig centered on the region with the standard order rule."""
    return ExpansionConfig(
        max_order=truncation_order(freq, region),
        center=region.center,
        valid_radius=region.radius,
    )


_IPOW = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


def _ipow(m):
    # exact i**m for integer arrays (avoids cos/sin roundoff at multiples of pi/2)
    return _IPOW[np.mod(m, 4)]


def _alt_sign(m):
    return 1.0 - 2.0 * (np.mod(m, 2)).astype(np.float64)


def green2d(receiver, source, freq: Frequency) -> complex:
    """Free-field 2D Green's function (i/4) H_0^(1)(k d) between two points."""
    rx, ry = _as_xy(receiver)
    sx, sy = _as_xy(source)
    d = math.hypot(rx - sx, ry - sy)
    if d < _COINCIDENT_TOL:
        raise ValueError("receiver coincides with the source")
    return complex(0.25j * specfun.hankel1(0, freq.wavenumber * d))


def green2d_many(points, source, freq: Frequency) -> np.ndarray:
    """Vectorized green2d for an (n, 2) array of receiver points."""
    pts = _as_points(points)
    sx, sy = _as_xy(source)
    d = np.hypot(pts[:, 0] - sx, pts[:, 1] - sy)
    if np.any(d < _COINCIDENT_TOL):
        raise ValueError("a receiver point coincides with the source")
    return 0.25j * specfun.hankel1_orders(0, freq.wavenumber * d)[0]


def planewave_coeffs(pw: PlaneWave, cfg: ExpansionConfig, freq: Frequency) -> ExpansionCoeffs:
    """Expansion coefficients of a plane wave (Jacobi-Anger).

    a_m = A i^m exp(-i m phi_pw) exp(i k_vec . center), |a_m| = |A| for all m.
    """
    k = freq.wavenumber
    m = cfg.orders
    cx, cy = cfg.center
    center_phase = np.exp(1j * k * (math.cos(pw.direction) * cx + math.sin(pw.direction) * cy))
    vals = pw.amplitude * _ipow(m) * np.exp(-1j * m * pw.direction) * center_phase
    return ExpansionCoeffs(vals, cfg)


def pointsource_coeffs(source, cfg: ExpansionConfig, freq: Frequency) -> ExpansionCoeffs:
    """Expansion coefficients of an exterior point source (Graf's theorem).

    a_m = (i/4) H_m^(1)(k d) exp(-i m phi_s), with (d, phi_s) the polar
    coordinates of the source about cfg.center. Requires d > valid_radius.
    """
    sx, sy = _as_xy(source)
    cx, cy = cfg.center
    dx, dy = sx - cx, sy - cy
    d = math.hypot(dx, dy)
    if cfg.valid_radius > 0.0:
        if d <= cfg.valid_radius:
            raise ValueError("point source lies inside the expansion validity disc")
    elif d < _COINCIDENT_TOL:
        raise ValueError("point source coincides with the expansion center")
    phi_s = math.atan2(dy, dx)
    m = cfg.orders
    h_pos = specfun.hankel1_orders(cfg.max_order, np.asarray([freq.wavenumber * d]))[:, 0]
    h_full = _alt_sign(np.abs(m)) * h_pos[np.abs(m)]
    h_full[m >= 0] = h_pos[m[m >= 0]]
    vals = 0.25j * h_full * np.exp(-1j * m * phi_s)
    return ExpansionCoeffs(vals, cfg)


def _basis_matrix(cfg: ExpansionConfig, pts: np.ndarray, freq: Frequency) -> np.ndarray:
    """J_m(k r') e^{i m phi'} for all orders x points, shape (2M+1, n)."""
    cx, cy = cfg.center
    dx = pts[:, 0] - cx
    dy = pts[:, 1] - cy
    r = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    m = cfg.orders
    j_pos = specfun.bessel_j_orders(cfg.max_order, freq.wavenumber * r)
    j_full = _alt_sign(np.abs(m))[:, None] * j_pos[np.abs(m), :]
    nonneg = m >= 0
    j_full[nonneg] = j_pos[m[nonneg], :]
    return j_full * np.exp(1j * np.outer(m, phi))


def evaluate_expansion_many(coeffs: ExpansionCoeffs, points, freq: Frequency) -> np.ndarray:
    """Evaluate the truncated expansion at an (n, 2) array of points."""
    pts = _as_points(points)
    basis = _basis_matrix(coeffs.config, pts, freq)
    return coeffs.values @ basis


def evaluate_expansion(coeffs: ExpansionCoeffs, point, freq: Frequency) -> complex:
    """Evaluate the truncated expansion at a single point."""
    px, py = _as_xy(point)
    return complex(evaluate_expansion_many(coeffs, np.array([[px, py]]), freq)[0])
