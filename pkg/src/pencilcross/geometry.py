"""The Riemann sphere: stereographic and cylindrical charts, SU(2) and SO(2) actions.

A point of the projective line is either a complex number ``lam`` (with
``complex(inf)`` or any infinite value for the point at infinity) or a
:class:`ProjectivePoint` ``(a : b)`` with ``lam = b / a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = [
    "ChartSingularError",
    "CylindricalY",
    "CylindricalZ",
    "ProjectivePoint",
    "SpherePoint",
    "chordal_distance",
    "cyl_y_to_sphere",
    "cyl_z_to_sphere",
    "matched_distance",
    "mobius_su2",
    "mobius_su2_affine",
    "plane_to_sphere",
    "plane_to_xyz",
    "psi_y",
    "so2_cyl_action",
    "so2_plane_action",
    "sphere_to_cyl_y",
    "sphere_to_cyl_z",
    "sphere_to_plane",
    "xyz_to_plane",
]

TWO_PI = 2.0 * np.pi
CHART_EPS = 1e-12
INF = complex(np.inf, 0.0)


class ChartSingularError(ValueError):
    """Point lies on the axis of a cylindrical chart."""


class ProjectivePoint(NamedTuple):
    """Homogeneous coordinates ``(a : b)`` normalized to ``max(|a|, |b|) = 1``."""

    a: complex
    b: complex

    @classmethod
    def make(cls, a, b):
        a, b = complex(a), complex(b)
        s = max(abs(a), abs(b))
        if s == 0.0 or not np.isfinite(s):
            raise ValueError("(0 : 0) and non-finite coordinates are not projective points")
        return cls(a / s, b / s)

    @classmethod
    def from_affine(cls, lam):
        lam = complex(lam)
        if not np.isfinite(lam):
            return cls(0j, 1 + 0j)
        return cls.make(1.0, lam)

    @property
    def is_infinite(self) -> bool:
        return abs(self.a) <= CHART_EPS

    @property
    def affine(self) -> complex:
        return INF if self.is_infinite else self.b / self.a


@dataclass(frozen=True)
class SpherePoint:
    X: float
    Y: float
    Z: float

    def __post_init__(self):
        r2 = self.X ** 2 + self.Y ** 2 + self.Z ** 2
        if abs(r2 - 1.0) > 1e-10:
            raise ValueError(f"not on the unit sphere: |p|^2 = {r2}")

    def as_array(self):
        return np.array([self.X, self.Y, self.Z])


@dataclass(frozen=True)
class CylindricalY:
    """Chart with axis along Y: ``X = rho cos psi``, ``Z = rho sin psi``."""

    psi: float
    y_coord: float

    def __post_init__(self):
        if not (0.0 <= self.psi < TWO_PI) or not (-1.0 <= self.y_coord <= 1.0):
            raise ValueError(f"out of chart range: psi={self.psi}, Y={self.y_coord}")


@dataclass(frozen=True)
class CylindricalZ:
    """Chart with axis along Z: ``X = rho cos phi``, ``Y = rho sin phi``."""

    phi: float
    z_coord: float

    def __post_init__(self):
        if not (0.0 <= self.phi < TWO_PI) or not (-1.0 <= self.z_coord <= 1.0):
            raise ValueError(f"out of chart range: phi={self.phi}, Z={self.z_coord}")


def _angle(y, x):
    a = np.mod(np.arctan2(y, x), TWO_PI)
    # mod can round up to exactly 2 pi for tiny negative angles
    return np.where(a >= TWO_PI, 0.0, a)


# --------------------------------------------------------------------------
# stereographic projection (vectorized forms work on arrays of lambda)


def plane_to_xyz(lam):
    """Stereographic image of ``lam`` as an array ``(..., 3)``; infinity goes to (0, 0, 1)."""
    lam = np.asarray(lam, dtype=complex)
    fin = np.isfinite(lam)
    z = np.where(fin, lam, 0.0)
    r2 = np.abs(z) ** 2
    den = 1.0 + r2
    out = np.stack([2 * z.real / den, 2 * z.imag / den, (r2 - 1.0) / den], axis=-1)
    out[~fin] = (0.0, 0.0, 1.0)
    return out


def xyz_to_plane(p):
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (x + 1j * y) / (1.0 - z)
    return np.where(1.0 - z <= 1e-300, INF, lam)


def plane_to_sphere(lam) -> SpherePoint:
    if isinstance(lam, ProjectivePoint):
        lam = lam.affine
    x, y, z = plane_to_xyz(complex(lam))
    return SpherePoint(float(x), float(y), float(z))


def sphere_to_plane(p: SpherePoint) -> complex:
    return complex(xyz_to_plane(p.as_array()))


def psi_y(lam):
    """Vectorized ``(psi, Y)`` chart coordinates of plane points."""
    p = plane_to_xyz(lam)
    return _angle(p[..., 2], p[..., 0]), p[..., 1]


def sphere_to_cyl_y(p: SpherePoint) -> CylindricalY:
    if np.hypot(p.X, p.Z) < CHART_EPS:
        raise ChartSingularError("point on the Y axis")
    return CylindricalY(float(_angle(p.Z, p.X)), p.Y)


def cyl_y_to_sphere(c: CylindricalY) -> SpherePoint:
    rho = np.sqrt(max(0.0, 1.0 - c.y_coord ** 2))
    if rho < CHART_EPS:
        raise ChartSingularError("point on the Y axis")
    return SpherePoint(rho * np.cos(c.psi), c.y_coord, rho * np.sin(c.psi))


def sphere_to_cyl_z(p: SpherePoint) -> CylindricalZ:
    if np.hypot(p.X, p.Y) < CHART_EPS:
        raise ChartSingularError("point on the Z axis")
    return CylindricalZ(float(_angle(p.Y, p.X)), p.Z)


def cyl_z_to_sphere(c: CylindricalZ) -> SpherePoint:
    rho = np.sqrt(max(0.0, 1.0 - c.z_coord ** 2))
    if rho < CHART_EPS:
        raise ChartSingularError("point on the Z axis")
    return SpherePoint(rho * np.cos(c.phi), rho * np.sin(c.phi), c.z_coord)


# --------------------------------------------------------------------------
# group actions on points


def mobius_su2(point, u, v):
    """Action ``(a : b) -> (conj(u) a + conj(v) b : -v a + u b)`` induced by the pair action.

    If ``(C, D) = (uA + vB, -conj(v) A + conj(u) B)`` then the crossings of
    ``C + lam D`` are the images of the crossings of ``A + lam B``. Accepts a
    :class:`ProjectivePoint` (returned renormalized) or an affine value.
    """
    u, v = complex(u), complex(v)
    if isinstance(point, ProjectivePoint):
        a, b = point
        return ProjectivePoint.make(np.conj(u) * a + np.conj(v) * b, -v * a + u * b)
    return complex(mobius_su2_affine(point, u, v))


def mobius_su2_affine(lam, u, v):
    """Vectorized affine form ``(u lam - v) / (conj(u) + conj(v) lam)``."""
    lam = np.asarray(lam, dtype=complex)
    fin = np.isfinite(lam)
    z = np.where(fin, lam, 0.0)
    num = np.where(fin, u * z - v, u)
    den = np.where(fin, np.conj(u) + np.conj(v) * z, np.conj(v))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(np.abs(den) <= CHART_EPS * np.abs(num), INF, out)


def so2_plane_action(lam, theta):
    """Rotation written as ``(lam cos t + sin t) / (cos t - lam sin t)``.

    This is the action that shifts the ``psi`` chart coordinate by ``+2 theta``.
    It equals ``mobius_su2(lam, cos t, -sin t)``: the pair rotation by ``theta``
    moves crossings the other way.
    """
    return mobius_su2_affine(lam, np.cos(theta), -np.sin(theta))


def so2_cyl_action(c: CylindricalY, theta) -> CylindricalY:
    psi = float(np.mod(c.psi + 2.0 * theta, TWO_PI))
    return CylindricalY(0.0 if psi >= TWO_PI else psi, c.y_coord)


# --------------------------------------------------------------------------
# distances


def chordal_distance(l1, l2):
    """Half the Euclidean distance between stereographic images (so at most 1)."""
    return 0.5 * np.linalg.norm(plane_to_xyz(l1) - plane_to_xyz(l2), axis=-1)


def matched_distance(s1, s2):
    """Bottleneck distance between two finite multisets of points on the sphere.

    Points are matched one-to-one by minimum total chordal distance; the result
    is the largest matched distance, an upper bound on the Hausdorff distance.
    Multisets of different sizes are at distance ``inf``.
    """
    p1 = plane_to_xyz(np.asarray(s1, complex).ravel())
    p2 = plane_to_xyz(np.asarray(s2, complex).ravel())
    if len(p1) != len(p2):
        return np.inf
    if len(p1) == 0:
        return 0.0
    cost = 0.5 * np.linalg.norm(p1[:, None, :] - p2[None, :, :], axis=-1)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())
