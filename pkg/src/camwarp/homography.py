"""Two-view homographies and epipolar parallax geometry.

The motion (r, t) is always the source-to-target camera transform,
``X_t = r @ X_s + t``. All homographies map source image coordinates to
target image coordinates. Homogeneous results are returned un-normalized;
dehomogenization is an explicit, checked step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Intrinsics, Plane, intrinsics_inverse, intrinsics_matrix, validate_rotation

_W_EPS = 1e-12
_ROT_TOL = 1e-9


def _dehom(v: np.ndarray) -> np.ndarray:
    if abs(float(v[2])) <= _W_EPS:
        raise ValueError("point at infinity: third component is (near) zero")
    return np.array([v[0] / v[2], v[1] / v[2]])


@dataclass(frozen=True)
class HPoint2:
    """Homogeneous image point (3-vector, not normalized)."""

    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        if v.shape != (3,):
            raise ValueError("homogeneous point must have 3 components")
        if not np.all(np.isfinite(v)) or not np.any(v != 0.0):
            raise ValueError("homogeneous point must be finite and nonzero")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @staticmethod
    def from_xy(x: float, y: float) -> "HPoint2":
        return HPoint2(np.array([float(x), float(y), 1.0]))

    def dehom(self) -> np.ndarray:
        """Pixel coordinates (x, y); raises if the third component is ~0."""
        return _dehom(self.v)


@dataclass(frozen=True)
class DepthValue:
    """Source-view depth in meters; positive for points in front."""

    z: float

    def __post_init__(self):
        if not (math.isfinite(self.z) and self.z > 0.0):
            raise ValueError("depth must be positive and finite")


def _check_rotation(r) -> np.ndarray:
    a = np.asarray(r, dtype=float)
    if not validate_rotation(a, _ROT_TOL):
        raise ValueError("r is not a rotation matrix")
    return a


def _check_unit_point(x: HPoint2) -> np.ndarray:
    if abs(float(x.v[2]) - 1.0) > 1e-9:
        raise ValueError("x must be normalized so its third component is 1")
    return np.asarray(x.v, dtype=float)


def infinite_homography(ks: Intrinsics, kt: Intrinsics, r) -> np.ndarray:
    """Homography induced by the plane at infinity: Kt @ r @ inv(Ks).

    Maps source pixels to target pixels for infinitely distant points; for
    a pure rotation it is the exact image-to-image map.
    """
    a = _check_rotation(r)
    return intrinsics_matrix(kt) @ a @ intrinsics_inverse(ks)


def plane_homography(ks: Intrinsics, kt: Intrinsics, r, t, plane: Plane) -> np.ndarray:
    """Homography induced by a finite plane (n . x + d = 0 in source frame).

    Returns Kt @ (r - t n^T / d) @ inv(Ks); converges to the infinite
    homography as |d| grows.
    """
    a = _check_rotation(r)
    tv = np.asarray(t, dtype=float).reshape(3)
    if plane.d == 0.0:
        raise ValueError("plane through the source camera center (d = 0)")
    mid = a - np.outer(tv, plane.n) / plane.d
    return intrinsics_matrix(kt) @ mid @ intrinsics_inverse(ks)


def reproject(ks, kt, r, t, x: HPoint2, z) -> HPoint2:
    """Map a source pixel with known depth into the target view.

    Computes the homogeneous sum ``H_inf @ x + Kt @ t / z`` (rotation term
    plus depth-scaled parallax term). The result is not normalized.

    Args:
        x: source pixel, normalized so its third component is 1.
        z: source-view depth (float or DepthValue), > 0.
    """
    xv = _check_unit_point(x)
    zf = z.z if isinstance(z, DepthValue) else float(z)
    if not (math.isfinite(zf) and zf > 0.0):
        raise ValueError("depth must be positive and finite")
    tv = np.asarray(t, dtype=float).reshape(3)
    h_inf = infinite_homography(ks, kt, r)
    return HPoint2(h_inf @ xv + (intrinsics_matrix(kt) @ tv) / zf)


@dataclass(frozen=True)
class EpipolarGeom:
    """Epipole, point at infinity, and the epipolar line through them.

    Both points lie on the line within 1e-9 after unit normalization.
    """

    epipole: HPoint2
    at_infinity: HPoint2
    line: np.ndarray

    def __post_init__(self):
        line = np.array(self.line, dtype=float).reshape(-1)
        if line.shape != (3,):
            raise ValueError("line must have 3 components")
        norm = float(np.linalg.norm(line))
        if norm == 0.0 or not np.all(np.isfinite(line)):
            raise ValueError("line must be finite and nonzero")
        unit = line / norm
        for p in (self.epipole, self.at_infinity):
            pv = p.v / np.linalg.norm(p.v)
            if abs(float(unit @ pv)) > 1e-9:
                raise ValueError("points do not lie on the epipolar line")
        line.setflags(write=False)
        object.__setattr__(self, "line", line)


def epipolar_geometry(ks, kt, r, t, x: HPoint2) -> EpipolarGeom:
    """Epipolar segment data for a source pixel.

    The epipole is ``Kt @ t`` (image of the source camera center) and the
    point at infinity is ``H_inf @ x``; as the source depth sweeps from
    infinity down to zero, the reprojection of x moves from the latter
    toward the former along the returned line.
    """
    xv = _check_unit_point(x)
    tv = np.asarray(t, dtype=float).reshape(3)
    if float(np.linalg.norm(tv)) == 0.0:
        raise ValueError("epipole is undefined for zero translation")
    e = intrinsics_matrix(kt) @ tv
    xi = infinite_homography(ks, kt, r) @ xv
    line = np.cross(e, xi)
    scale = float(np.linalg.norm(e)) * float(np.linalg.norm(xi))
    if float(np.linalg.norm(line)) <= 1e-12 * scale:
        raise ValueError("x maps onto the epipole; epipolar line is degenerate")
    return EpipolarGeom(HPoint2(e), HPoint2(xi), line)


def on_parallax_segment(xp: HPoint2, g: EpipolarGeom, tol: float = 1e-6) -> bool:
    """True iff xp lies on the segment [epipole, at_infinity] within tol.

    tol bounds both the perpendicular distance to the segment's line and
    the longitudinal overshoot past either endpoint, in pixels. Raises
    "point at infinity" if any of the three points cannot be
    dehomogenized.
    """
    if not (math.isfinite(tol) and tol >= 0.0):
        raise ValueError("tol must be non-negative")
    p = xp.dehom()
    a = g.epipole.dehom()
    b = g.at_infinity.dehom()
    ab = b - a
    length = float(np.linalg.norm(ab))
    if length <= tol:
        return bool(np.linalg.norm(p - a) <= tol)
    unit = ab / length
    lon = float((p - a) @ unit)
    perp = abs(float(unit[0] * (p - a)[1] - unit[1] * (p - a)[0]))
    return bool(-tol <= lon <= length + tol and perp <= tol)
