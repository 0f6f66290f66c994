"""Pinhole intrinsics, SE(3) camera poses, and their algebra.

Conventions used across the package:

* image frame: origin at the top-left pixel, x right, y down, pixel centers
  at integer coordinates;
* a pose is the rigid map ``X -> r @ X + t`` with t in meters. Camera
  trajectories store camera-to-world poses, so ``relative(cam_b, cam_a)``
  takes points from camera a's frame into camera b's frame;
* a plane is the locus ``n . x + d = 0`` with unit normal n.

All types are immutable values; the wrapped arrays are marked read-only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def validate_rotation(m, tol: float) -> bool:
    """True iff m is a proper rotation within tol.

    Checks ``||m.T m - I||_F <= tol`` and ``|det m - 1| <= tol``.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a = np.asarray(m, dtype=float)
    if a.shape != (3, 3) or not np.all(np.isfinite(a)):
        return False
    ortho = np.linalg.norm(a.T @ a - np.eye(3))
    return bool(ortho <= tol and abs(np.linalg.det(a) - 1.0) <= tol)


@dataclass(frozen=True)
class FocalSpec:
    """Physical focal length paired with the sensor it is measured on."""

    focal_mm: float
    sensor_width_mm: float = 36.0

    def __post_init__(self):
        if not (math.isfinite(self.focal_mm) and self.focal_mm > 0.0):
            raise ValueError("focal_mm must be positive")
        if not (math.isfinite(self.sensor_width_mm) and self.sensor_width_mm > 0.0):
            raise ValueError("sensor_width_mm must be positive")


def focal_mm_to_px(f: FocalSpec, image_width_px: int) -> float:
    """Horizontal focal length in pixels for an image of the given width."""
    if image_width_px < 1:
        raise ValueError("image width must be >= 1")
    return f.focal_mm / f.sensor_width_mm * float(image_width_px)


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole calibration in pixel units (zero skew)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if not (math.isfinite(self.fx) and self.fx > 0.0):
            raise ValueError("fx must be positive")
        if not (math.isfinite(self.fy) and self.fy > 0.0):
            raise ValueError("fy must be positive")
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError("principal point must be finite")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")


def intrinsics_matrix(k: Intrinsics) -> np.ndarray:
    """3x3 calibration matrix [[fx, 0, cx], [0, fy, cy], [0, 0, 1]]."""
    return np.array(
        [[k.fx, 0.0, k.cx], [0.0, k.fy, k.cy], [0.0, 0.0, 1.0]], dtype=float
    )


def intrinsics_from_matrix(m, width: int, height: int) -> Intrinsics:
    """Inverse of intrinsics_matrix; rejects matrices with skew or scale."""
    a = np.asarray(m, dtype=float)
    if a.shape != (3, 3):
        raise ValueError("calibration matrix must be 3x3")
    off = np.array([a[0, 1], a[1, 0], a[2, 0], a[2, 1]])
    if np.any(off != 0.0) or a[2, 2] != 1.0:
        raise ValueError("calibration matrix must be upper-triangular with unit scale")
    return Intrinsics(a[0, 0], a[1, 1], a[0, 2], a[1, 2], width, height)


def intrinsics_inverse(k: Intrinsics) -> np.ndarray:
    """Closed-form inverse of the calibration matrix."""
    return np.array(
        [
            [1.0 / k.fx, 0.0, -k.cx / k.fx],
            [0.0, 1.0 / k.fy, -k.cy / k.fy],
            [0.0, 0.0, 1.0],
        ],
        dtype=float,
    )


_ROT_TOL = 1e-9


@dataclass(frozen=True)
class PoseSE3:
    """Rigid transform (r, t): X -> r @ X + t.

    r is stored as a raw 3x3 row-major rotation matrix and must satisfy
    ``r.T r = I`` and ``det r = 1`` within 1e-9.
    """

    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        t = np.array(self.t, dtype=float).reshape(-1)
        if r.shape != (3, 3):
            raise ValueError("r must be 3x3")
        if t.shape != (3,):
            raise ValueError("t must have 3 components")
        if not np.all(np.isfinite(t)):
            raise ValueError("t must be finite")
        if not validate_rotation(r, _ROT_TOL):
            raise ValueError("r is not a rotation matrix")
        object.__setattr__(self, "r", _freeze(r))
        object.__setattr__(self, "t", _freeze(t))

    @staticmethod
    def identity() -> "PoseSE3":
        return PoseSE3(np.eye(3), np.zeros(3))


def compose(a: PoseSE3, b: PoseSE3) -> PoseSE3:
    """Composition a then-applied-after b: (a o b)(X) = a(b(X))."""
    return PoseSE3(a.r @ b.r, a.r @ b.t + a.t)


def invert(p: PoseSE3) -> PoseSE3:
    return PoseSE3(p.r.T, -(p.r.T @ p.t))


def relative(reference: PoseSE3, p: PoseSE3) -> PoseSE3:
    """p expressed in reference's frame: invert(reference) o p."""
    return compose(invert(reference), p)


def transform_points(p: PoseSE3, pts) -> np.ndarray:
    """Apply the transform to an (..., 3) array of points."""
    a = np.asarray(pts, dtype=float)
    if a.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of 3")
    return a @ p.r.T + p.t


def rot_x(angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_rotvec(v) -> np.ndarray:
    """Rotation matrix for an axis-angle vector (Rodrigues)."""
    a = np.asarray(v, dtype=float).reshape(3)
    theta = float(np.linalg.norm(a))
    if theta < 1e-12:
        return np.eye(3)
    k = a / theta
    kx = np.array(
        [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]]
    )
    return np.eye(3) + math.sin(theta) * kx + (1.0 - math.cos(theta)) * (kx @ kx)


@dataclass(frozen=True)
class Plane:
    """Plane {x : n . x + d = 0} with unit normal n; d in meters."""

    n: np.ndarray
    d: float

    def __post_init__(self):
        n = np.array(self.n, dtype=float).reshape(-1)
        if n.shape != (3,):
            raise ValueError("n must have 3 components")
        if abs(float(np.linalg.norm(n)) - 1.0) > 1e-12:
            raise ValueError("n must be a unit vector")
        if not math.isfinite(self.d):
            raise ValueError("d must be finite")
        object.__setattr__(self, "n", _freeze(n))
        object.__setattr__(self, "d", float(self.d))

    @staticmethod
    def frontal(depth: float) -> "Plane":
        """Plane z = depth with normal +z."""
        return Plane(np.array([0.0, 0.0, 1.0]), -float(depth))


def save_trajectory(path, traj: Sequence[tuple[PoseSE3, Intrinsics]]) -> None:
    """Write per-frame camera records as a JSON array.

    Record layout: {frame, r (9 row-major), t (3), fx, fy, cx, cy, width,
    height}. Floats use shortest-round-trip formatting, so a save/load
    round trip is bit exact.
    """
    records = []
    for i, (pose, k) in enumerate(traj):
        records.append(
            {
                "frame": i,
                "r": [float(v) for v in pose.r.ravel()],
                "t": [float(v) for v in pose.t],
                "fx": k.fx,
                "fy": k.fy,
                "cx": k.cx,
                "cy": k.cy,
                "width": k.width,
                "height": k.height,
            }
        )
    Path(path).write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")


def load_trajectory(path) -> list[tuple[PoseSE3, Intrinsics]]:
    """Read a trajectory written by save_trajectory."""
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(records, list):
        raise ValueError(f"{path}: trajectory file must contain a JSON array")
    out = []
    for i, rec in enumerate(records):
        if rec.get("frame") != i:
            raise ValueError(f"{path}: frame indices must be contiguous from 0")
        pose = PoseSE3(np.array(rec["r"], dtype=float).reshape(3, 3), rec["t"])
        k = Intrinsics(
            rec["fx"], rec["fy"], rec["cx"], rec["cy"], rec["width"], rec["height"]
        )
        out.append((pose, k))
    return out
