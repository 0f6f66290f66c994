"""Synthetic scenes with exact, render-based ground truth.

The renderer projects world geometry with the full pinhole model
K @ (r^T (X - t)), never through a homography, so its output is an
independent oracle for the reprojection and warping code. Points are
drawn as z-buffered single-pixel splats at the rounded projection; an
optional textured plane is shaded per pixel by exact ray-plane
intersection, which makes the plane a smooth continuous-image target
suitable for interpolation-error comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Intrinsics,
    Plane,
    PoseSE3,
    rot_x,
    rot_y,
    rotation_from_rotvec,
)
from .rng import rng_from
from .warp import Raster

_DEFAULT_CAM = Intrinsics(128.0, 128.0, 127.5, 127.5, 256, 256)

# per-channel phase offsets of the smooth checker texture
_TEX_PHASES = ((0.0, 0.0), (1.1, 2.3), (2.9, 0.7))


def plane_texture(s, t, cell: float) -> np.ndarray:
    """Smooth periodic checker texture, (..., 3) values in [0, 1].

    Built from products of sines so the image is band-limited; bilinear
    resampling error stays small, unlike a hard-edged checkerboard.
    """
    if cell <= 0.0:
        raise ValueError("cell must be positive")
    a = 2.0 * np.pi * np.asarray(s, dtype=float) / cell
    b = 2.0 * np.pi * np.asarray(t, dtype=float) / cell
    chans = [0.5 + 0.5 * np.sin(a + pa) * np.sin(b + pb) for pa, pb in _TEX_PHASES]
    return np.stack(chans, axis=-1)


def _plane_basis(plane: Plane) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Orthonormal in-plane axes (e1, e2) and a point p0 on the plane."""
    n = plane.n
    seed_axis = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = seed_axis - (seed_axis @ n) * n
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    p0 = -plane.d * n
    return e1, e2, p0


@dataclass(frozen=True)
class SynthScene:
    """Point cloud (positions + colors) with an optional textured plane."""

    points: np.ndarray
    colors: np.ndarray
    plane: Plane | None
    cell: float
    seed: int

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        cols = np.array(self.colors, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError("points must be a non-empty (N, 3) array")
        if cols.shape != (pts.shape[0], 3):
            raise ValueError("colors must be (N, 3) matching points")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(cols))):
            raise ValueError("points and colors must be finite")
        if self.cell <= 0.0:
            raise ValueError("cell must be positive")
        pts.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "colors", cols)


def gen_scene(
    seed: int,
    n_points: int,
    depth_range: tuple[float, float] = (2.0, 10.0),
    k: Intrinsics = _DEFAULT_CAM,
    plane: Plane | None = None,
    cell: float = 1.0,
) -> SynthScene:
    """Deterministic scene inside the reference camera's view frustum.

    The reference camera sits at the identity pose. Without a plane,
    points get uniform depths in depth_range and random colors. With a
    plane, points are dropped onto it along their viewing rays and
    colored by the plane texture, so splats and plane shading agree.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    dmin, dmax = depth_range
    if not (0.0 < dmin < dmax):
        raise ValueError("depth_range must satisfy 0 < min < max")
    rng = rng_from(seed, "synth-scene")
    # keep a margin so points stay visible under small camera motion
    ux = rng.uniform(0.05 * k.width, 0.95 * k.width, size=n_points)
    uy = rng.uniform(0.05 * k.height, 0.95 * k.height, size=n_points)
    dirs = np.stack([(ux - k.cx) / k.fx, (uy - k.cy) / k.fy, np.ones(n_points)], axis=1)
    if plane is None:
        z = rng.uniform(dmin, dmax, size=n_points)
        pts = dirs * z[:, None]
        cols = rng.uniform(0.0, 1.0, size=(n_points, 3))
    else:
        denom = dirs @ plane.n
        with np.errstate(divide="ignore"):
            tstar = -plane.d / denom
        if np.any(~np.isfinite(tstar)) or np.any(tstar <= 0.0):
            raise ValueError("plane is not visible along every sampled ray")
        pts = dirs * tstar[:, None]
        e1, e2, p0 = _plane_basis(plane)
        rel = pts - p0
        cols = plane_texture(rel @ e1, rel @ e2, cell)
    return SynthScene(pts, cols, plane, cell, int(seed))


def project_points(scene: SynthScene, k: Intrinsics, pose: PoseSE3):
    """Continuous pixel projections and camera depths of the scene points.

    pose is camera-to-world. Returns (uv (N, 2), depth (N,)); entries with
    non-positive depth are not meaningful for imaging and carry NaN uv.
    """
    cam = (scene.points - pose.t) @ pose.r
    z = cam[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = k.fx * cam[:, 0] / z + k.cx
        v = k.fy * cam[:, 1] / z + k.cy
    uv = np.stack([u, v], axis=1)
    uv[z <= 1e-9] = np.nan
    return uv, z


def render(scene: SynthScene, k: Intrinsics, pose: PoseSE3) -> Raster:
    """Render the scene from a camera-to-world pose; background is 0.

    The plane is shaded per pixel via exact ray-plane intersection; points
    are splatted to the nearest pixel (round half up) with z-buffering
    against the plane and each other.
    """
    h, w = k.height, k.width
    img = np.zeros((h, w, 3), dtype=np.float64)
    zbuf = np.full((h, w), np.inf)

    if scene.plane is not None:
        ys, xs = np.mgrid[0:h, 0:w].astype(float)
        dirs_cam = np.stack(
            [(xs - k.cx) / k.fx, (ys - k.cy) / k.fy, np.ones((h, w))], axis=-1
        )
        dirs_w = dirs_cam @ pose.r.T
        denom = dirs_w @ scene.plane.n
        offset = float(scene.plane.n @ pose.t + scene.plane.d)
        with np.errstate(divide="ignore", invalid="ignore"):
            tstar = -offset / denom
        # camera-frame depth equals tstar because dirs_cam has unit z
        hit = np.isfinite(tstar) & (tstar > 1e-9)
        pts = pose.t + tstar[..., None] * dirs_w
        e1, e2, p0 = _plane_basis(scene.plane)
        rel = pts - p0
        tex = plane_texture(rel @ e1, rel @ e2, scene.cell)
        img[hit] = tex[hit]
        zbuf[hit] = tstar[hit]

    uv, z = project_points(scene, k, pose)
    front = z > 1e-9
    px = np.floor(uv[:, 0] + 0.5)
    py = np.floor(uv[:, 1] + 0.5)
    ok = front & np.isfinite(px) & np.isfinite(py)
    ok &= (px >= 0) & (px <= w - 1) & (py >= 0) & (py <= h - 1)
    order = np.argsort(-z[ok], kind="stable")
    idx = np.flatnonzero(ok)[order]
    for i in idx:
        x, y = int(px[i]), int(py[i])
        if z[i] < zbuf[y, x]:
            img[y, x] = scene.colors[i]
            zbuf[y, x] = z[i]
    return Raster(img.astype(np.float32))


_KINDS = ("static", "pan", "tilt", "translate", "arc", "random")


@dataclass(frozen=True)
class TrajectorySpec:
    """Parameters of a deterministic camera move.

    kind: one of static, pan, tilt, translate, arc, random. angle_deg is
    the total rotation (pan/tilt/arc) or the random-walk rotation scale;
    displacement is the total translation in meters (random uses its
    norm as the walk scale). arc orbits the point orbit_distance meters
    along the start viewing axis.
    """

    kind: str
    n_frames: int
    angle_deg: float = 10.0
    displacement: tuple[float, float, float] = (0.5, 0.0, 0.0)
    orbit_distance: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown trajectory kind: {self.kind!r}")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.kind == "arc" and self.orbit_distance <= 0.0:
            raise ValueError("orbit_distance must be positive")


def make_trajectory(spec: TrajectorySpec, start: PoseSE3) -> list[PoseSE3]:
    """n_frames camera-to-world poses beginning exactly at start."""
    n = spec.n_frames
    if n == 1 or spec.kind == "static":
        return [start] * n
    frac = np.arange(n) / (n - 1)
    disp = np.asarray(spec.displacement, dtype=float)

    if spec.kind in ("pan", "tilt"):
        rot = rot_y if spec.kind == "pan" else rot_x
        out = [start]
        for a in frac[1:]:
            out.append(PoseSE3(rot(math.radians(spec.angle_deg) * a) @ start.r, start.t))
        return out

    if spec.kind == "translate":
        return [start] + [PoseSE3(start.r, start.t + a * disp) for a in frac[1:]]

    if spec.kind == "arc":
        center = start.t + spec.orbit_distance * (start.r @ np.array([0.0, 0.0, 1.0]))
        out = [start]
        for a in frac[1:]:
            ry = rot_y(math.radians(spec.angle_deg) * a)
            out.append(PoseSE3(ry @ start.r, center + ry @ (start.t - center)))
        return out

    # random: cumulative small steps, bounded by the per-step scales
    rng = rng_from(spec.seed, "trajectory-random")
    sig_r = math.radians(spec.angle_deg) / (n - 1)
    sig_t = float(np.linalg.norm(disp)) / (n - 1)
    out = [start]
    for _ in range(n - 1):
        dr = rotation_from_rotvec(rng.normal(0.0, sig_r, size=3))
        dt = rng.normal(0.0, sig_t, size=3)
        prev = out[-1]
        out.append(PoseSE3(dr @ prev.r, prev.t + dt))
    return out
