"""Latent tensor bookkeeping for video diffusion conditioning.

Covers the grid arithmetic of a causal video autoencoder (4x temporal and
16x spatial reduction, first frame kept), the 16-float per-frame camera
vector, the token-row concatenation used to condition on [source | target
| warped] latent triples, and the linear interpolation path used for flow
matching training targets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Intrinsics, PoseSE3, validate_rotation

_TEN5_MAGIC = b"TEN5"


@dataclass(frozen=True)
class LatentDims:
    """Latent grid sizes (batch, frames, height, width, features)."""

    b: int
    f: int
    h: int
    w: int
    d: int

    def __post_init__(self):
        for name in ("b", "f", "h", "w", "d"):
            v = int(getattr(self, name))
            object.__setattr__(self, name, v)
            if v < 1:
                raise ValueError(f"{name} must be >= 1")


def latent_dims(
    frames: int, height_px: int, width_px: int, feature_dim: int = 1, batch: int = 1
) -> LatentDims:
    """Latent grid for a pixel-space clip.

    frames must be 1 mod 4 (the first frame is kept, the rest are packed
    in fours); height and width must be multiples of 16.
    """
    if frames < 1 or frames % 4 != 1:
        raise ValueError("frames must be positive and equal to 1 mod 4")
    if height_px % 16 != 0 or width_px % 16 != 0 or height_px < 16 or width_px < 16:
        raise ValueError("height and width must be positive multiples of 16")
    return LatentDims(
        b=batch,
        f=1 + (frames - 1) // 4,
        h=height_px // 16,
        w=width_px // 16,
        d=feature_dim,
    )


@dataclass(frozen=True)
class CameraVec16:
    """Flat camera conditioning vector.

    Layout: rotation row-major (9), translation (3), fx, fy, cx, cy.
    """

    v: np.ndarray

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        if v.shape != (16,):
            raise ValueError("camera vector must have 16 entries")
        if not np.all(np.isfinite(v)):
            raise ValueError("camera vector must be finite")
        if not validate_rotation(v[:9].reshape(3, 3), 1e-6):
            raise ValueError("first 9 entries must form a rotation matrix")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)


def camera_vec16(k: Intrinsics, p: PoseSE3) -> CameraVec16:
    """Pack one frame's pose and intrinsics into 16 floats."""
    return CameraVec16(
        np.concatenate(
            [p.r.ravel(), p.t, np.array([k.fx, k.fy, k.cx, k.cy], dtype=float)]
        )
    )


def source_camera_vec16(k: Intrinsics) -> CameraVec16:
    """Source-latent convention: identity pose with the source intrinsics."""
    return camera_vec16(k, PoseSE3.identity())


def unpack_camera_vec16(cv: CameraVec16) -> tuple[float, float, float, float, PoseSE3]:
    """Inverse of camera_vec16: (fx, fy, cx, cy, pose)."""
    v = cv.v
    return (
        float(v[12]),
        float(v[13]),
        float(v[14]),
        float(v[15]),
        PoseSE3(v[:9].reshape(3, 3), v[9:12]),
    )


@dataclass(frozen=True)
class Tensor5:
    """(b, f, h, w, d) float32 latent tensor."""

    dims: LatentDims
    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.data, dtype=np.float32)
        want = (self.dims.b, self.dims.f, self.dims.h, self.dims.w, self.dims.d)
        if a.shape != want:
            raise ValueError(f"data shape {a.shape} does not match dims {want}")
        if not np.all(np.isfinite(a)):
            raise ValueError("tensor values must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @staticmethod
    def zeros(dims: LatentDims) -> "Tensor5":
        return Tensor5(dims, np.zeros((dims.b, dims.f, dims.h, dims.w, dims.d), np.float32))

    def as_tokens(self) -> np.ndarray:
        """(b, f*h*w, d) token view."""
        d = self.dims
        return self.data.reshape(d.b, d.f * d.h * d.w, d.d)


def _check_same_dims(*ts: Tensor5) -> LatentDims:
    dims = ts[0].dims
    for t in ts[1:]:
        if t.dims != dims:
            raise ValueError("tensors must share identical dims")
    return dims


def concat3(source: Tensor5, target: Tensor5, warped: Tensor5) -> np.ndarray:
    """Row-concatenate three latent streams for frame-wise attention.

    Returns shape (b*f, 3*h*w, d); for each (batch, frame) item the token
    rows are ordered [source | target | warped].
    """
    d = _check_same_dims(source, target, warped)
    bf = d.b * d.f
    hw = d.h * d.w
    parts = [t.data.reshape(bf, hw, d.d) for t in (source, target, warped)]
    return np.concatenate(parts, axis=1)


def split3(zc: np.ndarray, dims: LatentDims) -> tuple[Tensor5, Tensor5, Tensor5]:
    """Inverse of concat3."""
    a = np.asarray(zc, dtype=np.float32)
    bf = dims.b * dims.f
    hw = dims.h * dims.w
    if a.shape != (bf, 3 * hw, dims.d):
        raise ValueError(
            f"expected shape {(bf, 3 * hw, dims.d)} for dims {dims}, got {a.shape}"
        )
    shape = (dims.b, dims.f, dims.h, dims.w, dims.d)
    return (
        Tensor5(dims, a[:, :hw, :].reshape(shape)),
        Tensor5(dims, a[:, hw : 2 * hw, :].reshape(shape)),
        Tensor5(dims, a[:, 2 * hw :, :].reshape(shape)),
    )


def rf_interpolate(z0: Tensor5, z1: Tensor5, tt: float) -> tuple[Tensor5, Tensor5]:
    """Linear path between endpoints and its constant velocity.

    Returns (zt, vt) with zt = tt * z1 + (1 - tt) * z0 and vt = z1 - z0.
    """
    dims = _check_same_dims(z0, z1)
    if not (np.isfinite(tt) and 0.0 <= tt <= 1.0):
        raise ValueError("tt must lie in [0, 1]")
    tf = np.float32(tt)
    zt = tf * z1.data + (np.float32(1.0) - tf) * z0.data
    vt = z1.data - z0.data
    return Tensor5(dims, zt), Tensor5(dims, vt)


def save_tensor5(t: Tensor5, path) -> None:
    """Binary dump: magic "TEN5", u32 rank=5, five u32 dims, f32 payload."""
    d = t.dims
    header = struct.pack("<4sIIIIII", _TEN5_MAGIC, 5, d.b, d.f, d.h, d.w, d.d)
    Path(path).write_bytes(header + t.data.astype("<f4", copy=False).tobytes())


def load_tensor5(path) -> Tensor5:
    blob = Path(path).read_bytes()
    if len(blob) < 28 or blob[:4] != _TEN5_MAGIC:
        raise ValueError(f"{path}: not a tensor dump")
    rank, b, f, h, w, d = struct.unpack("<IIIIII", blob[4:28])
    if rank != 5:
        raise ValueError(f"{path}: unsupported rank {rank}")
    dims = LatentDims(b, f, h, w, d)
    payload = blob[28:]
    if len(payload) != b * f * h * w * d * 4:
        raise ValueError(f"{path}: truncated tensor payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(b, f, h, w, d)
    return Tensor5(dims, data.astype(np.float32))
