"""Raster images and inverse-mapping bilinear warps.

A Raster is an (H, W, C) float32 array; values are in arbitrary units
(image intensities in [0, 1], latent features, ...). Warping follows the
inverse-mapping rule: every output pixel is bilinearly sampled from the
source at the inverse-transformed location, so no holes appear. Pixels
whose sample footprint leaves the source raster are set to 0 and reported
in a validity mask.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

_DET_EPS = 1e-12
_W_EPS = 1e-12

_RAST_MAGIC = b"RAST"


@dataclass(frozen=True)
class Raster:
    """Dense (H, W, C) float32 grid with finite values."""

    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.data, dtype=np.float32)
        if a.ndim != 3:
            raise ValueError("raster data must have shape (H, W, C)")
        if a.shape[0] < 1 or a.shape[1] < 1 or a.shape[2] < 1:
            raise ValueError("raster dimensions must be >= 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("raster values must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @staticmethod
    def zeros(height: int, width: int, channels: int) -> "Raster":
        return Raster(np.zeros((height, width, channels), dtype=np.float32))


@dataclass(frozen=True)
class WarpResult:
    """Warped raster plus validity mask.

    mask is true where the inverse-mapped sample footprint lies fully
    inside the source raster.
    """

    raster: Raster
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.dtype != np.bool_ or m.shape != (self.raster.height, self.raster.width):
            raise ValueError("mask must be (H, W) booleans matching the raster")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)


def _bilinear_gather(data: np.ndarray, sx: np.ndarray, sy: np.ndarray, valid: np.ndarray):
    """Sample data (H, W, C) at real coordinates; invalid entries become 0."""
    h, w = data.shape[:2]
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0i = np.clip(x0.astype(np.int64), 0, w - 1)
    y0i = np.clip(y0.astype(np.int64), 0, h - 1)
    x1i = np.clip(x0i + 1, 0, w - 1)
    y1i = np.clip(y0i + 1, 0, h - 1)
    d = data.astype(np.float64, copy=False)
    v00 = d[y0i, x0i]
    v01 = d[y0i, x1i]
    v10 = d[y1i, x0i]
    v11 = d[y1i, x1i]
    wx = fx[..., None]
    wy = fy[..., None]
    out = (
        (1.0 - wx) * (1.0 - wy) * v00
        + wx * (1.0 - wy) * v01
        + (1.0 - wx) * wy * v10
        + wx * wy * v11
    )
    out[~valid] = 0.0
    return out


def warp_homography(src: Raster, h, out_height: int, out_width: int) -> WarpResult:
    """Warp src with a homography mapping source coords to target coords.

    Each output pixel u samples the source at dehom(inv(h) @ [ux, uy, 1]).
    Samples whose bilinear footprint leaves [0, W-1] x [0, H-1], or whose
    dehomogenization denominator is ~0, are masked out and set to 0.
    """
    if out_height < 1 or out_width < 1:
        raise ValueError("output dimensions must be >= 1")
    hm = np.asarray(h, dtype=float)
    if hm.shape != (3, 3) or not np.all(np.isfinite(hm)):
        raise ValueError("homography must be a finite 3x3 matrix")
    if abs(float(np.linalg.det(hm))) <= _DET_EPS:
        raise ValueError("homography is singular")
    hinv = np.eye(3) if np.array_equal(hm, np.eye(3)) else np.linalg.inv(hm)

    ys, xs = np.mgrid[0:out_height, 0:out_width].astype(float)
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    good = np.abs(denom) > _W_EPS
    safe = np.where(good, denom, 1.0)
    sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / safe
    sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / safe
    good &= np.isfinite(sx) & np.isfinite(sy)
    inside = (
        good
        & (sx >= 0.0)
        & (sx <= src.width - 1.0)
        & (sy >= 0.0)
        & (sy <= src.height - 1.0)
    )
    out = _bilinear_gather(src.data, sx, sy, inside)
    return WarpResult(Raster(out.astype(np.float32)), inside)


def _resize_grid(n_new: int, n_old: int) -> np.ndarray:
    # corner-aligned: u -> u * (old - 1) / (new - 1); a single sample hits the center
    if n_new == 1:
        return np.array([(n_old - 1) / 2.0])
    return np.linspace(0.0, float(n_old - 1), n_new)


def resize_bilinear(src: Raster, new_height: int, new_width: int) -> Raster:
    """Corner-aligned bilinear resize."""
    if new_height < 1 or new_width < 1:
        raise ValueError("output dimensions must be >= 1")
    sx = _resize_grid(new_width, src.width)
    sy = _resize_grid(new_height, src.height)
    gx, gy = np.meshgrid(sx, sy)
    valid = np.ones(gx.shape, dtype=bool)
    out = _bilinear_gather(src.data, gx, gy, valid)
    return Raster(out.astype(np.float32))


def scaled_dims(height: int, width: int, ratio: float) -> tuple[int, int]:
    """Dimensions after scaling by ratio: round half to even, minimum 1."""
    if not (np.isfinite(ratio) and ratio > 0.0):
        raise ValueError("ratio must be positive")
    return (
        max(1, int(round(height * ratio))),
        max(1, int(round(width * ratio))),
    )


def center_crop(src: Raster, out_height: int, out_width: int) -> Raster:
    """Centered crop; offsets are floor((src - out) / 2) per axis."""
    if out_height < 1 or out_width < 1:
        raise ValueError("crop dimensions must be >= 1")
    if out_height > src.height or out_width > src.width:
        raise ValueError("crop dimensions exceed the source raster")
    y0 = (src.height - out_height) // 2
    x0 = (src.width - out_width) // 2
    return Raster(src.data[y0 : y0 + out_height, x0 : x0 + out_width].copy())


def residual_compose(base: Raster, warped: Raster, residual=None) -> Raster:
    """Compositing contract: out = base + residual(warped).

    residual is a callable Raster -> Raster; the default stand-in is the
    zero map, which returns base unchanged.
    """
    if residual is None:
        return base
    r = residual(warped)
    if r.data.shape != base.data.shape:
        raise ValueError("residual output shape must match the base raster")
    return Raster(base.data.astype(np.float64) + r.data.astype(np.float64))


def save_raster(r: Raster, path) -> None:
    """Bit-exact binary dump: magic "RAST", u32 LE h/w/c, f32 LE payload."""
    header = struct.pack("<4sIII", _RAST_MAGIC, r.height, r.width, r.channels)
    Path(path).write_bytes(header + r.data.astype("<f4", copy=False).tobytes())


def load_raster(path) -> Raster:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != _RAST_MAGIC:
        raise ValueError(f"{path}: not a raster dump")
    h, w, c = struct.unpack("<III", blob[4:16])
    payload = blob[16:]
    if len(payload) != h * w * c * 4:
        raise ValueError(f"{path}: truncated raster payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(h, w, c)
    return Raster(data.astype(np.float32))


def save_png(r: Raster, path) -> None:
    """8-bit PNG with round-half-up quantization of [0, 1] values."""
    if r.channels not in (1, 3):
        raise ValueError("PNG output supports 1 or 3 channels")
    q = np.floor(np.clip(r.data.astype(np.float64), 0.0, 1.0) * 255.0 + 0.5)
    q = q.astype(np.uint8)
    if r.channels == 1:
        img = Image.fromarray(q[:, :, 0], mode="L")
    else:
        img = Image.fromarray(q, mode="RGB")
    img.save(Path(path), format="PNG")


def load_png(path) -> Raster:
    """Read an 8-bit PNG into [0, 1] floats (grayscale stays 1-channel)."""
    with Image.open(Path(path)) as img:
        mode = "L" if img.mode == "L" else "RGB"
        a = np.asarray(img.convert(mode), dtype=np.float32) / 255.0
    if a.ndim == 2:
        a = a[:, :, None]
    return Raster(a)
