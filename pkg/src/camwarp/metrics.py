"""Trajectory and image-fidelity metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .geometry import PoseSE3, relative, validate_rotation
from .warp import Raster

PSNR_CAP_DB = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5


def rot_err_deg(r_pred, r_gt) -> float:
    """Geodesic rotation error in degrees.

    arccos of the clamped trace identity; both inputs must be rotations
    within 1e-6.
    """
    a = np.asarray(r_pred, dtype=float)
    b = np.asarray(r_gt, dtype=float)
    for m in (a, b):
        if not validate_rotation(m, 1e-6):
            raise ValueError("input is not a rotation matrix")
    # bitwise-equal inputs have zero distance; the trace identity would
    # report a spurious ~1e-6 degrees from acos near 1
    if np.array_equal(a, b):
        return 0.0
    cosv = (float(np.trace(a @ b.T)) - 1.0) / 2.0
    return math.degrees(math.acos(min(1.0, max(-1.0, cosv))))


def trans_err(t_pred, t_gt) -> float:
    """Euclidean distance between translations, in meters."""
    a = np.asarray(t_pred, dtype=float).reshape(3)
    b = np.asarray(t_gt, dtype=float).reshape(3)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("translations must be finite")
    return float(np.linalg.norm(a - b))


def normalize_to_first(traj: Sequence[PoseSE3]) -> list[PoseSE3]:
    """Re-express every pose relative to the first one."""
    if len(traj) == 0:
        raise ValueError("trajectory must be non-empty")
    first = traj[0]
    # relative(first, first) is the identity exactly; computing it in floats
    # would leave rounding residue that acos amplifies near zero angle
    return [PoseSE3.identity()] + [relative(first, p) for p in traj[1:]]


@dataclass(frozen=True)
class TrajError:
    """Per-frame pose errors plus their means."""

    rot_deg: tuple[float, ...]
    trans_m: tuple[float, ...]
    mean_rot_deg: float
    mean_trans_m: float


def traj_errors(
    pred: Sequence[PoseSE3], gt: Sequence[PoseSE3], prenormalize: bool = True
) -> TrajError:
    """Frame-wise rotation/translation errors between two trajectories.

    With prenormalize (the default) both trajectories are first re-based
    to their own first pose, which makes the result invariant to a common
    rigid transform of either input.
    """
    if len(pred) != len(gt) or len(pred) == 0:
        raise ValueError("trajectories must be non-empty and equal length")
    if prenormalize:
        pred = normalize_to_first(pred)
        gt = normalize_to_first(gt)
    rots = tuple(rot_err_deg(p.r, g.r) for p, g in zip(pred, gt))
    trans = tuple(trans_err(p.t, g.t) for p, g in zip(pred, gt))
    return TrajError(
        rots,
        trans,
        float(np.mean(rots)),
        float(np.mean(trans)),
    )


def _check_pair(a: Raster, b: Raster) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError("rasters must have identical shapes")


def psnr(a: Raster, b: Raster, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB, capped at 99.0 for a zero MSE."""
    _check_pair(a, b)
    if peak <= 0.0:
        raise ValueError("peak must be positive")
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_1d(n: int, sigma: float) -> np.ndarray:
    x = np.arange(n, dtype=float) - (n - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, kern: np.ndarray) -> np.ndarray:
    # separable Gaussian, valid windows only (no padding)
    a = sliding_window_view(img, len(kern), axis=0)
    a = np.tensordot(a, kern, axes=([2], [0]))
    a = sliding_window_view(a, len(kern), axis=1)
    return np.tensordot(a, kern, axes=([2], [0]))


def ssim(a: Raster, b: Raster, peak: float = 1.0) -> float:
    """Mean structural similarity over valid 11x11 Gaussian windows.

    sigma = 1.5, C1 = (0.01 peak)^2, C2 = (0.03 peak)^2; channels are
    averaged. Requires both dimensions >= 11.
    """
    _check_pair(a, b)
    if peak <= 0.0:
        raise ValueError("peak must be positive")
    if a.height < _SSIM_WINDOW or a.width < _SSIM_WINDOW:
        raise ValueError(f"rasters must be at least {_SSIM_WINDOW} pixels per side")
    kern = _gaussian_1d(_SSIM_WINDOW, _SSIM_SIGMA)
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    vals = []
    for c in range(a.channels):
        x = a.data[:, :, c].astype(np.float64)
        y = b.data[:, :, c].astype(np.float64)
        mx = _filter_valid(x, kern)
        my = _filter_valid(y, kern)
        vx = _filter_valid(x * x, kern) - mx * mx
        vy = _filter_valid(y * y, kern) - my * my
        cxy = _filter_valid(x * y, kern) - mx * my
        num = (2.0 * mx * my + c1) * (2.0 * cxy + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        vals.append(num / den)
    return float(np.mean(vals))
