"""Multi-camera clip augmentation and scene manifests.

A scene is a set of synchronized camera clips that share a start pose,
frame count, image size, and physical focal length. Three augmentations
expand such scenes:

* trajectory_augment joins a reversed clip with a second clip, doubling
  the usable length while keeping every output a continuous camera move;
* crop_window cuts the same frame window out of every clip, preserving
  cross-camera synchronization;
* intrinsic_augment simulates a longer focal length by an upscale plus
  center crop, updating the per-frame intrinsics to match.

pair_select draws deterministic training pairs (two distinct clips,
optional focal overrides, a shared crop start) from a named RNG stream,
so a dataset build is reproducible from (scene_id, seed) alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .geometry import FocalSpec, Intrinsics, PoseSE3, load_trajectory, save_trajectory
from .rng import rng_from
from .warp import Raster, center_crop, resize_bilinear, scaled_dims

DEFAULT_FOCALS_MM = (18.0, 24.0, 35.0, 50.0)

_POSE_TOL = 1e-6


@dataclass(frozen=True)
class CameraClip:
    """One camera's frames and per-frame calibrated poses.

    frames holds explicit per-frame file paths; frame_pattern is a printf
    -style template used when laying the clip out on disk. Either may be
    None for metadata-only clips. timestamps track which source-timeline
    instant each frame shows (augmented clips reorder them).
    """

    cam_id: str
    trajectory: tuple[tuple[PoseSE3, Intrinsics], ...]
    focal_mm: FocalSpec
    frames: tuple[str, ...] | None = None
    frame_pattern: str | None = None
    timestamps: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.cam_id:
            raise ValueError("cam_id must be non-empty")
        traj = tuple(self.trajectory)
        if len(traj) == 0:
            raise ValueError("trajectory must be non-empty")
        first_k = traj[0][1]
        for _, k in traj:
            if (k.width, k.height) != (first_k.width, first_k.height):
                raise ValueError("all frames in a clip must share width/height")
        object.__setattr__(self, "trajectory", traj)
        if self.frames is not None:
            frames = tuple(self.frames)
            if len(frames) != len(traj):
                raise ValueError("frames length must match the trajectory")
            object.__setattr__(self, "frames", frames)
        ts = self.timestamps
        ts = tuple(range(len(traj))) if ts is None else tuple(int(v) for v in ts)
        if len(ts) != len(traj):
            raise ValueError("timestamps length must match the trajectory")
        object.__setattr__(self, "timestamps", ts)

    @property
    def frame_count(self) -> int:
        return len(self.trajectory)

    @property
    def width(self) -> int:
        return self.trajectory[0][1].width

    @property
    def height(self) -> int:
        return self.trajectory[0][1].height

    def frame_path(self, i: int) -> str:
        if self.frames is not None:
            return self.frames[i]
        if self.frame_pattern is not None:
            return self.frame_pattern % i
        raise ValueError(f"clip {self.cam_id} carries no frame references")


@dataclass(frozen=True)
class SceneManifest:
    """A synchronized multi-camera scene."""

    scene_id: str
    clips: tuple[CameraClip, ...]
    fps: float = 24.0
    synchronized: bool = True

    def __post_init__(self):
        if not self.scene_id:
            raise ValueError("scene_id must be non-empty")
        clips = tuple(self.clips)
        if len(clips) == 0:
            raise ValueError("scene must contain at least one clip")
        if not (math.isfinite(self.fps) and self.fps > 0.0):
            raise ValueError("fps must be positive")
        ref = clips[0]
        seen = set()
        for c in clips:
            if c.cam_id in seen:
                raise ValueError(f"duplicate cam_id {c.cam_id!r}")
            seen.add(c.cam_id)
            if c.frame_count != ref.frame_count:
                raise ValueError("all clips must share the frame count")
            if (c.width, c.height) != (ref.width, ref.height):
                raise ValueError("all clips must share the image size")
            if c.focal_mm != ref.focal_mm:
                raise ValueError("all clips must share the focal length")
            if self.synchronized and c.timestamps != ref.timestamps:
                raise ValueError("synchronized clips must share timestamps")
        object.__setattr__(self, "clips", clips)

    @property
    def frame_count(self) -> int:
        return self.clips[0].frame_count


def _first_pose_gap(a: CameraClip, b: CameraClip) -> float:
    pa, pb = a.trajectory[0][0], b.trajectory[0][0]
    return max(
        float(np.max(np.abs(pa.r - pb.r))),
        float(np.max(np.abs(pa.t - pb.t))),
    )


def trajectory_augment(a: CameraClip, b: CameraClip) -> CameraClip:
    """Join reversed a with b minus its first frame.

    Both clips must have the same length, focal length, and (within 1e-6)
    the same first pose; the shared first frame is dropped from b so the
    seam is not duplicated. For inputs of length n the output has 2n - 1
    frames and reads as one continuous move from a's end to b's end.
    """
    if a.frame_count != b.frame_count:
        raise ValueError("clips must have equal frame counts")
    if a.focal_mm != b.focal_mm:
        raise ValueError("clips must share the focal length")
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("clips must share the image size")
    gap = _first_pose_gap(a, b)
    if gap > _POSE_TOL:
        raise ValueError(f"first poses differ by {gap:.3g} (> {_POSE_TOL:g})")
    traj = tuple(reversed(a.trajectory)) + b.trajectory[1:]
    ts = tuple(reversed(a.timestamps)) + b.timestamps[1:]
    frames = None
    if a.frames is not None and b.frames is not None:
        frames = tuple(reversed(a.frames)) + b.frames[1:]
    return CameraClip(
        cam_id=f"{a.cam_id}-{b.cam_id}",
        trajectory=traj,
        focal_mm=a.focal_mm,
        frames=frames,
        frame_pattern=None,
        timestamps=ts,
    )


def crop_window(clips, start: int, length: int = 81) -> list[CameraClip]:
    """Slice the same frame window out of every clip."""
    clips = list(clips)
    if length < 1:
        raise ValueError("length must be >= 1")
    if start < 0:
        raise ValueError("start must be >= 0")
    out = []
    for c in clips:
        if start + length > c.frame_count:
            raise ValueError(
                f"window [{start}, {start + length}) exceeds clip {c.cam_id} "
                f"({c.frame_count} frames)"
            )
        frames = tuple(c.frame_path(i) for i in range(start, start + length))
        out.append(
            CameraClip(
                cam_id=c.cam_id,
                trajectory=c.trajectory[start : start + length],
                focal_mm=c.focal_mm,
                frames=frames,
                frame_pattern=None,
                timestamps=c.timestamps[start : start + length],
            )
        )
    return out


def intrinsic_augment_frame(frame: Raster, ratio: float) -> Raster:
    """Pixel half of the focal change: upscale by ratio, crop back."""
    if ratio <= 0.0:
        raise ValueError("ratio must be positive")
    rh, rw = scaled_dims(frame.height, frame.width, ratio)
    if rh < frame.height or rw < frame.width:
        raise ValueError("ratio must not shrink below the original size")
    return center_crop(resize_bilinear(frame, rh, rw), frame.height, frame.width)


def intrinsic_augment(
    clip: CameraClip, f_new_mm: float, allowed_mm=DEFAULT_FOCALS_MM
) -> CameraClip:
    """Retarget a clip to a strictly longer focal length.

    Every frame is meant to be upscaled by f_new / f_old and center
    cropped back to the original size (intrinsic_augment_frame); here the
    per-frame intrinsics are updated to match: focals scale by the ratio
    and the principal point is re-expressed in crop coordinates. The crop
    window always lies inside the upscaled frame, so no unseen content is
    ever synthesized. Poses are unchanged.
    """
    f_old = clip.focal_mm.focal_mm
    f_new = float(f_new_mm)
    if allowed_mm is not None and f_new not in tuple(float(v) for v in allowed_mm):
        raise ValueError(f"focal {f_new:g} mm is not in the allowed set")
    if f_new <= f_old:
        raise ValueError("new focal length must exceed the current one")
    ratio = f_new / f_old
    rh, rw = scaled_dims(clip.height, clip.width, ratio)
    x_off = (rw - clip.width) // 2
    y_off = (rh - clip.height) // 2
    traj = tuple(
        (
            pose,
            Intrinsics(
                k.fx * ratio,
                k.fy * ratio,
                k.cx * ratio - x_off,
                k.cy * ratio - y_off,
                k.width,
                k.height,
            ),
        )
        for pose, k in clip.trajectory
    )
    return replace(
        clip,
        trajectory=traj,
        focal_mm=FocalSpec(f_new, clip.focal_mm.sensor_width_mm),
    )


@dataclass(frozen=True)
class PairSpec:
    """A reproducible source/target training pair within one scene."""

    scene_id: str
    source_cam: str
    target_cam: str
    crop_start: int
    crop_length: int
    seed: int
    source_focal_mm: float | None = None
    target_focal_mm: float | None = None

    def __post_init__(self):
        if self.source_cam == self.target_cam:
            raise ValueError("source and target must be distinct clips")
        if self.crop_start < 0 or self.crop_length < 1:
            raise ValueError("crop window must be non-negative and non-empty")

    def to_json_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "source": {"cam_id": self.source_cam, "focal_mm": self.source_focal_mm},
            "target": {"cam_id": self.target_cam, "focal_mm": self.target_focal_mm},
            "crop_start": self.crop_start,
            "crop_length": self.crop_length,
            "seed": self.seed,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "PairSpec":
        return PairSpec(
            scene_id=d["scene_id"],
            source_cam=d["source"]["cam_id"],
            target_cam=d["target"]["cam_id"],
            crop_start=int(d["crop_start"]),
            crop_length=int(d["crop_length"]),
            seed=int(d["seed"]),
            source_focal_mm=d["source"]["focal_mm"],
            target_focal_mm=d["target"]["focal_mm"],
        )


def _admissible(allowed_mm, f_scene: float) -> list[float]:
    return [float(f) for f in allowed_mm if float(f) > f_scene]


def pair_select(
    scene: SceneManifest,
    seed: int,
    allowed_mm=DEFAULT_FOCALS_MM,
    crop_length: int = 81,
) -> PairSpec:
    """Deterministic pair draw for one scene.

    Uses the "pairs" RNG stream keyed by (scene_id, seed): two distinct
    clips uniformly, then for each an independent coin (p = 0.5) for a
    focal override drawn uniformly from the allowed focals strictly above
    the scene focal (skipped when none exist), then a uniform crop start.
    """
    if len(scene.clips) < 2:
        raise ValueError("pair selection needs at least two clips")
    n = scene.frame_count
    if crop_length > n:
        raise ValueError("crop_length exceeds the clip length")
    rng = rng_from(seed, "pairs", scene.scene_id)
    i = int(rng.integers(len(scene.clips)))
    j = int(rng.integers(len(scene.clips) - 1))
    if j >= i:
        j += 1
    f_scene = scene.clips[0].focal_mm.focal_mm

    def draw_override():
        if rng.random() >= 0.5:
            return None
        adm = _admissible(allowed_mm, f_scene)
        if not adm:
            return None
        return adm[int(rng.integers(len(adm)))]

    src_f = draw_override()
    tgt_f = draw_override()
    crop_start = int(rng.integers(0, n - crop_length + 1))
    return PairSpec(
        scene_id=scene.scene_id,
        source_cam=scene.clips[i].cam_id,
        target_cam=scene.clips[j].cam_id,
        crop_start=crop_start,
        crop_length=crop_length,
        seed=int(seed),
        source_focal_mm=src_f,
        target_focal_mm=tgt_f,
    )


def augment_scene(
    scene: SceneManifest, seed: int, allowed_mm=DEFAULT_FOCALS_MM, n_out: int | None = None
) -> list[tuple[SceneManifest, float]]:
    """Derive augmented scene variants, deterministically from the seed.

    Builds n_out trajectory-augmented clips (default: one per input clip)
    by joining RNG-chosen distinct clip pairs, then, when a strictly
    longer allowed focal exists, one intrinsically retargeted variant of
    the whole augmented scene at an RNG-chosen focal. Returns (scene,
    pixel_ratio) tuples; the ratio is the upscale factor to apply to the
    frames when materializing (1.0 means copy).
    """
    rng = rng_from(seed, "augment", scene.scene_id)
    n_clips = len(scene.clips)
    if n_clips < 2:
        raise ValueError("trajectory augmentation needs at least two clips")
    m = n_clips if n_out is None else int(n_out)
    if m < 1:
        raise ValueError("n_out must be >= 1")
    aug_clips = []
    for kidx in range(m):
        i = int(rng.integers(n_clips))
        j = int(rng.integers(n_clips - 1))
        if j >= i:
            j += 1
        joined = trajectory_augment(scene.clips[i], scene.clips[j])
        aug_clips.append(replace(joined, cam_id=f"aug{kidx:02d}_{joined.cam_id}"))
    traj_scene = SceneManifest(
        scene_id=f"{scene.scene_id}__traj",
        clips=tuple(aug_clips),
        fps=scene.fps,
        synchronized=scene.synchronized,
    )
    out = [(traj_scene, 1.0)]
    adm = _admissible(allowed_mm, scene.clips[0].focal_mm.focal_mm)
    if adm:
        f_new = adm[int(rng.integers(len(adm)))]
        retargeted = tuple(
            intrinsic_augment(c, f_new, allowed_mm) for c in traj_scene.clips
        )
        intr_scene = SceneManifest(
            scene_id=f"{scene.scene_id}__traj_f{f_new:g}mm",
            clips=retargeted,
            fps=scene.fps,
            synchronized=scene.synchronized,
        )
        out.append((intr_scene, f_new / scene.clips[0].focal_mm.focal_mm))
    return out


def save_manifest(scene: SceneManifest, scene_dir) -> Path:
    """Write manifest.json plus one trajectory JSON per clip.

    Clips must carry a frame_pattern (the on-disk frame layout). Output
    bytes depend only on the scene content, so identical scenes always
    serialize identically.
    """
    d = Path(scene_dir)
    d.mkdir(parents=True, exist_ok=True)
    clips_json = []
    for c in scene.clips:
        if c.frame_pattern is None:
            raise ValueError(f"clip {c.cam_id} has no frame_pattern to persist")
        traj_name = f"{c.cam_id}.traj.json"
        save_trajectory(d / traj_name, c.trajectory)
        clips_json.append(
            {"cam_id": c.cam_id, "frames": c.frame_pattern, "trajectory": traj_name}
        )
    ref = scene.clips[0]
    doc = {
        "scene_id": scene.scene_id,
        "focal_mm": ref.focal_mm.focal_mm,
        "width": ref.width,
        "height": ref.height,
        "fps": scene.fps,
        "clips": clips_json,
    }
    path = d / "manifest.json"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def load_manifest(path, sensor_width_mm: float = 36.0) -> SceneManifest:
    """Read a manifest written by save_manifest.

    Frame references are resolved relative to the manifest directory;
    frames need not exist yet (metadata-only pipelines).
    """
    p = Path(path)
    doc = json.loads(p.read_text(encoding="utf-8"))
    base = p.parent
    for key in ("scene_id", "focal_mm", "width", "height", "fps", "clips"):
        if key not in doc:
            raise ValueError(f"{path}: manifest is missing {key!r}")
    focal = FocalSpec(float(doc["focal_mm"]), sensor_width_mm)
    clips = []
    for cj in doc["clips"]:
        traj = load_trajectory(base / cj["trajectory"])
        for _, k in traj:
            if (k.width, k.height) != (int(doc["width"]), int(doc["height"])):
                raise ValueError(f"{path}: trajectory size disagrees with manifest")
        frames = tuple(str(base / (cj["frames"] % i)) for i in range(len(traj)))
        clips.append(
            CameraClip(
                cam_id=cj["cam_id"],
                trajectory=tuple(traj),
                focal_mm=focal,
                frames=frames,
                frame_pattern=cj["frames"],
            )
        )
    return SceneManifest(
        scene_id=doc["scene_id"], clips=tuple(clips), fps=float(doc["fps"])
    )
