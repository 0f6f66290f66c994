"""Command line interface.

Subcommands: homography, warp, synth, augment, pairs, eval. Exit codes:
0 on success, 1 on I/O failure, 2 on validation or usage errors. All
stochastic commands are deterministic given --seed, independent of
--workers.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .augment import (
    DEFAULT_FOCALS_MM,
    CameraClip,
    SceneManifest,
    augment_scene,
    intrinsic_augment_frame,
    load_manifest,
    pair_select,
    save_manifest,
)
from .geometry import (
    FocalSpec,
    Intrinsics,
    Plane,
    PoseSE3,
    focal_mm_to_px,
    load_trajectory,
    relative,
)
from .homography import infinite_homography, plane_homography
from .metrics import psnr, ssim, traj_errors
from .rng import derive_key
from .synth import TrajectorySpec, gen_scene, make_trajectory, render
from .warp import Raster, load_png, load_raster, save_png, save_raster, warp_homography

_DEF_FOCALS_STR = ",".join(f"{f:g}" for f in DEFAULT_FOCALS_MM)


@dataclass(frozen=True)
class RunConfig:
    """Effective run options after merging flags over --config defaults."""

    seed: int = 0
    sensor_width_mm: float = 36.0
    focals: tuple[float, ...] = DEFAULT_FOCALS_MM
    workers: int = 1
    json_out: bool = False
    dry_run: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.sensor_width_mm <= 0.0:
            raise ValueError("sensor width must be positive")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if len(self.focals) == 0:
            raise ValueError("focal set must be non-empty")


def _parse_focals(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"cannot parse focal list {text!r}")
    if not vals or any(v <= 0.0 for v in vals):
        raise ValueError("focals must be a comma list of positive numbers")
    return vals


def _resolve(args) -> RunConfig:
    cfg = {}
    if getattr(args, "config", None):
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(cfg, dict):
            raise ValueError("--config must contain a JSON object")

    def pick(name, default):
        v = getattr(args, name, None)
        return cfg.get(name, default) if v is None else v

    focals = getattr(args, "focals", None)
    if focals is not None:
        focals = _parse_focals(focals)
    else:
        focals = tuple(float(v) for v in cfg.get("focals", DEFAULT_FOCALS_MM))
    return RunConfig(
        seed=int(pick("seed", 0)),
        sensor_width_mm=float(pick("sensor_width_mm", 36.0)),
        focals=focals,
        workers=int(pick("workers", 1)),
        json_out=bool(getattr(args, "json", False)),
        dry_run=bool(getattr(args, "dry_run", False)),
        out=getattr(args, "out", None),
    )


def _pmap(fn, items, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _emit(result: dict, cfg: RunConfig, human: str) -> None:
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    if cfg.json_out:
        print(json.dumps(result, indent=2))
    else:
        print(human)


def _matrix_rows(m) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(m, dtype=float)]


def _fmt_matrix(name: str, m) -> str:
    rows = [
        "  [" + "  ".join(f"{v: .9g}" for v in row) + "]"
        for row in np.asarray(m, dtype=float)
    ]
    return "\n".join([f"{name}:"] + rows)


def _load_record(path: str, frame: int):
    traj = load_trajectory(path)
    if not 0 <= frame < len(traj):
        raise ValueError(f"{path}: frame {frame} out of range (0..{len(traj) - 1})")
    return traj[frame]


def _parse_plane(text: str) -> Plane:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4:
        raise ValueError("--plane expects nx,ny,nz,d")
    n = np.array(parts[:3])
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise ValueError("plane normal must be nonzero")
    return Plane(n / norm, parts[3] / norm)


def cmd_homography(args, cfg: RunConfig) -> int:
    pose_s, ks = _load_record(args.source, args.source_frame)
    pose_t, kt = _load_record(args.target, args.target_frame)
    rel = relative(pose_t, pose_s)
    h_inf = infinite_homography(ks, kt, rel.r)
    result = {"h_inf": _matrix_rows(h_inf), "h_plane": None}
    lines = [_fmt_matrix("h_inf", h_inf)]
    if args.plane:
        h_pl = plane_homography(ks, kt, rel.r, rel.t, _parse_plane(args.plane))
        result["h_plane"] = _matrix_rows(h_pl)
        lines.append(_fmt_matrix("h_plane", h_pl))
    _emit(result, cfg, "\n".join(lines))
    return 0


def _read_image(path: str) -> Raster:
    p = Path(path)
    if p.suffix == ".rast":
        return load_raster(p)
    if p.suffix == ".png":
        return load_png(p)
    raise ValueError(f"{path}: unsupported image suffix (use .png or .rast)")


def _write_image(r: Raster, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".rast":
        save_raster(r, path)
    elif path.suffix == ".png":
        save_png(r, path)
    else:
        raise ValueError(f"{path}: unsupported image suffix (use .png or .rast)")


def _resolve_homography(args) -> np.ndarray:
    given = [
        args.matrix is not None,
        args.matrix_file is not None,
        args.source is not None,
    ]
    if sum(given) != 1:
        raise ValueError("give exactly one of --matrix, --matrix-file, --source/--target")
    if args.matrix is not None:
        vals = [float(v) for v in args.matrix.split(",")]
        if len(vals) != 9:
            raise ValueError("--matrix expects 9 comma-separated values")
        return np.array(vals).reshape(3, 3)
    if args.matrix_file is not None:
        doc = json.loads(Path(args.matrix_file).read_text(encoding="utf-8"))
        if isinstance(doc, dict):
            doc = doc.get("h_inf")
        m = np.asarray(doc, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"{args.matrix_file}: expected a 3x3 matrix")
        return m
    if args.target is None:
        raise ValueError("--source requires --target")
    pose_s, ks = _load_record(args.source, args.source_frame)
    pose_t, kt = _load_record(args.target, args.target_frame)
    rel = relative(pose_t, pose_s)
    return infinite_homography(ks, kt, rel.r)


def cmd_warp(args, cfg: RunConfig) -> int:
    if not cfg.out:
        raise ValueError("--out is required")
    src = _read_image(args.image)
    h = _resolve_homography(args)
    oh = args.height if args.height else src.height
    ow = args.width if args.width else src.width
    res = warp_homography(src, h, oh, ow)
    out = Path(cfg.out)
    _write_image(res.raster, out)
    if args.mask_out:
        mask = Raster(res.mask.astype(np.float32)[:, :, None])
        _write_image(mask, Path(args.mask_out))
    summary = {"out": str(out), "valid_fraction": float(res.mask.mean())}
    if cfg.json_out:
        print(json.dumps(summary, indent=2))
    else:
        print(f"wrote {out} (valid fraction {summary['valid_fraction']:.4f})")
    return 0


# camera moves assigned to the cameras of a synthetic scene, in order
_KIND_CYCLE = (
    ("static", {}),
    ("pan", {"angle_deg": 15.0}),
    ("tilt", {"angle_deg": 12.0}),
    ("translate", {"displacement": (0.4, 0.0, 0.0)}),
    ("arc", {"angle_deg": 25.0, "orbit_distance": 6.0}),
    ("random", {"angle_deg": 8.0, "displacement": (0.3, 0.3, 0.3)}),
    ("pan", {"angle_deg": -15.0}),
    ("tilt", {"angle_deg": -12.0}),
    ("translate", {"displacement": (0.0, 0.25, 0.0)}),
    ("arc", {"angle_deg": -25.0, "orbit_distance": 6.0}),
)


def cmd_synth(args, cfg: RunConfig) -> int:
    if not cfg.out:
        raise ValueError("--out is required")
    if args.depth_min <= 0 or args.depth_max <= args.depth_min:
        raise ValueError("depths must satisfy 0 < depth-min < depth-max")
    out = Path(cfg.out)
    focal = FocalSpec(args.focal_mm, cfg.sensor_width_mm)
    fx = focal_mm_to_px(focal, args.width)
    k = Intrinsics(
        fx, fx, (args.width - 1) / 2.0, (args.height - 1) / 2.0, args.width, args.height
    )
    plane = None if args.no_plane else Plane.frontal(args.plane_depth)
    scene_ids = []
    for s in range(args.scenes):
        scene_id = f"scene{s:04d}"
        scene3d = gen_scene(
            derive_key(cfg.seed, "synth", scene_id),
            args.points,
            (args.depth_min, args.depth_max),
            k,
            plane,
            args.cell,
        )
        clips = []
        for ci in range(args.cams):
            kind, kw = _KIND_CYCLE[ci % len(_KIND_CYCLE)]
            cam_id = f"cam{ci:02d}"
            spec = TrajectorySpec(
                kind=kind,
                n_frames=args.frames,
                seed=derive_key(cfg.seed, "synth-traj", scene_id, cam_id),
                **kw,
            )
            poses = make_trajectory(spec, PoseSE3.identity())
            clips.append(
                CameraClip(
                    cam_id=cam_id,
                    trajectory=tuple((p, k) for p in poses),
                    focal_mm=focal,
                    frame_pattern=f"{cam_id}/f_%05d.png",
                )
            )
        scene = SceneManifest(scene_id, tuple(clips), fps=args.fps)
        scene_dir = out / scene_id
        save_manifest(scene, scene_dir)
        if not cfg.dry_run:

            def render_clip(clip: CameraClip) -> None:
                (scene_dir / clip.cam_id).mkdir(parents=True, exist_ok=True)
                for i, (pose, kk) in enumerate(clip.trajectory):
                    save_png(render(scene3d, kk, pose), scene_dir / (clip.frame_pattern % i))

            _pmap(render_clip, clips, cfg.workers)
        scene_ids.append(scene_id)
    summary = {"out": str(out), "scenes": scene_ids, "dry_run": cfg.dry_run}
    if cfg.json_out:
        print(json.dumps(summary, indent=2))
    else:
        print(f"wrote {len(scene_ids)} scene(s) under {out}")
    return 0


def _materialize_clip(clip: CameraClip, scene_dir: Path, ratio: float) -> None:
    (scene_dir / clip.cam_id).mkdir(parents=True, exist_ok=True)
    for i in range(clip.frame_count):
        src = clip.frames[i]
        dst = scene_dir / (f"{clip.cam_id}/f_%05d.png" % i)
        if ratio == 1.0:
            shutil.copyfile(src, dst)
        else:
            save_png(intrinsic_augment_frame(load_png(src), ratio), dst)


def cmd_augment(args, cfg: RunConfig) -> int:
    if not cfg.out:
        raise ValueError("--out is required")
    in_dir = Path(args.in_dir)
    manifests = sorted(in_dir.rglob("manifest.json"))
    if not manifests:
        raise ValueError(f"no manifest.json found under {in_dir}")
    out = Path(cfg.out)

    def work(mpath: Path) -> list[str]:
        scene = load_manifest(mpath, cfg.sensor_width_mm)
        ids = []
        for variant, ratio in augment_scene(scene, cfg.seed, cfg.focals, args.per_scene):
            clips = tuple(
                replace(c, frame_pattern=f"{c.cam_id}/f_%05d.png") for c in variant.clips
            )
            variant = replace(variant, clips=clips)
            scene_dir = out / variant.scene_id
            save_manifest(variant, scene_dir)
            if not cfg.dry_run:
                for c in clips:
                    _materialize_clip(c, scene_dir, ratio)
            ids.append(variant.scene_id)
        return ids

    all_ids = [sid for ids in _pmap(work, manifests, cfg.workers) for sid in ids]
    summary = {"out": str(out), "scenes": all_ids, "dry_run": cfg.dry_run}
    if cfg.json_out:
        print(json.dumps(summary, indent=2))
    else:
        print(f"wrote {len(all_ids)} augmented scene(s) under {out}")
    return 0


def cmd_pairs(args, cfg: RunConfig) -> int:
    in_dir = Path(args.in_dir)
    manifests = sorted(in_dir.rglob("manifest.json"))
    if not manifests:
        raise ValueError(f"no manifest.json found under {in_dir}")
    specs = []
    for mpath in manifests:
        scene = load_manifest(mpath, cfg.sensor_width_mm)
        for i in range(args.count):
            ps = pair_select(scene, cfg.seed + i, cfg.focals, args.crop_length)
            specs.append(ps.to_json_dict())
    result = {"seed": cfg.seed, "pairs": specs}
    _emit(result, cfg, f"selected {len(specs)} pair(s) from {len(manifests)} scene(s)")
    return 0


def _mean(vals) -> float | None:
    vals = list(vals)
    return float(np.mean(vals)) if vals else None


def cmd_eval(args, cfg: RunConfig) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    pred_trajs = {p.relative_to(pred_dir).as_posix(): p for p in pred_dir.rglob("*.traj.json")}
    gt_trajs = {p.relative_to(gt_dir).as_posix(): p for p in gt_dir.rglob("*.traj.json")}
    common = sorted(set(pred_trajs) & set(gt_trajs))
    if not common:
        raise ValueError("no matching trajectory files between --pred and --gt")
    prenorm = not args.no_prenormalize

    def traj_work(name: str):
        tp = [pose for pose, _ in load_trajectory(pred_trajs[name])]
        tg = [pose for pose, _ in load_trajectory(gt_trajs[name])]
        err = traj_errors(tp, tg, prenormalize=prenorm)
        entry = {
            "name": name,
            "frames": len(tp),
            "mean_rot_deg": err.mean_rot_deg,
            "mean_trans_m": err.mean_trans_m,
        }
        return entry, err.rot_deg, err.trans_m

    traj_results = _pmap(traj_work, common, cfg.workers)

    pred_imgs = {p.relative_to(pred_dir).as_posix(): p for p in pred_dir.rglob("*.png")}
    gt_imgs = {p.relative_to(gt_dir).as_posix(): p for p in gt_dir.rglob("*.png")}
    common_imgs = sorted(set(pred_imgs) & set(gt_imgs))

    def img_work(name: str):
        a = load_png(pred_imgs[name])
        b = load_png(gt_imgs[name])
        return psnr(a, b), ssim(a, b)

    img_results = _pmap(img_work, common_imgs, cfg.workers)

    all_rot = [v for _, rots, _ in traj_results for v in rots]
    all_trans = [v for _, _, trans in traj_results for v in trans]
    report = {
        "pairs": [entry for entry, _, _ in traj_results],
        "mean_rot_deg": _mean(e["mean_rot_deg"] for e, _, _ in traj_results),
        "mean_trans_m": _mean(e["mean_trans_m"] for e, _, _ in traj_results),
        "frame_mean_rot_deg": _mean(all_rot),
        "frame_mean_trans_m": _mean(all_trans),
        "mean_psnr": _mean(p for p, _ in img_results),
        "mean_ssim": _mean(s for _, s in img_results),
        "image_count": len(common_imgs),
    }
    human = (
        f"{len(common)} trajectory pair(s): mean rotation error "
        f"{report['mean_rot_deg']:.6g} deg, mean translation error "
        f"{report['mean_trans_m']:.6g} m"
    )
    if common_imgs:
        human += (
            f"; {len(common_imgs)} image pair(s): PSNR {report['mean_psnr']:.4f} dB, "
            f"SSIM {report['mean_ssim']:.6f}"
        )
    _emit(report, cfg, human)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="base RNG seed (default 0)")
    p.add_argument(
        "--sensor-width-mm",
        dest="sensor_width_mm",
        type=float,
        default=None,
        help="sensor width used for focal conversions (default 36.0)",
    )
    p.add_argument(
        "--focals",
        type=str,
        default=None,
        help=f"comma list of allowed focal lengths in mm (default {_DEF_FOCALS_STR})",
    )
    p.add_argument("--workers", type=int, default=None, help="worker threads (default 1)")
    p.add_argument("--json", action="store_true", help="print machine-readable JSON")
    p.add_argument(
        "--dry-run",
        dest="dry_run",
        action="store_true",
        help="write manifests/metadata only, skip pixel output",
    )
    p.add_argument("--out", type=str, default=None, help="output file or directory")
    p.add_argument("--config", type=str, default=None, help="JSON defaults file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camwarp",
        description="camera homography warping, dataset augmentation, and evaluation",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("homography", help="compute view-to-view homographies")
    p.add_argument("--source", required=True, help="source trajectory JSON")
    p.add_argument("--source-frame", type=int, default=0)
    p.add_argument("--target", required=True, help="target trajectory JSON")
    p.add_argument("--target-frame", type=int, default=0)
    p.add_argument("--plane", help="finite plane nx,ny,nz,d for the induced homography")
    _add_common(p)
    p.set_defaults(func=cmd_homography)

    p = sub.add_parser("warp", help="warp an image by a homography")
    p.add_argument("--image", required=True, help="input .png or .rast")
    p.add_argument("--matrix", help="9 comma-separated row-major values")
    p.add_argument("--matrix-file", help="JSON 3x3 matrix (or homography output)")
    p.add_argument("--source", help="source trajectory JSON")
    p.add_argument("--source-frame", type=int, default=0)
    p.add_argument("--target", help="target trajectory JSON")
    p.add_argument("--target-frame", type=int, default=0)
    p.add_argument("--width", type=int, default=None, help="output width")
    p.add_argument("--height", type=int, default=None, help="output height")
    p.add_argument("--mask-out", help="write the validity mask as a PNG")
    _add_common(p)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("synth", help="generate synthetic multi-camera scenes")
    p.add_argument("--scenes", type=int, default=1)
    p.add_argument("--cams", type=int, default=10)
    p.add_argument("--frames", type=int, default=81)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=144)
    p.add_argument("--points", type=int, default=300)
    p.add_argument("--depth-min", type=float, default=2.0)
    p.add_argument("--depth-max", type=float, default=10.0)
    p.add_argument("--plane-depth", type=float, default=6.0)
    p.add_argument("--no-plane", action="store_true", help="points only, no plane")
    p.add_argument("--cell", type=float, default=1.0, help="plane texture period (m)")
    p.add_argument("--focal-mm", dest="focal_mm", type=float, default=18.0)
    p.add_argument("--fps", type=float, default=24.0)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("augment", help="augment scenes under a manifest tree")
    p.add_argument("--in", dest="in_dir", required=True, help="input manifest tree")
    p.add_argument(
        "--per-scene",
        dest="per_scene",
        type=int,
        default=None,
        help="augmented clips per scene (default: one per input clip)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("pairs", help="emit deterministic training pairs per scene")
    p.add_argument("--in", dest="in_dir", required=True, help="input manifest tree")
    p.add_argument("--count", type=int, default=1, help="pairs per scene")
    p.add_argument("--crop-length", dest="crop_length", type=int, default=81)
    _add_common(p)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("eval", help="compare predictions against ground truth")
    p.add_argument("--pred", required=True, help="prediction directory")
    p.add_argument("--gt", required=True, help="ground-truth directory")
    p.add_argument(
        "--no-prenormalize",
        dest="no_prenormalize",
        action="store_true",
        help="compare raw poses instead of first-frame-relative poses",
    )
    _add_common(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return args.func(args, cfg)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
