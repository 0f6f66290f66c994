"""Camera geometry toolkit for novel-view video pipelines.

Homography warping with explicit depth-parallax handling, latent tensor
layout helpers, multi-camera dataset augmentation, a synthetic render
oracle, and trajectory/image metrics, plus a CLI (``camwarp``).
"""

from .augment import (
    DEFAULT_FOCALS_MM,
    CameraClip,
    PairSpec,
    SceneManifest,
    augment_scene,
    crop_window,
    intrinsic_augment,
    intrinsic_augment_frame,
    load_manifest,
    pair_select,
    save_manifest,
    trajectory_augment,
)
from .geometry import (
    FocalSpec,
    Intrinsics,
    Plane,
    PoseSE3,
    compose,
    focal_mm_to_px,
    intrinsics_from_matrix,
    intrinsics_matrix,
    invert,
    load_trajectory,
    relative,
    rot_x,
    rot_y,
    rot_z,
    rotation_from_rotvec,
    save_trajectory,
    transform_points,
    validate_rotation,
)
from .homography import (
    DepthValue,
    EpipolarGeom,
    HPoint2,
    epipolar_geometry,
    infinite_homography,
    on_parallax_segment,
    plane_homography,
    reproject,
)
from .layout import (
    CameraVec16,
    LatentDims,
    Tensor5,
    camera_vec16,
    concat3,
    latent_dims,
    load_tensor5,
    rf_interpolate,
    save_tensor5,
    source_camera_vec16,
    split3,
    unpack_camera_vec16,
)
from .metrics import (
    PSNR_CAP_DB,
    TrajError,
    normalize_to_first,
    psnr,
    rot_err_deg,
    ssim,
    traj_errors,
    trans_err,
)
from .synth import (
    SynthScene,
    TrajectorySpec,
    gen_scene,
    make_trajectory,
    plane_texture,
    project_points,
    render,
)
from .warp import (
    Raster,
    WarpResult,
    center_crop,
    load_png,
    load_raster,
    resize_bilinear,
    residual_compose,
    save_png,
    save_raster,
    scaled_dims,
    warp_homography,
)

__version__ = "0.1.0"
