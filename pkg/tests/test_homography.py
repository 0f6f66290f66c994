import numpy as np
import pytest

from camwarp.geometry import Intrinsics, Plane, intrinsics_matrix, rotation_from_rotvec
from camwarp.homography import (
    DepthValue,
    HPoint2,
    epipolar_geometry,
    infinite_homography,
    on_parallax_segment,
    plane_homography,
    reproject,
)

IDENT_K = Intrinsics(1.0, 1.0, 0.0, 0.0, 2, 2)


def rand_k(rng):
    w = int(rng.integers(64, 1024))
    h = int(rng.integers(64, 1024))
    return Intrinsics(
        rng.uniform(100, 1200),
        rng.uniform(100, 1200),
        (w - 1) / 2 + rng.uniform(-5, 5),
        (h - 1) / 2 + rng.uniform(-5, 5),
        w,
        h,
    )


def rand_motion(rng, rot_scale=0.1, t_scale=0.2):
    r = rotation_from_rotvec(rng.normal(size=3) * rot_scale)
    return r, rng.normal(size=3) * t_scale


def full_projection(ks, kt, r, t, x, z):
    # independent path: back-project with a generic matrix inverse, transform,
    # project, then dehomogenize
    xs = z * (np.linalg.inv(intrinsics_matrix(ks)) @ x)
    xt = intrinsics_matrix(kt) @ (r @ xs + t)
    return xt[:2] / xt[2]


def test_hpoint_dehom():
    assert np.array_equal(HPoint2((2.0, 4.0, 2.0)).dehom(), [1.0, 2.0])
    with pytest.raises(ValueError, match="point at infinity"):
        HPoint2((1.0, 0.0, 0.0)).dehom()


def test_hpoint_from_xy():
    p = HPoint2.from_xy(3.5, -1.0)
    assert np.array_equal(p.v, [3.5, -1.0, 1.0])


def test_depth_value_positive():
    assert DepthValue(2.5).z == 2.5
    with pytest.raises(ValueError):
        DepthValue(0.0)
    with pytest.raises(ValueError):
        DepthValue(-1.0)


def test_infinite_homography_identity():
    h = infinite_homography(IDENT_K, IDENT_K, np.eye(3))
    assert np.array_equal(h, np.eye(3))


def test_infinite_homography_matches_matrix_form():
    rng = np.random.default_rng(31)
    for _ in range(200):
        ks, kt = rand_k(rng), rand_k(rng)
        r, _ = rand_motion(rng, rot_scale=1.0)
        want = intrinsics_matrix(kt) @ r @ np.linalg.inv(intrinsics_matrix(ks))
        got = infinite_homography(ks, kt, r)
        assert np.max(np.abs(got - want)) <= 1e-9 * max(1.0, np.abs(want).max())


def test_infinite_homography_rejects_non_rotation():
    with pytest.raises(ValueError):
        infinite_homography(IDENT_K, IDENT_K, np.eye(3) * 1.01)


def test_plane_homography_frozen_case():
    # K = I, R = I, t = (0,0,1), n = (0,0,1), d = 2: the formula reduces to
    # I - t n^T / 2, which scales the third row by 0.5
    h = plane_homography(
        IDENT_K, IDENT_K, np.eye(3), np.array([0.0, 0.0, 1.0]), Plane((0.0, 0.0, 1.0), 2.0)
    )
    assert np.array_equal(h, np.diag([1.0, 1.0, 0.5]))


def test_plane_homography_rejects_plane_through_origin():
    with pytest.raises(ValueError):
        plane_homography(
            IDENT_K, IDENT_K, np.eye(3), np.zeros(3), Plane((0.0, 0.0, 1.0), 0.0)
        )


def test_plane_homography_zero_translation_equals_infinite():
    rng = np.random.default_rng(33)
    for _ in range(50):
        ks, kt = rand_k(rng), rand_k(rng)
        r, _ = rand_motion(rng, rot_scale=1.0)
        hp = plane_homography(ks, kt, r, np.zeros(3), Plane.frontal(4.0))
        assert np.array_equal(hp, infinite_homography(ks, kt, r))


def test_plane_homography_approaches_infinite_as_depth_grows():
    rng = np.random.default_rng(35)
    for _ in range(20):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        hinf = infinite_homography(ks, kt, r)
        scale = np.linalg.norm(hinf)
        gaps = []
        for depth in (1e2, 1e4, 1e6, 1e9):
            hp = plane_homography(ks, kt, r, t, Plane.frontal(depth))
            gaps.append(np.linalg.norm(hp - hinf) / scale)
        assert gaps[0] > gaps[1] > gaps[2] > gaps[3]
        assert gaps[3] <= 1e-6
        # the gap decays like c / depth
        c = gaps[0] * 1e2
        assert abs(gaps[1] * 1e4 - c) <= 1e-6 * c
        assert abs(gaps[2] * 1e6 - c) <= 1e-4 * c


def test_plane_homography_far_plane_matches_infinite():
    rng = np.random.default_rng(36)
    for _ in range(20):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        hinf = infinite_homography(ks, kt, r)
        hp = plane_homography(ks, kt, r, t, Plane.frontal(1e12))
        assert np.linalg.norm(hp - hinf) <= 1e-6 * np.linalg.norm(hinf)


def test_plane_homography_maps_plane_points_exactly():
    rng = np.random.default_rng(37)
    for _ in range(100):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        depth = rng.uniform(2.0, 10.0)
        h = plane_homography(ks, kt, r, t, Plane.frontal(depth))
        x = HPoint2.from_xy(
            rng.uniform(0, ks.width - 1), rng.uniform(0, ks.height - 1)
        )
        mapped = HPoint2(h @ x.v).dehom()
        want = full_projection(ks, kt, r, t, x.v, depth)
        assert np.max(np.abs(mapped - want)) <= 1e-6


def test_reproject_matches_full_projection():
    rng = np.random.default_rng(39)
    for _ in range(1000):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        x = HPoint2.from_xy(
            rng.uniform(0, ks.width - 1), rng.uniform(0, ks.height - 1)
        )
        z = rng.uniform(0.5, 50.0)
        # keep the point in front of the target camera
        while (r @ (z * np.linalg.inv(intrinsics_matrix(ks)) @ x.v))[2] + t[2] < 0.05:
            _, t = rand_motion(rng)
        got = reproject(ks, kt, r, t, x, z).dehom()
        want = full_projection(ks, kt, r, t, x.v, z)
        assert np.max(np.abs(got - want)) <= 1e-9 * max(1.0, np.abs(want).max())


def test_reproject_far_depth_matches_infinite_homography():
    # the parallax term K_t t / Z vanishes as depth grows, leaving the pure
    # rotation map; points are drawn near the image center to keep the ray
    # well in front of both cameras
    rng = np.random.default_rng(38)
    for _ in range(50):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        x = HPoint2.from_xy(
            rng.uniform(0.3, 0.7) * (ks.width - 1),
            rng.uniform(0.3, 0.7) * (ks.height - 1),
        )
        got = reproject(ks, kt, r, t, x, 1e12).dehom()
        want = HPoint2(infinite_homography(ks, kt, r) @ x.v).dehom()
        assert np.max(np.abs(got - want)) <= 1e-9


def test_reproject_accepts_depth_value():
    x = HPoint2.from_xy(0.5, 0.5)
    a = reproject(IDENT_K, IDENT_K, np.eye(3), np.zeros(3), x, 2.0)
    b = reproject(IDENT_K, IDENT_K, np.eye(3), np.zeros(3), x, DepthValue(2.0))
    assert np.array_equal(a.v, b.v)


def test_reproject_validates_inputs():
    with pytest.raises(ValueError):
        reproject(
            IDENT_K, IDENT_K, np.eye(3), np.zeros(3), HPoint2.from_xy(0, 0), 0.0
        )
    with pytest.raises(ValueError):
        reproject(
            IDENT_K, IDENT_K, np.eye(3), np.zeros(3), HPoint2((0.0, 0.0, 2.0)), 1.0
        )


def test_reproject_zero_motion_is_identity_map():
    x = HPoint2.from_xy(12.25, 7.75)
    k = Intrinsics(100.0, 100.0, 63.5, 63.5, 128, 128)
    got = reproject(k, k, np.eye(3), np.zeros(3), x, 3.0).dehom()
    assert np.max(np.abs(got - [12.25, 7.75])) <= 1e-12


def test_epipolar_frozen_case():
    # identity intrinsics and rotation, translation along x: the epipole is at
    # infinity in the x direction and the epipolar line through (0, 0) is y = 0
    g = epipolar_geometry(
        IDENT_K, IDENT_K, np.eye(3), np.array([1.0, 0.0, 0.0]), HPoint2.from_xy(0, 0)
    )
    assert np.array_equal(g.epipole.v, [1.0, 0.0, 0.0])
    assert np.array_equal(g.at_infinity.v, [0.0, 0.0, 1.0])
    line = g.line / np.linalg.norm(g.line)
    assert np.allclose(np.abs(line), [0.0, 1.0, 0.0], atol=1e-15)


def test_epipolar_line_contains_both_generators():
    rng = np.random.default_rng(41)
    for _ in range(200):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        if np.linalg.norm(t) < 1e-3:
            continue
        x = HPoint2.from_xy(
            rng.uniform(0, ks.width - 1), rng.uniform(0, ks.height - 1)
        )
        g = epipolar_geometry(ks, kt, r, t, x)
        xinf = infinite_homography(ks, kt, r) @ x.v
        ln = np.linalg.norm(g.line)
        assert abs(g.line @ g.epipole.v) <= 1e-9 * ln * np.linalg.norm(g.epipole.v)
        assert abs(g.line @ xinf) <= 1e-9 * ln * np.linalg.norm(xinf)


def test_epipolar_rejects_zero_translation():
    with pytest.raises(ValueError):
        epipolar_geometry(
            IDENT_K, IDENT_K, np.eye(3), np.zeros(3), HPoint2.from_xy(0, 0)
        )


def test_epipolar_rejects_degenerate_direction():
    # x maps onto the epipole itself, so no line is defined
    with pytest.raises(ValueError):
        epipolar_geometry(
            IDENT_K,
            IDENT_K,
            np.eye(3),
            np.array([0.0, 0.0, 1.0]),
            HPoint2((0.0, 0.0, 1.0)),
        )


def test_reprojections_lie_on_epipolar_line():
    rng = np.random.default_rng(43)
    for _ in range(100):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        t[2] = abs(t[2]) + 0.05
        x = HPoint2.from_xy(
            rng.uniform(0, ks.width - 1), rng.uniform(0, ks.height - 1)
        )
        g = epipolar_geometry(ks, kt, r, t, x)
        ln = np.linalg.norm(g.line)
        for z in (0.5, 2.0, 8.0, 64.0, 1e6):
            xp = reproject(ks, kt, r, t, x, z)
            assert abs(g.line @ xp.v) <= 1e-9 * ln * np.linalg.norm(xp.v)


def test_on_parallax_segment_sweep():
    rng = np.random.default_rng(45)
    for _ in range(100):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        t[2] = abs(t[2]) + 0.05
        x = HPoint2.from_xy(
            rng.uniform(0, ks.width - 1), rng.uniform(0, ks.height - 1)
        )
        g = epipolar_geometry(ks, kt, r, t, x)
        for z in (0.3, 1.0, 5.0, 40.0, 1e5):
            assert on_parallax_segment(reproject(ks, kt, r, t, x, z), g)


def test_segment_endpoints_are_on_segment():
    rng = np.random.default_rng(47)
    ks, kt = rand_k(rng), rand_k(rng)
    r, t = rand_motion(rng)
    t[2] = abs(t[2]) + 0.1
    x = HPoint2.from_xy(100.0, 50.0)
    g = epipolar_geometry(ks, kt, r, t, x)
    assert on_parallax_segment(g.epipole, g)
    xinf = HPoint2(infinite_homography(ks, kt, r) @ x.v)
    assert on_parallax_segment(xinf, g)


def test_off_segment_points_are_rejected():
    rng = np.random.default_rng(49)
    ks, kt = rand_k(rng), rand_k(rng)
    r, t = rand_motion(rng)
    t[2] = abs(t[2]) + 0.1
    x = HPoint2.from_xy(100.0, 50.0)
    g = epipolar_geometry(ks, kt, r, t, x)
    e = g.epipole.dehom()
    xinf = HPoint2(infinite_homography(ks, kt, r) @ x.v).dehom()
    u = xinf - e
    # perpendicular offset off the line
    perp = np.array([-u[1], u[0]]) / np.linalg.norm(u)
    assert not on_parallax_segment(HPoint2.from_xy(*(e + 0.5 * u + 3.0 * perp)), g)
    # past the infinity end of the segment
    assert not on_parallax_segment(HPoint2.from_xy(*(xinf + 2.0 * u)), g)
    # behind the epipole end
    assert not on_parallax_segment(HPoint2.from_xy(*(e - 2.0 * u)), g)


def test_on_parallax_segment_rejects_infinite_epipole():
    g = epipolar_geometry(
        IDENT_K, IDENT_K, np.eye(3), np.array([1.0, 0.0, 0.0]), HPoint2.from_xy(0, 0)
    )
    with pytest.raises(ValueError, match="point at infinity"):
        on_parallax_segment(HPoint2.from_xy(1.0, 0.0), g)


def test_parallax_parameter_monotone_in_inverse_depth():
    # with positive homogeneous depths the image point slides monotonically
    # from the infinity end toward the epipole as 1/z grows
    rng = np.random.default_rng(51)
    for _ in range(50):
        ks, kt = rand_k(rng), rand_k(rng)
        r, t = rand_motion(rng)
        t[2] = abs(t[2]) + 0.05
        x = HPoint2.from_xy(
            rng.uniform(0, ks.width - 1), rng.uniform(0, ks.height - 1)
        )
        g = epipolar_geometry(ks, kt, r, t, x)
        e = g.epipole.dehom()
        xinf = HPoint2(infinite_homography(ks, kt, r) @ x.v).dehom()
        u = xinf - e
        uu = u @ u
        zs = np.geomspace(0.2, 1e4, 50)[::-1]  # 1/z increasing
        params = []
        for z in zs:
            xp = reproject(ks, kt, r, t, x, float(z)).dehom()
            params.append((xp - e) @ u / uu)
        params = np.asarray(params)
        assert np.all(np.diff(params) < 0.0)
        assert params.min() >= -1e-12 and params.max() <= 1.0 + 1e-12
