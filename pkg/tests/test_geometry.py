"""Geometry core: frozen examples plus oracle-checked properties."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocking_engine.geometry import (
    Aabb,
    DegenerateError,
    EulerDeg,
    Placement,
    UnitQuat,
    Vec3,
    aabb_gap,
    aabb_point_distance,
    bearing_deg,
    facing_rotation_z,
    forward_vector,
    penetration,
    wrap_deg,
    world_aabb,
    world_corners,
)

# ---------------------------------------------------------------------------
# Oracles. Kept independent of the implementation under test: rotation
# matrices are assembled here from scratch in extrinsic form and corners are
# enumerated explicitly.


def oracle_rotation_matrix(rx_deg, ry_deg, rz_deg):
    """Intrinsic XYZ rotation built by explicit per-axis matrix products."""
    ax, ay, az = map(math.radians, (rx_deg, ry_deg, rz_deg))
    rx = np.array(
        [[1, 0, 0],
         [0, math.cos(ax), -math.sin(ax)],
         [0, math.sin(ax), math.cos(ax)]])
    ry = np.array(
        [[math.cos(ay), 0, math.sin(ay)],
         [0, 1, 0],
         [-math.sin(ay), 0, math.cos(ay)]])
    rz = np.array(
        [[math.cos(az), -math.sin(az), 0],
         [math.sin(az), math.cos(az), 0],
         [0, 0, 1]])
    return rx @ ry @ rz


def oracle_world_box(location, rotation_deg, dims):
    """Brute-force min/max over all 8 rotated corners of the local box."""
    w, d, h = dims
    rot = oracle_rotation_matrix(*rotation_deg)
    pts = []
    for sx in (-w / 2, w / 2):
        for sy in (-d / 2, d / 2):
            for sz in (0.0, h):
                pts.append(rot @ np.array([sx, sy, sz]) + np.asarray(location))
    pts = np.array(pts)
    return pts.min(axis=0), pts.max(axis=0)


def oracle_interval_overlap(a: Aabb, b: Aabb):
    """Per-axis interval overlap via explicit interval arithmetic."""
    out = []
    for lo_a, hi_a, lo_b, hi_b in (
        (a.min.x, a.max.x, b.min.x, b.max.x),
        (a.min.y, a.max.y, b.min.y, b.max.y),
        (a.min.z, a.max.z, b.min.z, b.max.z),
    ):
        out.append(min(hi_a, hi_b) - max(lo_a, lo_b))
    return out


finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
angles = st.floats(-720, 720, allow_nan=False, allow_infinity=False)
dims_st = st.tuples(
    st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0)
)


# ---------------------------------------------------------------------------
# wrap / angles


def test_wrap_deg_range():
    assert wrap_deg(180.0) == 180.0
    assert wrap_deg(-180.0) == 180.0
    assert wrap_deg(540.0) == 180.0
    assert wrap_deg(-90.0) == -90.0


# ---------------------------------------------------------------------------
# world_aabb


def test_world_aabb_unrotated():
    p = Placement(Vec3(0, 0, 0), EulerDeg(0, 0, 0), Vec3(2, 1, 3))
    box = world_aabb(p)
    assert box.min.as_tuple() == pytest.approx((-1, -0.5, 0))
    assert box.max.as_tuple() == pytest.approx((1, 0.5, 3))


def test_world_aabb_quarter_turn():
    p = Placement(Vec3(0, 0, 0), EulerDeg(0, 0, 90), Vec3(2, 1, 3))
    box = world_aabb(p)
    assert box.min.as_tuple() == pytest.approx((-0.5, -1, 0), abs=1e-12)
    assert box.max.as_tuple() == pytest.approx((0.5, 1, 3), abs=1e-12)


def test_world_aabb_diagonal():
    p = Placement(Vec3(0, 0, 0), EulerDeg(0, 0, 45), Vec3(2, 2, 1))
    box = world_aabb(p)
    r = math.sqrt(2)
    assert box.min.x == pytest.approx(-r, abs=1e-12)
    assert box.max.x == pytest.approx(r, abs=1e-12)
    assert box.min.y == pytest.approx(-r, abs=1e-12)
    assert box.max.y == pytest.approx(r, abs=1e-12)


@settings(max_examples=150, deadline=None)
@given(finite, finite, finite, angles, angles, angles, dims_st)
def test_world_aabb_matches_corner_oracle(x, y, z, rx, ry, rz, dims):
    p = Placement(Vec3(x, y, z), EulerDeg(rx, ry, rz), Vec3(*dims))
    box = world_aabb(p)
    lo, hi = oracle_world_box((x, y, z), (wrap_deg(rx), wrap_deg(ry), wrap_deg(rz)), dims)
    assert box.min.as_array() == pytest.approx(lo, abs=1e-9)
    assert box.max.as_array() == pytest.approx(hi, abs=1e-9)


# ---------------------------------------------------------------------------
# forward / facing / bearing


def test_forward_vector_cardinal():
    assert forward_vector(0) == pytest.approx((0, -1))
    assert forward_vector(90) == pytest.approx((1, 0), abs=1e-15)
    assert forward_vector(180) == pytest.approx((0, 1), abs=1e-15)


@given(angles)
def test_forward_vector_unit_norm(r):
    fx, fy = forward_vector(r)
    assert math.hypot(fx, fy) == pytest.approx(1.0, abs=1e-12)


def test_facing_rotation_examples():
    assert facing_rotation_z((0, 0), (1, 0)) == pytest.approx(90.0)
    assert facing_rotation_z((0, 0), (0, -1)) == pytest.approx(0.0)
    assert facing_rotation_z((0, 0), (0, 1)) == pytest.approx(180.0)


def test_facing_rotation_degenerate():
    with pytest.raises(DegenerateError):
        facing_rotation_z((1.5, 2.5), (1.5, 2.5))


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite)
def test_facing_then_forward_points_at_anchor(ax, ay, bx, by):
    if math.hypot(bx - ax, by - ay) < 1e-6:
        return
    rz = facing_rotation_z((ax, ay), (bx, by))
    fx, fy = forward_vector(rz)
    d = math.hypot(bx - ax, by - ay)
    assert fx == pytest.approx((bx - ax) / d, abs=1e-9)
    assert fy == pytest.approx((by - ay) / d, abs=1e-9)


def test_bearing_examples():
    assert bearing_deg((0, 0), (0, 1)) == pytest.approx(90.0)
    assert bearing_deg((0, 0), (1, 0)) == pytest.approx(0.0)
    assert bearing_deg((0, 0), (-1, -1)) == pytest.approx(225.0)
    with pytest.raises(DegenerateError):
        bearing_deg((3, 3), (3, 3))


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite, finite)
def test_bearing_matches_atan2_oracle(ax, ay, sx, sy):
    if (sx - ax, sy - ay) == (0.0, 0.0):
        return
    got = bearing_deg((ax, ay), (sx, sy))
    want = math.degrees(math.atan2(sy - ay, sx - ax)) % 360.0
    # circular comparison: 0 and 360 are the same bearing
    assert min(abs(got - want), 360.0 - abs(got - want)) < 1e-9
    assert 0.0 <= got < 360.0


# ---------------------------------------------------------------------------
# penetration


def unit_cube(cx, cy, cz):
    return Aabb(Vec3(cx - 0.5, cy - 0.5, cz - 0.5), Vec3(cx + 0.5, cy + 0.5, cz + 0.5))


def test_penetration_disjoint():
    assert penetration(unit_cube(0, 0, 0), unit_cube(2, 0, 0)) is None


def test_penetration_touching_is_none():
    assert penetration(unit_cube(0, 0, 0), unit_cube(1, 0, 0)) is None


def test_penetration_coincident_tiebreak():
    pen = penetration(unit_cube(0, 0, 0), unit_cube(0, 0, 0))
    assert pen is not None
    assert pen.depth == pytest.approx(1.0)
    assert pen.mtv.as_tuple() == pytest.approx((1.0, 0.0, 0.0))


def test_penetration_offset_cubes():
    pen = penetration(unit_cube(0.6, 0, 0), unit_cube(0, 0, 0))
    assert pen is not None
    assert pen.depth == pytest.approx(0.4)
    assert pen.mtv.as_tuple() == pytest.approx((0.4, 0.0, 0.0))


boxes = st.tuples(finite, finite, finite, dims_st).map(
    lambda t: Aabb(
        Vec3(t[0], t[1], t[2]),
        Vec3(t[0] + t[3][0], t[1] + t[3][1], t[2] + t[3][2]),
    )
)


@settings(max_examples=200, deadline=None)
@given(boxes, boxes)
def test_penetration_depth_symmetric(a, b):
    pa = penetration(a, b)
    pb = penetration(b, a)
    if pa is None:
        assert pb is None
    else:
        assert pb is not None
        assert pa.depth == pytest.approx(pb.depth, abs=1e-12)


def oracle_min_push(a: Aabb, b: Aabb):
    """Cheapest per-axis push-out distances, enumerated explicitly."""
    out = []
    for lo_a, hi_a, lo_b, hi_b in (
        (a.min.x, a.max.x, b.min.x, b.max.x),
        (a.min.y, a.max.y, b.min.y, b.max.y),
        (a.min.z, a.max.z, b.min.z, b.max.z),
    ):
        out.append(min(hi_b - lo_a, hi_a - lo_b))
    return out


@settings(max_examples=200, deadline=None)
@given(boxes, boxes)
def test_penetration_matches_interval_oracle_and_separates(a, b):
    overlaps = oracle_interval_overlap(a, b)
    pen = penetration(a, b)
    if min(overlaps) <= 0:
        assert pen is None
        return
    assert pen is not None
    assert pen.depth == pytest.approx(min(oracle_min_push(a, b)), abs=1e-12)
    moved = Aabb(a.min + pen.mtv, a.max + pen.mtv)
    after = penetration(moved, b)
    assert after is None or after.depth < 1e-9


# ---------------------------------------------------------------------------
# gaps and distances


def test_aabb_gap_overlapping_is_zero():
    assert aabb_gap(unit_cube(0, 0, 0), unit_cube(0.3, 0, 0)) == 0.0


def test_aabb_gap_axis_and_diagonal():
    assert aabb_gap(unit_cube(0, 0, 0), unit_cube(2, 0, 0)) == pytest.approx(1.0)
    g = aabb_gap(unit_cube(0, 0, 0), unit_cube(2, 2, 0))
    assert g == pytest.approx(math.sqrt(2.0))


def test_point_distance():
    box = unit_cube(0, 0, 0)
    assert aabb_point_distance(Vec3(0, 0, 0), box) == 0.0
    assert aabb_point_distance(Vec3(2, 0, 0), box) == pytest.approx(1.5)


# ---------------------------------------------------------------------------
# quaternions


def test_quat_compose_inverse_pair():
    q = UnitQuat.from_axis_angle_deg(Vec3(0, 1, 0), 15)
    r = UnitQuat.from_axis_angle_deg(Vec3(0.3, -0.2, 0.9), 47)
    round_trip = r.compose(q).compose(q.conjugate())
    assert round_trip.approx_equal(r, tol=1e-12)


def test_quat_matrix_matches_axis_angle():
    q = UnitQuat.from_axis_angle_deg(Vec3(0, 0, 1), 90)
    v = q.rotate(Vec3(1, 0, 0))
    assert v.as_tuple() == pytest.approx((0, 1, 0), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["x", "y", "z"]), angles), min_size=1, max_size=30))
def test_quat_norm_preserved_under_composition(steps):
    axes = {"x": Vec3(1, 0, 0), "y": Vec3(0, 1, 0), "z": Vec3(0, 0, 1)}
    q = UnitQuat.identity()
    for name, ang in steps:
        q = q.compose(UnitQuat.from_axis_angle_deg(axes[name], ang))
    assert abs(q.norm() - 1.0) < 1e-9


def test_world_corners_order_is_stable():
    p = Placement(Vec3(1, 2, 3), EulerDeg(0, 0, 0), Vec3(2, 4, 6))
    pts = world_corners(p)
    assert pts.shape == (8, 3)
    assert pts[0] == pytest.approx([0, 0, 3])      # (-w/2, -d/2, 0) + loc
    assert pts[-1] == pytest.approx([2, 4, 9])     # (+w/2, +d/2, h) + loc
