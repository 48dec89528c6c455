"""Deterministic 3D math shared by the blocking engine.

Coordinate conventions (world space, meters):
  +X right, +Y back (away from the default viewpoint), +Z up.
  An unrotated asset faces -Y; its forward vector at spin R degrees about Z
  is (sin R, -cos R).
  Placements anchor at the asset's bottom center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DegenerateError(ValueError):
    """Raised when two points coincide where a direction is required."""


def wrap_deg(angle: float) -> float:
    """Normalize an angle in degrees to (-180, 180]."""
    a = math.fmod(angle, 360.0)
    if a <= -180.0:
        a += 360.0
    elif a > 180.0:
        a -= 360.0
    return a


def ang_diff_deg(a: float, b: float) -> float:
    """Smallest absolute angular difference between two angles, in [0, 180]."""
    return abs(wrap_deg(a - b))


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite vector component: {self!r}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "Vec3":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def component(self, axis: int) -> float:
        return (self.x, self.y, self.z)[axis]

    def with_component(self, axis: int, value: float) -> "Vec3":
        parts = [self.x, self.y, self.z]
        parts[axis] = value
        return Vec3(*parts)


ZERO3 = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class EulerDeg:
    """XYZ Euler rotation in degrees, intrinsic order, each angle in (-180, 180]."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", wrap_deg(float(self.x)))
        object.__setattr__(self, "y", wrap_deg(float(self.y)))
        object.__setattr__(self, "z", wrap_deg(float(self.z)))

    def matrix(self) -> np.ndarray:
        """3x3 rotation matrix, intrinsic XYZ composition (R = Rx @ Ry @ Rz)."""
        rx, ry, rz = (math.radians(self.x), math.radians(self.y), math.radians(self.z))
        cx, sx = math.cos(rx), math.sin(rx)
        cy, sy = math.cos(ry), math.sin(ry)
        cz, sz = math.cos(rz), math.sin(rz)
        mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]], dtype=float)
        my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=float)
        mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]], dtype=float)
        return mx @ my @ mz


@dataclass(frozen=True)
class UnitQuat:
    """Unit quaternion (w, x, y, z); |q| stays within 1e-9 of 1."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"quaternion norm {n} too far from 1")
        object.__setattr__(self, "w", self.w / n)
        object.__setattr__(self, "x", self.x / n)
        object.__setattr__(self, "y", self.y / n)
        object.__setattr__(self, "z", self.z / n)

    @classmethod
    def identity(cls) -> "UnitQuat":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle_deg(cls, axis: Vec3, angle_deg: float) -> "UnitQuat":
        n = axis.norm()
        if n == 0.0:
            raise DegenerateError("rotation axis must be nonzero")
        half = math.radians(angle_deg) / 2.0
        s = math.sin(half) / n
        return cls(math.cos(half), axis.x * s, axis.y * s, axis.z * s)

    def compose(self, other: "UnitQuat") -> "UnitQuat":
        """Hamilton product self (x) other: apply ``other`` in self's local frame."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=float,
        )

    def rotate(self, v: Vec3) -> Vec3:
        return Vec3.from_array(self.matrix() @ v.as_array())

    def approx_equal(self, other: "UnitQuat", tol: float = 1e-9) -> bool:
        # q and -q are the same rotation.
        direct = max(abs(self.w - other.w), abs(self.x - other.x),
                     abs(self.y - other.y), abs(self.z - other.z))
        flipped = max(abs(self.w + other.w), abs(self.x + other.x),
                      abs(self.y + other.y), abs(self.z + other.z))
        return min(direct, flipped) <= tol


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box in world space, min <= max componentwise."""

    min: Vec3
    max: Vec3

    def __post_init__(self) -> None:
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValueError(f"inverted box: {self.min} > {self.max}")

    @property
    def center(self) -> Vec3:
        return Vec3(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
            (self.min.z + self.max.z) / 2.0,
        )

    @property
    def size(self) -> Vec3:
        return self.max - self.min

    def corners(self) -> list[Vec3]:
        """The 8 corners in a fixed order (x varies slowest, z fastest)."""
        out = []
        for cx in (self.min.x, self.max.x):
            for cy in (self.min.y, self.max.y):
                for cz in (self.min.z, self.max.z):
                    out.append(Vec3(cx, cy, cz))
        return out

    def intersects(self, other: "Aabb") -> bool:
        return (
            self.min.x <= other.max.x and self.max.x >= other.min.x
            and self.min.y <= other.max.y and self.max.y >= other.min.y
            and self.min.z <= other.max.z and self.max.z >= other.min.z
        )

    @classmethod
    def union(cls, boxes: Iterable["Aabb"]) -> "Aabb":
        boxes = list(boxes)
        if not boxes:
            raise ValueError("union of zero boxes")
        return cls(
            Vec3(min(b.min.x for b in boxes), min(b.min.y for b in boxes), min(b.min.z for b in boxes)),
            Vec3(max(b.max.x for b in boxes), max(b.max.y for b in boxes), max(b.max.z for b in boxes)),
        )


@dataclass(frozen=True)
class Placement:
    """An oriented box proxy: bottom-center location, XYZ Euler spin, full extents.

    ``dimensions`` is (width=X, depth=Y, height=Z) in meters before rotation.
    """

    location: Vec3
    rotation: EulerDeg
    dimensions: Vec3

    def __post_init__(self) -> None:
        d = self.dimensions
        if d.x <= 0 or d.y <= 0 or d.z <= 0:
            raise ValueError(f"dimensions must be positive, got {d}")


def local_corners(dimensions: Vec3) -> np.ndarray:
    """Corners of the unrotated proxy box, origin at bottom center. Shape (8, 3).

    Order matches Aabb.corners (x slowest, z fastest) so corner indices
    correspond across shots for drift measurement.
    """
    hw, hd = dimensions.x / 2.0, dimensions.y / 2.0
    h = dimensions.z
    out = []
    for cx in (-hw, hw):
        for cy in (-hd, hd):
            for cz in (0.0, h):
                out.append((cx, cy, cz))
    return np.array(out, dtype=float)


def world_corners(p: Placement) -> np.ndarray:
    """The placement's 8 oriented-box corners in world space. Shape (8, 3)."""
    rot = p.rotation.matrix()
    return local_corners(p.dimensions) @ rot.T + p.location.as_array()


def world_aabb(p: Placement) -> Aabb:
    """Axis-aligned bound of the rotated proxy box."""
    pts = world_corners(p)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return Aabb(Vec3.from_array(lo), Vec3.from_array(hi))


def forward_vector(rotation_z_deg: float) -> tuple[float, float]:
    """Unit forward direction in the XY plane: (sin R, -cos R)."""
    r = math.radians(rotation_z_deg)
    return (math.sin(r), -math.cos(r))


def facing_rotation_z(asset_xy: tuple[float, float], anchor_xy: tuple[float, float]) -> float:
    """The Z spin whose forward vector points from asset toward anchor.

    Computed as atan2(anchor.x - asset.x, -(anchor.y - asset.y)), in (-180, 180].
    """
    dx = anchor_xy[0] - asset_xy[0]
    dy = anchor_xy[1] - asset_xy[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateError("asset and anchor coincide; facing undefined")
    return math.degrees(math.atan2(dx, -dy))


def bearing_deg(anchor_xy: tuple[float, float], subject_xy: tuple[float, float]) -> float:
    """Bearing of subject seen from anchor: 0 = +X, 90 = +Y, CCW, in [0, 360)."""
    dx = subject_xy[0] - anchor_xy[0]
    dy = subject_xy[1] - anchor_xy[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateError("anchor and subject coincide; bearing undefined")
    deg = math.degrees(math.atan2(dy, dx)) % 360.0
    # fmod of a tiny negative angle can round up to exactly 360.0
    return 0.0 if deg == 360.0 else deg


@dataclass(frozen=True)
class Penetration:
    depth: float
    mtv: Vec3


def penetration(a: Aabb, b: Aabb) -> Penetration | None:
    """Minimal axis-aligned translation that separates interpenetrating boxes.

    Returns None when the boxes are disjoint or merely touching. ``depth`` is
    the magnitude of the chosen translation (the interval overlap, except when
    one interval contains the other, where push-out distance is larger). The
    MTV moves ``a`` away from ``b``'s center along the cheapest axis; ties
    break x -> y -> z, and exactly coincident centers push toward +axis.
    """
    a_min, a_max = a.min.as_tuple(), a.max.as_tuple()
    b_min, b_max = b.min.as_tuple(), b.max.as_tuple()
    pushes: list[tuple[float, float]] = []  # (magnitude, sign) per axis
    for i in range(3):
        o = min(a_max[i], b_max[i]) - max(a_min[i], b_min[i])
        if o <= 0.0:
            return None
        push_pos = b_max[i] - a_min[i]
        push_neg = a_max[i] - b_min[i]
        if push_pos < push_neg:
            pushes.append((push_pos, 1.0))
        elif push_neg < push_pos:
            pushes.append((push_neg, -1.0))
        else:
            a_c = (a_min[i] + a_max[i]) / 2.0
            b_c = (b_min[i] + b_max[i]) / 2.0
            pushes.append((push_pos, 1.0 if a_c >= b_c else -1.0))
    axis = min(range(3), key=lambda i: (pushes[i][0], i))
    depth, sign = pushes[axis]
    return Penetration(depth, ZERO3.with_component(axis, sign * depth))


def separation_options(a: Aabb, b: Aabb) -> list[Penetration] | None:
    """All six axis-aligned translations of ``a`` that separate it from ``b``,
    cheapest first. None when the boxes do not interpenetrate. The first
    option equals penetration(a, b).
    """
    a_min, a_max = a.min.as_tuple(), a.max.as_tuple()
    b_min, b_max = b.min.as_tuple(), b.max.as_tuple()
    options: list[tuple[float, int, int, float]] = []
    for i in range(3):
        o = min(a_max[i], b_max[i]) - max(a_min[i], b_min[i])
        if o <= 0.0:
            return None
        push_pos = b_max[i] - a_min[i]
        push_neg = a_max[i] - b_min[i]
        a_c = (a_min[i] + a_max[i]) / 2.0
        b_c = (b_min[i] + b_max[i]) / 2.0
        away = 1.0 if a_c >= b_c else -1.0
        first, second = (push_pos, push_neg) if away > 0 else (push_neg, push_pos)
        options.append((first, i, 0, away))
        options.append((second, i, 1, -away))
    options.sort(key=lambda t: (t[0], t[1], t[2]))
    return [Penetration(mag, ZERO3.with_component(axis, sign * mag))
            for mag, axis, _, sign in options]


def aabb_gap(a: Aabb, b: Aabb) -> float:
    """Euclidean surface distance between two boxes; 0 when touching or overlapping."""
    total = 0.0
    a_min, a_max = a.min.as_tuple(), a.max.as_tuple()
    b_min, b_max = b.min.as_tuple(), b.max.as_tuple()
    for i in range(3):
        sep = max(a_min[i] - b_max[i], b_min[i] - a_max[i])
        if sep > 0.0:
            total += sep * sep
    return math.sqrt(total)


def axis_separations(a: Aabb, b: Aabb) -> tuple[float, float, float]:
    """Per-axis signed separation (positive = gap, negative = overlap)."""
    a_min, a_max = a.min.as_tuple(), a.max.as_tuple()
    b_min, b_max = b.min.as_tuple(), b.max.as_tuple()
    return tuple(max(a_min[i] - b_max[i], b_min[i] - a_max[i]) for i in range(3))  # type: ignore[return-value]


def aabb_point_distance(p: Vec3, box: Aabb) -> float:
    """Distance from a point to the box surface; 0 when inside."""
    dx = max(box.min.x - p.x, 0.0, p.x - box.max.x)
    dy = max(box.min.y - p.y, 0.0, p.y - box.max.y)
    dz = max(box.min.z - p.z, 0.0, p.z - box.max.z)
    return math.sqrt(dx * dx + dy * dy + dz * dz)
