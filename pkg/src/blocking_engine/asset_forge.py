"""Canonical asset materialization without mesh generation.

Assets are box proxies oriented into a shared canonical space (front = -Y,
up = +Z), uniformly scaled so one estimated real-world dimension is exact.
An incremental library deduplicates repeated requests and keeps reuse
accounting.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .geometry import Vec3


class AxisConflictError(ValueError):
    """Top and front face labels lie on the same axis."""


class ZeroExtentError(ValueError):
    """A raw dimension needed for scaling is zero or negative."""


class MissingEstimateError(KeyError):
    """No dimension estimate available for the asset."""


class FaceLabel(str, Enum):
    """Orthographic face labels and their outward normals in local space."""

    A = "A"  # +X (right)
    B = "B"  # -X (left)
    C = "C"  # +Y (back)
    D = "D"  # -Y (front)
    E = "E"  # +Z (top)
    F = "F"  # -Z (bottom)

    @property
    def normal(self) -> tuple[int, int, int]:
        return _FACE_NORMALS[self]


_FACE_NORMALS = {
    FaceLabel.A: (1, 0, 0),
    FaceLabel.B: (-1, 0, 0),
    FaceLabel.C: (0, 1, 0),
    FaceLabel.D: (0, -1, 0),
    FaceLabel.E: (0, 0, 1),
    FaceLabel.F: (0, 0, -1),
}

_CANONICAL_TOP = (0, 0, 1)
_CANONICAL_FRONT = (0, -1, 0)


def _proper_axis_rotations() -> list[np.ndarray]:
    """All 24 rotation matrices that permute signed axes (det = +1)."""
    axes = [np.array(v) for v in ((1, 0, 0), (-1, 0, 0), (0, 1, 0),
                                  (0, -1, 0), (0, 0, 1), (0, 0, -1))]
    out = []
    for ex in axes:
        for ey in axes:
            if abs(int(ex @ ey)) == 1:
                continue
            ez = np.cross(ex, ey)
            m = np.column_stack([ex, ey, ez]).astype(int)
            if round(float(np.linalg.det(m))) == 1:
                out.append(m)
    return out


AXIS_ALIGNED_ROTATIONS: list[np.ndarray] = _proper_axis_rotations()
assert len(AXIS_ALIGNED_ROTATIONS) == 24


@dataclass(frozen=True)
class CanonicalTransform:
    """Alignment rotation plus uniform scale that canonicalizes a raw asset."""

    r_align: tuple[tuple[int, int, int], ...]
    s_norm: float

    def rotation_matrix(self) -> np.ndarray:
        return np.array(self.r_align, dtype=float)


def canonical_align(top: FaceLabel, front: FaceLabel | None = None) -> np.ndarray:
    """Rotation sending the labeled top face to +Z and the front face to -Y.

    ``front=None`` marks an ambiguous front (rotationally symmetric assets):
    only the top axis is corrected, via the minimal rotation, with no added
    yaw.
    """
    top_n = np.array(top.normal)
    if front is not None:
        front_n = np.array(front.normal)
        if abs(int(top_n @ front_n)) == 1:
            raise AxisConflictError(f"top {top.value} and front {front.value} share an axis")
        for rot in AXIS_ALIGNED_ROTATIONS:
            if tuple(rot @ top_n) == _CANONICAL_TOP and tuple(rot @ front_n) == _CANONICAL_FRONT:
                return rot
        raise AssertionError("no axis-aligned rotation found; rotation table broken")

    if tuple(top_n) == _CANONICAL_TOP:
        return np.eye(3, dtype=int)
    if tuple(top_n) == (0, 0, -1):
        # 180 degrees about X: the flip axis is arbitrary; X is the fixed choice
        return np.array([[1, 0, 0], [0, -1, 0], [0, 0, -1]], dtype=int)
    # top is horizontal: a single 90-degree turn about the axis perpendicular
    # to both top and +Z brings it upright without introducing yaw
    axis = np.cross(top_n, np.array(_CANONICAL_TOP))
    for rot in AXIS_ALIGNED_ROTATIONS:
        if tuple(rot @ top_n) == _CANONICAL_TOP and tuple(rot @ axis) == tuple(axis):
            return rot
    raise AssertionError("no minimal top-fixing rotation found")


@dataclass(frozen=True)
class DimensionEstimate:
    """Real-world size estimate: exactly one of width/depth/height, meters."""

    asset_id: str
    width: float | None = None
    depth: float | None = None
    height: float | None = None

    def __post_init__(self) -> None:
        given = [v for v in (self.width, self.depth, self.height) if v is not None]
        if len(given) != 1:
            raise ValueError(
                f"{self.asset_id}: exactly one of width/depth/height required, got {len(given)}"
            )
        if given[0] <= 0:
            raise ValueError(f"{self.asset_id}: estimate must be positive")

    @property
    def axis(self) -> int:
        if self.width is not None:
            return 0
        if self.depth is not None:
            return 1
        return 2

    @property
    def value(self) -> float:
        v = (self.width, self.depth, self.height)[self.axis]
        assert v is not None
        return v

    def to_json(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "width": self.width,
            "depth": self.depth,
            "height": self.height,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DimensionEstimate":
        return cls(
            asset_id=doc["asset_id"],
            width=doc.get("width"),
            depth=doc.get("depth"),
            height=doc.get("height"),
        )


def apply_dimension(raw_dims: Vec3, estimate: DimensionEstimate) -> tuple[float, Vec3]:
    """Uniform scale factor and scaled extents from one trusted dimension."""
    raw = raw_dims.as_tuple()
    if min(raw) <= 0:
        raise ZeroExtentError(f"raw dimensions must be positive, got {raw}")
    s_norm = estimate.value / raw[estimate.axis]
    return s_norm, raw_dims.scaled(s_norm)


@dataclass(frozen=True)
class CanonicalAsset:
    """A canonicalized box proxy: front -Y, up +Z, metric extents."""

    asset_id: str
    dimensions: Vec3
    asset_type: str
    source: str = "placeholder"  # retrieved | generated | placeholder


DEFAULT_RAW_DIMS = {
    "character": Vec3(0.5, 0.3, 1.0),
    "object": Vec3(1.0, 1.0, 1.0),
}


def materialize_placeholder(record, estimate: DimensionEstimate | None,
                            raw_dims: Vec3 | None = None) -> CanonicalAsset:
    """Box stand-in for an asset that would otherwise be retrieved or generated.

    ``record`` needs ``asset_id`` and ``asset_type`` attributes. Raw extents
    default per asset type; only their ratios matter before scaling.
    """
    if estimate is None:
        raise MissingEstimateError(record.asset_id)
    raw = raw_dims or DEFAULT_RAW_DIMS.get(record.asset_type, DEFAULT_RAW_DIMS["object"])
    _, dims = apply_dimension(raw, estimate)
    return CanonicalAsset(
        asset_id=record.asset_id,
        dimensions=dims,
        asset_type=record.asset_type,
        source="placeholder",
    )


def normalize_request_key(text: str) -> str:
    """Library lookup key: lowercased, whitespace collapsed."""
    return " ".join(text.lower().split())


@dataclass
class AssetLibrary:
    """Incremental store deduplicating asset requests across scenes and stories."""

    entries: dict[str, CanonicalAsset] = field(default_factory=dict)
    raw_requests: int = 0
    reuse_count: int = 0

    @property
    def unique_models(self) -> int:
        return len(self.entries)

    @property
    def savings_percent(self) -> float:
        """Share of requests served without a new build, in percent."""
        if self.raw_requests == 0:
            return 0.0
        return self.reuse_count / self.raw_requests * 100.0

    def get_or_register(self, request_key: str,
                        builder: Callable[[], CanonicalAsset]) -> tuple[CanonicalAsset, bool]:
        """Return the cached asset for the key, building it on first request.

        A builder failure propagates without touching entries or stats.
        """
        if not request_key:
            raise ValueError("request_key must be non-empty")
        existing = self.entries.get(request_key)
        if existing is not None:
            self.raw_requests += 1
            self.reuse_count += 1
            return existing, True
        built = builder()
        self.raw_requests += 1
        self.entries[request_key] = built
        return built, False

    def stats(self) -> dict:
        return {
            "raw_requests": self.raw_requests,
            "unique_models": self.unique_models,
            "reuse_count": self.reuse_count,
            "savings_percent": round(self.savings_percent, 2),
        }
