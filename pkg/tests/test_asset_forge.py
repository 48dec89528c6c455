"""Canonical alignment, dimension scaling, and the dedup library."""
import itertools
from types import SimpleNamespace

import numpy as np
import pytest

from blocking_engine.asset_forge import (
    AXIS_ALIGNED_ROTATIONS,
    AssetLibrary,
    AxisConflictError,
    CanonicalAsset,
    DimensionEstimate,
    FaceLabel,
    MissingEstimateError,
    apply_dimension,
    canonical_align,
    materialize_placeholder,
    normalize_request_key,
)
from blocking_engine.geometry import Vec3


def is_axis_rotation(m) -> bool:
    m = np.asarray(m)
    return (
        np.abs(m).sum() == 3
        and np.array_equal(np.abs(m) @ np.ones(3), np.ones(3))
        and round(float(np.linalg.det(m))) == 1
    )


def test_rotation_table_has_24_proper_members():
    assert len(AXIS_ALIGNED_ROTATIONS) == 24
    seen = {tuple(map(tuple, m)) for m in AXIS_ALIGNED_ROTATIONS}
    assert len(seen) == 24
    assert all(is_axis_rotation(m) for m in AXIS_ALIGNED_ROTATIONS)


def test_align_identity_when_already_canonical():
    rot = canonical_align(FaceLabel.E, FaceLabel.D)
    assert np.array_equal(rot, np.eye(3, dtype=int))


def test_align_top_from_back_face():
    # top currently on +Y, front on -Z: the unique solution maps +Y->+Z, -Z->-Y
    rot = canonical_align(FaceLabel.C, FaceLabel.F)
    assert tuple(rot @ np.array(FaceLabel.C.normal)) == (0, 0, 1)
    assert tuple(rot @ np.array(FaceLabel.F.normal)) == (0, -1, 0)


def test_align_yaw_only():
    rot = canonical_align(FaceLabel.E, FaceLabel.C)
    assert tuple(rot @ np.array([0, 0, 1])) == (0, 0, 1)
    assert tuple(rot @ np.array([0, 1, 0])) == (0, -1, 0)


def test_align_exhaustive_all_valid_pairs():
    # every (top, front) pair on distinct axes has exactly one solution
    solved = set()
    for top, front in itertools.product(FaceLabel, FaceLabel):
        t = np.array(top.normal)
        f = np.array(front.normal)
        if abs(int(t @ f)) == 1:
            with pytest.raises(AxisConflictError):
                canonical_align(top, front)
            continue
        rot = canonical_align(top, front)
        assert is_axis_rotation(rot)
        assert tuple(rot @ t) == (0, 0, 1)
        assert tuple(rot @ f) == (0, -1, 0)
        solved.add(tuple(map(tuple, rot)))
    # 6 tops x 4 fronts biject onto the full rotation group
    assert len(solved) == 24


def test_align_ambiguous_front_fixes_top_only():
    for top in FaceLabel:
        rot = canonical_align(top, None)
        assert is_axis_rotation(rot)
        assert tuple(rot @ np.array(top.normal)) == (0, 0, 1)
    assert np.array_equal(canonical_align(FaceLabel.E, None), np.eye(3, dtype=int))


# ---------------------------------------------------------------------------
# dimension scaling


def test_apply_dimension_height():
    s, dims = apply_dimension(Vec3(0.5, 0.25, 1.0), DimensionEstimate("p", height=1.70))
    assert s == pytest.approx(1.70)
    assert dims.as_tuple() == pytest.approx((0.85, 0.425, 1.70))


def test_apply_dimension_identity():
    s, dims = apply_dimension(Vec3(1, 1, 1), DimensionEstimate("cube", width=1.00))
    assert s == 1.0
    assert dims.as_tuple() == (1.0, 1.0, 1.0)


def test_apply_dimension_small_box():
    s, dims = apply_dimension(Vec3(2, 1, 1), DimensionEstimate("box", width=0.30))
    assert s == pytest.approx(0.15)
    assert dims.as_tuple() == pytest.approx((0.30, 0.15, 0.15))


def test_apply_dimension_preserves_ratios():
    raw = Vec3(0.4, 0.9, 2.2)
    _, dims = apply_dimension(raw, DimensionEstimate("a", depth=3.3))
    assert dims.x / dims.y == pytest.approx(raw.x / raw.y)
    assert dims.z / dims.y == pytest.approx(raw.z / raw.y)


def test_estimate_exactly_one_rule():
    with pytest.raises(ValueError):
        DimensionEstimate("a", width=1.0, height=2.0)
    with pytest.raises(ValueError):
        DimensionEstimate("a")
    with pytest.raises(ValueError):
        DimensionEstimate("a", depth=-1.0)


def test_materialize_placeholder_character():
    rec = SimpleNamespace(asset_id="hero", asset_type="character")
    asset = materialize_placeholder(rec, DimensionEstimate("hero", height=1.70))
    assert asset.dimensions.as_tuple() == pytest.approx((0.85, 0.51, 1.70))
    assert asset.source == "placeholder"
    again = materialize_placeholder(rec, DimensionEstimate("hero", height=1.70))
    assert again == asset


def test_materialize_placeholder_object_width_exact():
    rec = SimpleNamespace(asset_id="crate", asset_type="object")
    asset = materialize_placeholder(rec, DimensionEstimate("crate", width=0.75))
    assert asset.dimensions.x == pytest.approx(0.75)


def test_materialize_requires_estimate():
    rec = SimpleNamespace(asset_id="ghost", asset_type="object")
    with pytest.raises(MissingEstimateError):
        materialize_placeholder(rec, None)


# ---------------------------------------------------------------------------
# library


def build_named(name):
    return lambda: CanonicalAsset(name, Vec3(1, 1, 1), "object")


def test_library_first_build_then_reuse():
    lib = AssetLibrary()
    _, reused = lib.get_or_register("piano", build_named("piano"))
    assert not reused
    assert lib.unique_models == 1
    _, reused = lib.get_or_register("piano", build_named("piano"))
    assert reused
    assert lib.raw_requests == 2
    assert lib.unique_models == 1
    assert lib.raw_requests / lib.unique_models == pytest.approx(2.0)


def test_library_builder_failure_leaves_no_trace():
    lib = AssetLibrary()

    def boom():
        raise RuntimeError("mesh service down")

    with pytest.raises(RuntimeError):
        lib.get_or_register("cursed", boom)
    assert lib.raw_requests == 0
    assert lib.unique_models == 0
    assert lib.reuse_count == 0


def test_library_accounting_identity():
    lib = AssetLibrary()
    keys = ["a", "b", "a", "c", "b", "a"]
    for k in keys:
        lib.get_or_register(k, build_named(k))
    assert lib.raw_requests == len(keys)
    assert lib.raw_requests - lib.unique_models == lib.reuse_count


def test_library_replay_production_scale_log():
    # 501 requests over 440 distinct keys: 61 builds avoided = 12.18% saving
    lib = AssetLibrary()
    keys = [f"asset_{i:03d}" for i in range(440)]
    log = list(keys) + [keys[i % 440] for i in range(61)]
    assert len(log) == 501
    for k in log:
        lib.get_or_register(k, build_named(k))
    assert lib.unique_models == 440
    assert lib.reuse_count == 61
    assert round(lib.savings_percent, 2) == 12.18


def test_normalize_request_key():
    assert normalize_request_key("  Grand   PIANO \n") == "grand piano"
