"""Scene layout core: placement formulas, constraint verification with exact
numerical fixes, deterministic repair, scene shells, per-shot modifications,
and the drift metric for static assets.

Four constraint families are checked, each against a fixed budget:
  direction    - forward vector within a 45-degree cone of the required bearing
  relationship - subject inside the 90-degree bearing sector (or stacked, for
                 on_top_of)
  contact      - box surfaces within 0.05 m (contact=true) or clear of 0.05 m
                 (contact=false)
  occlusion    - any unordered pair's penetration depth below 0.02 m unless
                 stacked
Every diagnostic carries a corrective transform that, applied alone, clears
that diagnostic on re-verification.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .geometry import (
    separation_options,
    Aabb,
    EulerDeg,
    Placement,
    Vec3,
    aabb_gap,
    ang_diff_deg,
    axis_separations,
    bearing_deg,
    facing_rotation_z,
    penetration,
    wrap_deg,
    world_aabb,
    world_corners,
)

RELATIONSHIPS = ("on_top_of", "on_the_left_of", "on_the_right_of", "in_front_of", "behind")
DIRECTIONS = ("facing", "facing_away", "left_side_facing", "right_side_facing")

# bearing of the sector center, anchor -> subject, 0 = +X CCW
SECTOR_CENTER = {
    "on_the_right_of": 0.0,
    "behind": 90.0,
    "on_the_left_of": 180.0,
    "in_front_of": 270.0,
}

# added to the facing angle to get the required spin for each orientation
DIRECTION_OFFSET = {
    "facing": 0.0,
    "facing_away": 180.0,
    "left_side_facing": 90.0,
    "right_side_facing": -90.0,
}

# relationship fixes land this far inside the sector edge so that the
# re-verified bearing cannot round back outside at float precision
_SECTOR_EDGE_INSET_DEG = 1e-6

KIND_ORDER = ("contact", "relationship", "direction", "occlusion")
_KIND_RANK = {k: i for i, k in enumerate(KIND_ORDER)}


class UnknownAnchorError(KeyError):
    """A constraint references an anchor absent from the layout."""


class UnknownAssetError(KeyError):
    """An operation targets an asset absent from the layout."""


class InsufficientShots(ValueError):
    """Drift needs at least two shot snapshots."""


class MissingStaticAsset(KeyError):
    """A static asset is absent from one of the shots."""


class LayoutSchemaError(ValueError):
    """Malformed layout document."""


@dataclass(frozen=True)
class Tolerances:
    direction_cone_deg: float = 45.0
    bearing_sector_deg: float = 90.0
    contact_gap_m: float = 0.05
    occlusion_penetration_m: float = 0.02

    def __post_init__(self) -> None:
        for name in ("direction_cone_deg", "bearing_sector_deg", "contact_gap_m",
                     "occlusion_penetration_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class SpatialConstraint:
    asset_id: str
    anchor_asset_id: str | None = None
    relationship: str | None = None
    contact: bool | None = None
    direction: str | None = None

    def __post_init__(self) -> None:
        if self.relationship is not None and self.relationship not in RELATIONSHIPS:
            raise LayoutSchemaError(f"unknown relationship {self.relationship!r}")
        if self.direction is not None and self.direction not in DIRECTIONS:
            raise LayoutSchemaError(f"unknown direction {self.direction!r}")
        if self.anchor_asset_id is None and (
            self.relationship is not None or self.contact is not None or self.direction is not None
        ):
            raise LayoutSchemaError(
                f"{self.asset_id}: relationship/contact/direction require an anchor"
            )

    @property
    def is_empty(self) -> bool:
        return self.relationship is None and self.contact is None and self.direction is None


@dataclass(frozen=True)
class SceneSize:
    x: float
    x_negative: float
    y: float
    y_negative: float

    def __post_init__(self) -> None:
        if self.x_negative >= self.x or self.y_negative >= self.y:
            raise LayoutSchemaError("scene_size bounds must be ordered (negative < positive)")


@dataclass(frozen=True)
class ShotModification:
    """Target state for one asset during one shot.

    ``kind`` is "transform" for the planner's target transforms; "add" and
    "remove" cover storyboard-driven entrances and exits. Constraint fields,
    when present, replace the asset's constraint for that shot onward.
    """

    asset_id: str
    kind: str = "transform"  # transform | add | remove
    target_location: Vec3 | None = None
    target_rotation: EulerDeg | None = None
    dimensions: Vec3 | None = None  # required for "add"
    anchor_asset_id: str | None = None
    relationship: str | None = None
    contact: bool | None = None
    direction: str | None = None
    has_constraint_update: bool = False


@dataclass
class SceneLayout:
    scene_size: SceneSize
    placements: dict[str, Placement]
    constraints: list[SpatialConstraint] = field(default_factory=list)
    shot_modifications: dict[int, list[ShotModification]] = field(default_factory=dict)

    def copy(self) -> "SceneLayout":
        return SceneLayout(
            scene_size=self.scene_size,
            placements=dict(self.placements),
            constraints=list(self.constraints),
            shot_modifications={k: list(v) for k, v in self.shot_modifications.items()},
        )


@dataclass(frozen=True)
class Fix:
    """Exact corrective transform: a translation and/or a target Z spin."""

    translation: Vec3 | None = None
    rotation_z: float | None = None


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # direction | relationship | occlusion | contact
    asset_id: str
    anchor_id: str | None
    measured: float
    unit: str
    budget: float
    fix: Fix
    detail: str = ""


@dataclass(frozen=True)
class SceneShell:
    ground: Aabb
    walls: dict[str, Aabb] = field(default_factory=dict)  # side -> slab (indoor only)


@dataclass
class RepairResult:
    layout: SceneLayout
    turns_used: int
    per_turn_counts: list[dict[str, int]]
    converged: bool
    residual: list[Diagnostic]


# ---------------------------------------------------------------------------
# placement formulas


def place_contact(relationship: str, anchor: Placement, subject_dims: Vec3) -> Placement:
    """Subject placement in exact surface contact with the anchor.

    Uses the half-extent sum formulas on stored dimensions; the subject's
    rotation is zeroed.
    """
    if relationship not in RELATIONSHIPS:
        raise LayoutSchemaError(f"unknown relationship {relationship!r}")
    ax, ay, az = anchor.location.as_tuple()
    if relationship == "on_top_of":
        loc = Vec3(ax, ay, az + anchor.dimensions.z)
    elif relationship == "on_the_right_of":
        loc = Vec3(ax + anchor.dimensions.x / 2 + subject_dims.x / 2, ay, az)
    elif relationship == "on_the_left_of":
        loc = Vec3(ax - anchor.dimensions.x / 2 - subject_dims.x / 2, ay, az)
    elif relationship == "behind":
        loc = Vec3(ax, ay + anchor.dimensions.y / 2 + subject_dims.y / 2, az)
    else:  # in_front_of
        loc = Vec3(ax, ay - anchor.dimensions.y / 2 - subject_dims.y / 2, az)
    return Placement(loc, EulerDeg(0, 0, 0), subject_dims)


# ---------------------------------------------------------------------------
# verification


def _boxes(layout: SceneLayout) -> dict[str, Aabb]:
    return {aid: world_aabb(p) for aid, p in layout.placements.items()}


def _require(layout: SceneLayout, constraint: SpatialConstraint) -> tuple[Placement, Placement]:
    subject = layout.placements.get(constraint.asset_id)
    if subject is None:
        raise UnknownAssetError(constraint.asset_id)
    anchor = layout.placements.get(constraint.anchor_asset_id or "")
    if anchor is None:
        raise UnknownAnchorError(constraint.anchor_asset_id)
    return subject, anchor


def _fit_range_to_footprint(size: SceneSize, subject: Placement, s_box: Aabb,
                            anchor_loc: Vec3, rad: float, r: float) -> float:
    """Shrink a bearing-ray range so the subject's box stays inside the scene."""
    ex = (s_box.max.x - s_box.min.x) / 2.0
    ey = (s_box.max.y - s_box.min.y) / 2.0
    off_x = (s_box.max.x + s_box.min.x) / 2.0 - subject.location.x
    off_y = (s_box.max.y + s_box.min.y) / 2.0 - subject.location.y
    lo_x, hi_x = size.x_negative + ex - off_x, size.x - ex - off_x
    lo_y, hi_y = size.y_negative + ey - off_y, size.y - ey - off_y
    cos_b, sin_b = math.cos(rad), math.sin(rad)
    r_fit = r
    for comp, lo, hi, base in ((cos_b, lo_x, hi_x, anchor_loc.x),
                               (sin_b, lo_y, hi_y, anchor_loc.y)):
        if comp > 1e-12:
            r_fit = min(r_fit, (hi - base) / comp)
        elif comp < -1e-12:
            r_fit = min(r_fit, (lo - base) / comp)
    return max(r_fit, 1e-3)


def _clear_range_along_bearing(s_box: Aabb, a_box: Aabb, rad: float) -> float:
    """Center distance at which the boxes just stop overlapping along a ray."""
    ex = (s_box.max.x - s_box.min.x) / 2.0 + (a_box.max.x - a_box.min.x) / 2.0
    ey = (s_box.max.y - s_box.min.y) / 2.0 + (a_box.max.y - a_box.min.y) / 2.0
    return _clear_range_from_extents(ex, ey, rad)


def _clear_range_from_extents(ex_sum: float, ey_sum: float, rad: float) -> float:
    cos_b, sin_b = abs(math.cos(rad)), abs(math.sin(rad))
    candidates = []
    if cos_b > 1e-12:
        candidates.append(ex_sum / cos_b)
    if sin_b > 1e-12:
        candidates.append(ey_sum / sin_b)
    return min(candidates)


def _check_planar_relationship(layout, constraint, tol, boxes,
                               fix_to_center: bool = False) -> Diagnostic | None:
    subject, anchor = _require(layout, constraint)
    center = SECTOR_CENTER[constraint.relationship]
    half = tol.bearing_sector_deg / 2.0
    dx = subject.location.x - anchor.location.x
    dy = subject.location.y - anchor.location.y
    r = math.hypot(dx, dy)
    if r < 1e-12:
        # coincident: place at the sector center at a touching distance
        axis = 0 if center in (0.0, 180.0) else 1
        s_box = boxes[constraint.asset_id]
        a_box = boxes[constraint.anchor_asset_id]
        reach = (s_box.size.component(axis) + a_box.size.component(axis)) / 2.0
        rad = math.radians(center)
        target = Vec3(anchor.location.x + reach * math.cos(rad),
                      anchor.location.y + reach * math.sin(rad),
                      subject.location.z)
        return Diagnostic(
            kind="relationship", asset_id=constraint.asset_id,
            anchor_id=constraint.anchor_asset_id,
            measured=half + 90.0, unit="deg", budget=half,
            fix=Fix(translation=target - subject.location),
            detail=f"subject coincides with anchor; cannot be {constraint.relationship}",
        )
    bearing = bearing_deg(anchor.location.xy, subject.location.xy)
    deviation = wrap_deg(bearing - center)
    if abs(deviation) <= half:
        return None
    if fix_to_center:
        target_bearing = center
    else:
        inset = half - _SECTOR_EDGE_INSET_DEG
        target_bearing = center + (inset if deviation > 0 else -inset)
    rad = math.radians(target_bearing)
    s_box = boxes[constraint.asset_id]
    a_box = boxes[constraint.anchor_asset_id]
    # keep range, but never land inside the anchor; contact=false subjects
    # additionally need clear air beyond the budget
    r_floor = _clear_range_along_bearing(s_box, a_box, rad)
    if constraint.contact is False:
        r_floor += 2.0 * tol.contact_gap_m
    r_used = _fit_range_to_footprint(
        layout.scene_size, subject, s_box, anchor.location, rad, max(r, r_floor)
    )
    target = Vec3(anchor.location.x + r_used * math.cos(rad),
                  anchor.location.y + r_used * math.sin(rad),
                  subject.location.z)
    return Diagnostic(
        kind="relationship", asset_id=constraint.asset_id,
        anchor_id=constraint.anchor_asset_id,
        measured=abs(deviation), unit="deg", budget=half,
        fix=Fix(translation=target - subject.location),
        detail=f"bearing {bearing:.2f} outside {constraint.relationship} sector "
               f"[{center - half:.0f}, {center + half:.0f}]",
    )


def _check_on_top_of(layout, constraint, tol, boxes) -> Diagnostic | None:
    subject, anchor = _require(layout, constraint)
    s_box = boxes[constraint.asset_id]
    a_box = boxes[constraint.anchor_asset_id]
    vertical_gap = abs(s_box.min.z - a_box.max.z)
    overlap_x = min(s_box.max.x, a_box.max.x) - max(s_box.min.x, a_box.min.x)
    overlap_y = min(s_box.max.y, a_box.max.y) - max(s_box.min.y, a_box.min.y)
    footprints_overlap = overlap_x > 0 and overlap_y > 0
    if vertical_gap <= tol.contact_gap_m and footprints_overlap:
        return None
    dz = a_box.max.z - s_box.min.z
    if footprints_overlap:
        translation = Vec3(0.0, 0.0, dz)
        measured = vertical_gap
        detail = "not resting on anchor top"
    else:
        a_center = a_box.center
        translation = Vec3(a_center.x - subject.location.x,
                           a_center.y - subject.location.y, dz)
        measured = max(-overlap_x, -overlap_y, vertical_gap)
        detail = "footprint off the anchor top"
    return Diagnostic(
        kind="relationship", asset_id=constraint.asset_id,
        anchor_id=constraint.anchor_asset_id,
        measured=measured, unit="m", budget=tol.contact_gap_m,
        fix=Fix(translation=translation), detail=detail,
    )


def _check_relationship(layout, constraint, tol, boxes) -> Diagnostic | None:
    if constraint.relationship == "on_top_of":
        return _check_on_top_of(layout, constraint, tol, boxes)
    return _check_planar_relationship(layout, constraint, tol, boxes)


def _check_contact(layout, constraint, tol, boxes) -> Diagnostic | None:
    subject, anchor = _require(layout, constraint)
    s_box = boxes[constraint.asset_id]
    a_box = boxes[constraint.anchor_asset_id]
    gap = aabb_gap(s_box, a_box)
    seps = axis_separations(s_box, a_box)
    if constraint.contact:
        if gap <= tol.contact_gap_m:
            return None
        # close every separated axis to exactly zero, toward the anchor
        move = [0.0, 0.0, 0.0]
        for i in range(3):
            if seps[i] > 0.0:
                toward = -1.0 if s_box.min.component(i) > a_box.max.component(i) else 1.0
                move[i] = toward * seps[i]
        return Diagnostic(
            kind="contact", asset_id=constraint.asset_id,
            anchor_id=constraint.anchor_asset_id,
            measured=gap, unit="m", budget=tol.contact_gap_m,
            fix=Fix(translation=Vec3(*move)),
            detail=f"gap {gap:.3f} m exceeds the contact budget",
        )
    # contact=false: require clear air strictly beyond the budget
    if gap > tol.contact_gap_m:
        return None
    target_gap = 2.0 * tol.contact_gap_m
    candidates = []
    for i in range(3):
        needed = target_gap - seps[i]
        if needed <= 0:
            continue
        s_c = s_box.center.component(i)
        a_c = a_box.center.component(i)
        away = 1.0 if s_c >= a_c else -1.0
        candidates.append((needed, i, away))
    needed, axis, away = min(candidates, key=lambda c: (c[0], c[1]))
    move = Vec3(0, 0, 0).with_component(axis, away * needed)
    return Diagnostic(
        kind="contact", asset_id=constraint.asset_id,
        anchor_id=constraint.anchor_asset_id,
        measured=gap, unit="m", budget=tol.contact_gap_m,
        fix=Fix(translation=move),
        detail=f"gap {gap:.3f} m but a clear gap above {tol.contact_gap_m} m is required",
    )


def _xy_coincident(a: Vec3, b: Vec3) -> bool:
    return math.hypot(a.x - b.x, a.y - b.y) < 1e-9


def _check_direction(layout, constraint, tol, boxes) -> Diagnostic | None:
    subject, anchor = _require(layout, constraint)
    if _xy_coincident(subject.location, anchor.location):
        return None  # orientation toward a coincident anchor is undefined
    facing = facing_rotation_z(subject.location.xy, anchor.location.xy)
    required = wrap_deg(facing + DIRECTION_OFFSET[constraint.direction])
    error = ang_diff_deg(subject.rotation.z, required)
    if error <= tol.direction_cone_deg:
        return None
    return Diagnostic(
        kind="direction", asset_id=constraint.asset_id,
        anchor_id=constraint.anchor_asset_id,
        measured=error, unit="deg", budget=tol.direction_cone_deg,
        fix=Fix(rotation_z=required),
        detail=f"{constraint.direction} requires spin {required:.2f}, found {subject.rotation.z:.2f}",
    )


def _planar_separations(a: Aabb, b: Aabb) -> list:
    """Separating translations restricted to the ground plane.

    Vertical pushes would float or bury grounded assets, so occlusion fixes
    only ever translate in X or Y; stacking conflicts belong to on_top_of.
    """
    options = separation_options(a, b)
    if options is None:
        return []
    return [opt for opt in options if opt.mtv.z == 0.0]


def _stacked_pairs(constraints: Iterable[SpatialConstraint]) -> set[frozenset[str]]:
    return {
        frozenset((c.asset_id, c.anchor_asset_id))
        for c in constraints
        if c.relationship == "on_top_of" and c.anchor_asset_id is not None
    }


def _constrained_subjects(constraints: Iterable[SpatialConstraint]) -> dict[frozenset[str], str]:
    out: dict[frozenset[str], str] = {}
    for c in constraints:
        if c.anchor_asset_id is not None and not c.is_empty:
            out.setdefault(frozenset((c.asset_id, c.anchor_asset_id)), c.asset_id)
    return out


def _occlusion_diagnostics(layout, tol, boxes) -> list[Diagnostic]:
    exempt = _stacked_pairs(layout.constraints)
    subjects = _constrained_subjects(layout.constraints)
    out = []
    ids = sorted(layout.placements)
    for i, a_id in enumerate(ids):
        for b_id in ids[i + 1:]:
            pair = frozenset((a_id, b_id))
            if pair in exempt:
                continue
            pen = penetration(boxes[a_id], boxes[b_id])
            if pen is None or pen.depth < tol.occlusion_penetration_m:
                continue
            mover = subjects.get(pair) or max(a_id, b_id)
            other = b_id if mover == a_id else a_id
            options = _planar_separations(boxes[mover], boxes[other])
            assert options, "penetrating boxes must have planar separations"
            out.append(Diagnostic(
                kind="occlusion", asset_id=mover, anchor_id=other,
                measured=pen.depth, unit="m", budget=tol.occlusion_penetration_m,
                fix=Fix(translation=options[0].mtv),
                detail=f"boxes interpenetrate {pen.depth:.3f} m",
            ))
    return out


def verify_scene(layout: SceneLayout, tol: Tolerances = Tolerances()) -> list[Diagnostic]:
    """Check every constraint plus implicit pairwise occlusion.

    Output order is deterministic: constraints in layout order (relationship,
    contact, direction per constraint), then occlusion pairs sorted by id.
    """
    boxes = _boxes(layout)
    out: list[Diagnostic] = []
    for constraint in layout.constraints:
        if constraint.is_empty:
            continue
        if constraint.relationship is not None:
            diag = _check_relationship(layout, constraint, tol, boxes)
            if diag:
                out.append(diag)
        if constraint.contact is not None:
            diag = _check_contact(layout, constraint, tol, boxes)
            if diag:
                out.append(diag)
        if constraint.direction is not None:
            diag = _check_direction(layout, constraint, tol, boxes)
            if diag:
                out.append(diag)
    out.extend(_occlusion_diagnostics(layout, tol, boxes))
    return out


def apply_fix(layout: SceneLayout, diagnostic: Diagnostic) -> SceneLayout:
    """New layout with exactly the diagnostic's corrective transform applied."""
    placement = layout.placements.get(diagnostic.asset_id)
    if placement is None:
        raise UnknownAssetError(diagnostic.asset_id)
    fix = diagnostic.fix
    location = placement.location
    rotation = placement.rotation
    if fix.translation is not None:
        location = location + fix.translation
    if fix.rotation_z is not None:
        rotation = EulerDeg(rotation.x, rotation.y, fix.rotation_z)
    out = layout.copy()
    out.placements[diagnostic.asset_id] = replace(placement, location=location, rotation=rotation)
    return out


# ---------------------------------------------------------------------------
# repair


def _topo_tiers(layout: SceneLayout) -> dict[str, int]:
    """Kahn layering over anchor -> subject edges; cycle members come last."""
    ids = sorted(layout.placements)
    anchors_of: dict[str, set[str]] = {aid: set() for aid in ids}
    for c in layout.constraints:
        if c.anchor_asset_id is not None and c.asset_id in anchors_of \
                and c.anchor_asset_id in anchors_of:
            anchors_of[c.asset_id].add(c.anchor_asset_id)
    tier: dict[str, int] = {}
    remaining = set(ids)
    level = 0
    while remaining:
        ready = sorted(a for a in remaining if not (anchors_of[a] & remaining))
        if not ready:  # anchor cycle (e.g. two characters facing each other)
            for a in sorted(remaining):
                tier[a] = level
            break
        for a in ready:
            tier[a] = level
        remaining -= set(ready)
        level += 1
    return tier


def _recheck(layout: SceneLayout, diagnostic: Diagnostic, tol: Tolerances,
             escalation: int = 0) -> Diagnostic | None:
    """Re-derive the diagnostic against the current layout state.

    ``escalation`` counts earlier repair attempts on the same diagnostic key.
    A repeated planar relationship fix targets the sector center instead of
    the nearest edge; a repeated occlusion fix walks to the next-cheapest
    separating direction. Both escape oscillations where neighbors keep
    undoing the minimal fix.
    """
    boxes = _boxes(layout)
    if diagnostic.kind == "occlusion":
        a = boxes.get(diagnostic.asset_id)
        b = boxes.get(diagnostic.anchor_id or "")
        if a is None or b is None:
            return None
        pen = penetration(a, b)
        if pen is None or pen.depth < tol.occlusion_penetration_m:
            return None
        options = _planar_separations(a, b)
        pick = options[min(escalation, len(options) - 1)]
        return replace(diagnostic, measured=pen.depth, fix=Fix(translation=pick.mtv))
    for constraint in layout.constraints:
        if constraint.asset_id != diagnostic.asset_id \
                or constraint.anchor_asset_id != diagnostic.anchor_id:
            continue
        if diagnostic.kind == "relationship" and constraint.relationship is not None:
            if constraint.relationship == "on_top_of":
                return _check_on_top_of(layout, constraint, tol, boxes)
            return _check_planar_relationship(layout, constraint, tol, boxes,
                                              fix_to_center=escalation > 0)
        if diagnostic.kind == "contact" and constraint.contact is not None:
            return _check_contact(layout, constraint, tol, boxes)
        if diagnostic.kind == "direction" and constraint.direction is not None:
            return _check_direction(layout, constraint, tol, boxes)
    return None


def _resolve_subject_placement(layout: SceneLayout, constraint: SpatialConstraint,
                               tol: Tolerances, boxes: dict[str, Aabb],
                               escalation: int) -> Placement:
    """Placement satisfying the subject's whole constraint bundle at once.

    Fixing relationship, contact, direction, and penetration one at a time
    can oscillate when the subject is wedged between neighbors; a joint move
    settles the bundle in one step. Candidates are simulated with their final
    rotation (a re-aimed box has different extents), and escalation widens the
    search from minimal moves to a scan for space clear of every other box.
    """
    subject = layout.placements[constraint.asset_id]
    anchor = layout.placements[constraint.anchor_asset_id]
    s_box = boxes[constraint.asset_id]
    a_box = boxes[constraint.anchor_asset_id]

    def final_placement(loc: Vec3) -> Placement:
        rotation = subject.rotation
        if constraint.direction and not _xy_coincident(loc, anchor.location):
            facing = facing_rotation_z(loc.xy, anchor.location.xy)
            rotation = EulerDeg(rotation.x, rotation.y,
                                wrap_deg(facing + DIRECTION_OFFSET[constraint.direction]))
        return replace(subject, location=loc, rotation=rotation)

    def clear_of(p: Placement, pool: Mapping[str, Aabb]) -> bool:
        box = world_aabb(p)
        return all(
            (pen := penetration(box, ob)) is None
            or pen.depth < tol.occlusion_penetration_m
            for ob in pool.values()
        )

    others = {oid: box for oid, box in boxes.items()
              if oid not in (constraint.asset_id, constraint.anchor_asset_id)}

    if constraint.relationship == "on_top_of":
        dz = a_box.max.z - s_box.min.z
        overlap_x = min(s_box.max.x, a_box.max.x) - max(s_box.min.x, a_box.min.x)
        overlap_y = min(s_box.max.y, a_box.max.y) - max(s_box.min.y, a_box.min.y)
        center = a_box.center
        candidates: list[Vec3] = []
        if overlap_x > 0 and overlap_y > 0 and escalation == 0:
            candidates.append(Vec3(subject.location.x, subject.location.y,
                                   subject.location.z + dz))
        candidates.append(Vec3(center.x, center.y, subject.location.z + dz))
        if escalation >= 1:
            # slide across the anchor's top: any footprint overlap still counts
            slide_x = (a_box.size.x + s_box.size.x) / 2.0
            slide_y = (a_box.size.y + s_box.size.y) / 2.0
            for frac in (0.4, 0.75):
                for ux, uy in ((1, 0), (-1, 0), (0, 1), (0, -1),
                               (1, 1), (-1, 1), (1, -1), (-1, -1)):
                    candidates.append(Vec3(center.x + ux * frac * slide_x,
                                           center.y + uy * frac * slide_y,
                                           subject.location.z + dz))
        chosen = final_placement(candidates[0])
        for candidate in candidates:
            p = final_placement(candidate)
            if clear_of(p, others):
                chosen = p
                break
        return chosen

    if constraint.relationship is None:
        # direction-only: keep position when possible, otherwise step out of
        # whatever the re-aimed box penetrates, cheapest separation first
        aimed = final_placement(subject.location)
        aimed_box = world_aabb(aimed)
        pool = {oid: box for oid, box in boxes.items() if oid != constraint.asset_id}
        pushes = []
        for oid, ob in sorted(pool.items()):
            pen = penetration(aimed_box, ob)
            if pen is not None and pen.depth >= tol.occlusion_penetration_m:
                pushes.extend(_planar_separations(aimed_box, ob))
        pushes.sort(key=lambda opt: opt.depth)
        candidates = [subject.location] + \
            [subject.location + opt.mtv for opt in pushes]
        chosen = final_placement(candidates[0])
        for candidate in candidates:
            p = final_placement(candidate)
            if clear_of(p, pool):
                chosen = p
                break
        return chosen

    center = SECTOR_CENTER[constraint.relationship]
    half = tol.bearing_sector_deg / 2.0
    dx = subject.location.x - anchor.location.x
    dy = subject.location.y - anchor.location.y
    r_current = math.hypot(dx, dy)
    if r_current < 1e-12:
        deviation = half + 1.0
    else:
        deviation = wrap_deg(bearing_deg(anchor.location.xy, subject.location.xy) - center)

    inset = half - _SECTOR_EDGE_INSET_DEG
    candidate_devs: list[float] = []
    if escalation == 0:
        candidate_devs.append(min(max(deviation, -inset), inset))
    for dev in (0.0, 11.25, -11.25, 22.5, -22.5, 33.75, -33.75, inset, -inset):
        if dev not in candidate_devs:
            candidate_devs.append(dev)

    pool_with_anchor = dict(others)
    pool_with_anchor[constraint.anchor_asset_id] = a_box
    chosen = None
    for dev in candidate_devs:
        rad = math.radians(center + dev)
        # the re-aimed rotation changes the subject's extents, and with them
        # the touching distance: size the radius for the final box shape
        probe_loc = Vec3(anchor.location.x + math.cos(rad),
                         anchor.location.y + math.sin(rad), subject.location.z)
        probe = final_placement(probe_loc)
        probe_box = world_aabb(probe)
        ex_sum = (probe_box.size.x + a_box.size.x) / 2.0
        ey_sum = (probe_box.size.y + a_box.size.y) / 2.0
        r_floor = _clear_range_from_extents(ex_sum, ey_sum, rad)
        if constraint.contact is True:
            # touching, or almost: any gap within the budget still counts
            radii = [r_floor, r_floor + 0.9 * tol.contact_gap_m]
        elif constraint.contact is False:
            radii = [max(r_current, r_floor + 2.0 * tol.contact_gap_m)]
            radii.append(radii[0] + 1.0)
        else:
            radii = [max(r_current, r_floor), max(r_current, r_floor) + 1.0]
        found = False
        for r_target in radii:
            r_fit = _fit_range_to_footprint(layout.scene_size, probe, probe_box,
                                            anchor.location, rad, r_target)
            loc = Vec3(anchor.location.x + r_fit * math.cos(rad),
                       anchor.location.y + r_fit * math.sin(rad),
                       subject.location.z)
            p = final_placement(loc)
            if chosen is None:
                chosen = p
            if clear_of(p, pool_with_anchor):
                chosen = p
                found = True
                break
        if found:
            break
    assert chosen is not None
    return chosen


def _push_blocker(layout: SceneLayout, blocker_id: str, occupied: Aabb,
                  tol: Tolerances,
                  blocker_constraint: SpatialConstraint | None) -> SceneLayout:
    """Shove a blocker out of newly claimed space, if its bundle allows it.

    Separating directions are tried cheapest-first; a push is kept only when
    the blocker's positional constraints (relationship, contact) still verify
    and no deeper penetration with third parties appears. Direction never
    vetoes a push because the blocker can always spin in place; it is
    re-aimed immediately. A blocker with no workable push stays put.
    """
    blocker = layout.placements[blocker_id]
    options = _planar_separations(world_aabb(blocker), occupied)

    def moved_placement(option) -> Placement:
        p = replace(blocker, location=blocker.location + option.mtv)
        if blocker_constraint is not None and blocker_constraint.direction:
            anchor = layout.placements.get(blocker_constraint.anchor_asset_id)
            if anchor is not None and not _xy_coincident(p.location, anchor.location):
                facing = facing_rotation_z(p.location.xy, anchor.location.xy)
                p = replace(p, rotation=EulerDeg(
                    p.rotation.x, p.rotation.y,
                    wrap_deg(facing + DIRECTION_OFFSET[blocker_constraint.direction]),
                ))
        return p

    for option in options:
        candidate = layout.copy()
        candidate.placements[blocker_id] = moved_placement(option)
        boxes = _boxes(candidate)
        moved = boxes[blocker_id]
        collides = any(
            oid != blocker_id
            and (pen := penetration(moved, box)) is not None
            and pen.depth >= tol.occlusion_penetration_m
            for oid, box in boxes.items()
        )
        if collides:
            continue
        if blocker_constraint is not None:
            broke = (
                (blocker_constraint.relationship is not None
                 and _check_relationship(candidate, blocker_constraint, tol, boxes) is not None)
                or (blocker_constraint.contact is not None
                    and _check_contact(candidate, blocker_constraint, tol, boxes) is not None)
            )
            if broke:
                continue
        return candidate
    if blocker_constraint is None and options:
        fallback = layout.copy()
        fallback.placements[blocker_id] = replace(
            blocker, location=blocker.location + options[0].mtv
        )
        return fallback
    return layout


def clamp_to_footprint(layout: SceneLayout) -> SceneLayout:
    """Translate placements whose world boxes spill outside the scene bounds."""
    size = layout.scene_size
    out = None
    for aid, placement in layout.placements.items():
        box = world_aabb(placement)
        dx = dy = 0.0
        if box.min.x < size.x_negative:
            dx = size.x_negative - box.min.x
        elif box.max.x > size.x:
            dx = size.x - box.max.x
        if box.min.y < size.y_negative:
            dy = size.y_negative - box.min.y
        elif box.max.y > size.y:
            dy = size.y - box.max.y
        if dx or dy:
            if out is None:
                out = layout.copy()
            out.placements[aid] = replace(
                placement, location=placement.location + Vec3(dx, dy, 0.0)
            )
    return out if out is not None else layout


def count_by_kind(diagnostics: Sequence[Diagnostic]) -> dict[str, int]:
    counts = {"direction": 0, "relationship": 0, "occlusion": 0, "contact": 0}
    for d in diagnostics:
        counts[d.kind] += 1
    return counts


def repair_scene(layout: SceneLayout, diagnostics: list[Diagnostic] | None = None,
                 max_turns: int = 5, tol: Tolerances = Tolerances()) -> RepairResult:
    """Iteratively apply corrective transforms until the scene verifies clean.

    Per turn, fixes apply in a fixed order: anchors before their dependents
    (topological tiers over anchor edges), contact -> relationship ->
    direction -> occlusion within a tier, subject id within a kind. Each fix
    is re-derived against the current working state immediately before
    application, so settled anchors propagate within a single turn. Placements
    that drift outside the scene bounds are clamped back after each turn.

    Exhausting the turn budget is not an error: the best layout and the
    residual diagnostics are returned with ``converged=False``.
    """
    current = layout
    diags = verify_scene(current, tol) if diagnostics is None else list(diagnostics)
    per_turn = [count_by_kind(diags)]
    turns = 0
    attempt_counts: dict[tuple, int] = {}
    before = current
    while diags and turns < max_turns:
        before = current
        tiers = _topo_tiers(current)
        joint_constraint: dict[str, SpatialConstraint] = {}
        for c in current.constraints:
            if c.anchor_asset_id is None:
                continue
            if c.relationship is not None or (c.direction is not None and c.contact is None):
                joint_constraint.setdefault(c.asset_id, c)
        # a mover owning a relationship or direction constraint is settled
        # with one joint move covering its whole bundle (and any penetrations
        # it is part of); everything else gets its per-diagnostic fix
        units: dict[tuple, Diagnostic] = {}
        for d in diags:
            c = joint_constraint.get(d.asset_id)
            if c is not None:
                units.setdefault(("joint", c.asset_id, c.anchor_asset_id), d)
            else:
                units[(d.kind, d.asset_id, d.anchor_id)] = d
        ordered = sorted(
            units.items(),
            key=lambda kv: (tiers.get(kv[1].asset_id, len(tiers)),
                            0 if kv[0][0] == "joint" else _KIND_RANK[kv[1].kind],
                            kv[1].asset_id),
        )
        applied: set[tuple] = set()
        for key, stale in ordered:
            escalation = attempt_counts.get(key, 0)
            if key[0] == "joint":
                c = joint_constraint[key[1]]
                boxes = _boxes(current)
                exempt = _stacked_pairs(current.constraints)
                s_box = boxes[c.asset_id]
                penetrates_other = any(
                    oid != c.asset_id
                    and frozenset((oid, c.asset_id)) not in exempt
                    and (pen := penetration(s_box, ob)) is not None
                    and pen.depth >= tol.occlusion_penetration_m
                    for oid, ob in boxes.items()
                )
                still = (
                    penetrates_other
                    or (c.relationship is not None
                        and _check_relationship(current, c, tol, boxes) is not None)
                    or (c.contact is not None
                        and _check_contact(current, c, tol, boxes) is not None)
                    or (c.direction is not None
                        and _check_direction(current, c, tol, boxes) is not None)
                )
                if still:
                    resolved = _resolve_subject_placement(current, c, tol, boxes, escalation)
                    current = current.copy()
                    current.placements[c.asset_id] = resolved
                    applied.add(key)
                    if escalation >= 1:
                        # every candidate home is blocked: make room by
                        # pushing blockers aside (the anchor included, e.g.
                        # when it hugs a wall) where their own constraints
                        # tolerate the move
                        exempt_with_subject = {
                            pair for pair in exempt if c.asset_id in pair
                        }
                        moved_box = world_aabb(resolved)
                        for oid in sorted(current.placements):
                            if oid == c.asset_id:
                                continue
                            if frozenset((oid, c.asset_id)) in exempt_with_subject:
                                continue
                            pen = penetration(world_aabb(current.placements[oid]), moved_box)
                            if pen is None or pen.depth < tol.occlusion_penetration_m:
                                continue
                            current = _push_blocker(
                                current, oid, moved_box, tol,
                                joint_constraint.get(oid),
                            )
            else:
                fresh = _recheck(current, stale, tol, escalation=escalation)
                if fresh is not None:
                    current = apply_fix(current, fresh)
                    applied.add(key)
        for key in applied:
            attempt_counts[key] = attempt_counts.get(key, 0) + 1
        current = clamp_to_footprint(current)
        new_diags = verify_scene(current, tol)
        if len(new_diags) <= len(diags):
            before = current  # accepted
            diags = new_diags
        else:
            # a turn may not make the scene worse: revert it, keeping the
            # escalation bumps so the next attempt tries deeper options
            current = before
        per_turn.append(count_by_kind(diags))
        turns += 1
    return RepairResult(
        layout=current,
        turns_used=turns,
        per_turn_counts=per_turn,
        converged=not diags,
        residual=diags,
    )


# ---------------------------------------------------------------------------
# scene shell


GROUND_THICKNESS = 0.1
WALL_THICKNESS = 0.1
WALL_HEIGHT = 3.0


def generate_scene_shell(scene_size: SceneSize, scene_type: str,
                         wall_height: float = WALL_HEIGHT,
                         wall_thickness: float = WALL_THICKNESS) -> SceneShell:
    """Ground slab always; four wall slabs at the borders for indoor scenes.

    Wall inner faces sit exactly at the scene bounds, so mounting an asset of
    depth d on the +X wall lands at x = bound - d/2 with spin -90.
    """
    s = scene_size
    ground = Aabb(
        Vec3(s.x_negative, s.y_negative, -GROUND_THICKNESS),
        Vec3(s.x, s.y, 0.0),
    )
    walls: dict[str, Aabb] = {}
    if scene_type == "indoor":
        walls["x"] = Aabb(Vec3(s.x, s.y_negative, 0.0),
                          Vec3(s.x + wall_thickness, s.y, wall_height))
        walls["x_negative"] = Aabb(Vec3(s.x_negative - wall_thickness, s.y_negative, 0.0),
                                   Vec3(s.x_negative, s.y, wall_height))
        walls["y"] = Aabb(Vec3(s.x_negative, s.y, 0.0),
                          Vec3(s.x, s.y + wall_thickness, wall_height))
        walls["y_negative"] = Aabb(Vec3(s.x_negative, s.y_negative - wall_thickness, 0.0),
                                   Vec3(s.x, s.y_negative, wall_height))
    return SceneShell(ground=ground, walls=walls)


_WALL_MOUNT = {
    # side -> (axis, inward sign, spin facing into the room)
    "x": (0, -1.0, -90.0),
    "x_negative": (0, 1.0, 90.0),
    "y": (1, -1.0, 0.0),
    "y_negative": (1, 1.0, 180.0),
}


def wall_mount(scene_size: SceneSize, side: str, subject_dims: Vec3,
               along: float = 0.0, z: float = 0.0) -> Placement:
    """Placement for an asset mounted flush on a wall, facing into the room.

    The asset's back touches the wall inner face: its center sits half its
    depth inside the border. ``along`` slides it along the wall.
    """
    if side not in _WALL_MOUNT:
        raise LayoutSchemaError(f"unknown wall side {side!r}")
    axis, inward, spin = _WALL_MOUNT[side]
    border = {
        "x": scene_size.x, "x_negative": scene_size.x_negative,
        "y": scene_size.y, "y_negative": scene_size.y_negative,
    }[side]
    offset = border + inward * subject_dims.y / 2.0
    if axis == 0:
        loc = Vec3(offset, along, z)
    else:
        loc = Vec3(along, offset, z)
    return Placement(loc, EulerDeg(0, 0, spin), subject_dims)


# ---------------------------------------------------------------------------
# shot modifications


def apply_shot_modifications(layout: SceneLayout, shot_id: int) -> SceneLayout:
    """Layout for one shot: targeted placements replaced, everything else
    bit-identical. Removals drop the asset and prune constraints that
    reference it.
    """
    mods = layout.shot_modifications.get(shot_id, [])
    if not mods:
        return layout
    out = layout.copy()
    for mod in mods:
        if mod.kind == "remove":
            if mod.asset_id not in out.placements:
                raise UnknownAssetError(mod.asset_id)
            del out.placements[mod.asset_id]
            out.constraints = [
                c for c in out.constraints
                if c.asset_id != mod.asset_id and c.anchor_asset_id != mod.asset_id
            ]
            continue
        if mod.kind == "add":
            if mod.dimensions is None or mod.target_location is None:
                raise LayoutSchemaError(f"add of {mod.asset_id} needs dimensions and a location")
            out.placements[mod.asset_id] = Placement(
                mod.target_location, mod.target_rotation or EulerDeg(0, 0, 0), mod.dimensions
            )
        else:  # transform
            existing = out.placements.get(mod.asset_id)
            if existing is None:
                raise UnknownAssetError(mod.asset_id)
            out.placements[mod.asset_id] = replace(
                existing,
                location=mod.target_location if mod.target_location is not None else existing.location,
                rotation=mod.target_rotation if mod.target_rotation is not None else existing.rotation,
            )
        if mod.has_constraint_update:
            out.constraints = [c for c in out.constraints if c.asset_id != mod.asset_id]
            out.constraints.append(SpatialConstraint(
                asset_id=mod.asset_id,
                anchor_asset_id=mod.anchor_asset_id,
                relationship=mod.relationship,
                contact=mod.contact,
                direction=mod.direction,
            ))
    return out


# ---------------------------------------------------------------------------
# drift metric


def spatial_drift_error(shots: Sequence[Mapping[str, Placement]],
                        static_ids: Iterable[str]) -> float:
    """Mean per-shot-pair displacement of the 8 oriented-box corners of the
    static assets, averaged over assets.
    """
    shots = list(shots)
    if len(shots) < 2:
        raise InsufficientShots(f"need >= 2 shots, got {len(shots)}")
    static_ids = sorted(set(static_ids))
    if not static_ids:
        return 0.0
    per_asset = []
    for aid in static_ids:
        corner_tracks = []
        for k, shot in enumerate(shots):
            placement = shot.get(aid)
            if placement is None:
                raise MissingStaticAsset(f"{aid} missing from shot index {k}")
            corner_tracks.append(world_corners(placement))
        pair_means = []
        for k in range(len(shots) - 1):
            deltas = corner_tracks[k + 1] - corner_tracks[k]
            dists = (deltas * deltas).sum(axis=1) ** 0.5
            pair_means.append(float(dists.mean()))
        per_asset.append(sum(pair_means) / len(pair_means))
    return sum(per_asset) / len(per_asset)


# ---------------------------------------------------------------------------
# JSON io (planner wire format)


def _vec_from_json(doc, what: str) -> Vec3:
    try:
        return Vec3(float(doc["x"]), float(doc["y"]), float(doc["z"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise LayoutSchemaError(f"bad {what}: {doc!r}") from exc


def _euler_from_json(doc) -> EulerDeg:
    try:
        return EulerDeg(float(doc["x"]), float(doc["y"]), float(doc["z"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise LayoutSchemaError(f"bad rotation: {doc!r}") from exc


def _dims_from_json(doc) -> Vec3:
    if isinstance(doc, Mapping):
        return Vec3(float(doc["width"]), float(doc["depth"]), float(doc["height"]))
    w, d, h = doc
    return Vec3(float(w), float(d), float(h))


def layout_from_json(doc: Mapping, dimensions: Mapping[str, Vec3] | None = None) -> SceneLayout:
    """Parse a planner layout document.

    Asset extents come from ``dimensions``, falling back to an embedded
    ``asset_dimensions`` map, then to unit cubes.
    """
    scene = doc.get("scene", doc)
    try:
        ss = scene["scene_size"]
        scene_size = SceneSize(float(ss["x"]), float(ss["x_negative"]),
                               float(ss["y"]), float(ss["y_negative"]))
        asset_docs = scene["assets"]
    except (KeyError, TypeError) as exc:
        raise LayoutSchemaError(f"layout document missing {exc}") from exc
    embedded = scene.get("asset_dimensions", {})

    def dims_for(asset_id: str) -> Vec3:
        if dimensions and asset_id in dimensions:
            return dimensions[asset_id]
        if asset_id in embedded:
            return _dims_from_json(embedded[asset_id])
        return Vec3(1.0, 1.0, 1.0)

    placements: dict[str, Placement] = {}
    constraints: list[SpatialConstraint] = []
    for entry in asset_docs:
        aid = entry.get("asset_id")
        if not aid:
            raise LayoutSchemaError(f"asset entry missing asset_id: {entry!r}")
        if aid in placements:
            raise LayoutSchemaError(f"duplicate asset_id {aid!r} in layout")
        placements[aid] = Placement(
            _vec_from_json(entry["location"], "location"),
            _euler_from_json(entry["rotation"]),
            dims_for(aid),
        )
        constraint = SpatialConstraint(
            asset_id=aid,
            anchor_asset_id=entry.get("anchor_asset_id"),
            relationship=entry.get("relationship"),
            contact=entry.get("contact"),
            direction=entry.get("direction"),
        )
        if constraint.anchor_asset_id is not None:
            constraints.append(constraint)

    shot_mods: dict[int, list[ShotModification]] = {}
    for shot_entry in scene.get("shot_asset_modifications") or []:
        shot_id = int(shot_entry["shot_id"])
        mods = []
        for m in shot_entry.get("asset_modifications", []):
            has_constraint = any(
                k in m for k in ("anchor_asset_id", "relationship", "contact", "direction")
            )
            mods.append(ShotModification(
                asset_id=m["asset_id"],
                kind=m.get("kind", "transform"),
                target_location=_vec_from_json(m["target_location"], "target_location")
                if m.get("target_location") is not None else None,
                target_rotation=_euler_from_json(m["target_rotation"])
                if m.get("target_rotation") is not None else None,
                dimensions=_dims_from_json(m["dimensions"]) if m.get("dimensions") else None,
                anchor_asset_id=m.get("anchor_asset_id"),
                relationship=m.get("relationship"),
                contact=m.get("contact"),
                direction=m.get("direction"),
                has_constraint_update=has_constraint,
            ))
        shot_mods[shot_id] = mods

    for c in constraints:
        if c.anchor_asset_id not in placements:
            raise UnknownAnchorError(c.anchor_asset_id)
    return SceneLayout(scene_size, placements, constraints, shot_mods)


def _vec_json(v: Vec3) -> dict:
    return {"x": v.x, "y": v.y, "z": v.z}


def layout_to_json(layout: SceneLayout, include_dimensions: bool = True) -> dict:
    """Serialize back to the planner wire format, stable key order."""
    constraint_by_id = {c.asset_id: c for c in layout.constraints}
    assets = []
    for aid in layout.placements:
        p = layout.placements[aid]
        c = constraint_by_id.get(aid)
        assets.append({
            "asset_id": aid,
            "location": _vec_json(p.location),
            "rotation": {"x": p.rotation.x, "y": p.rotation.y, "z": p.rotation.z},
            "anchor_asset_id": c.anchor_asset_id if c else None,
            "relationship": c.relationship if c else None,
            "contact": c.contact if c else None,
            "direction": c.direction if c else None,
        })
    scene: dict = {
        "scene_size": {
            "x": layout.scene_size.x, "x_negative": layout.scene_size.x_negative,
            "y": layout.scene_size.y, "y_negative": layout.scene_size.y_negative,
        },
        "assets": assets,
    }
    mods_out = []
    for shot_id in sorted(layout.shot_modifications):
        mods = []
        for m in layout.shot_modifications[shot_id]:
            entry: dict = {"asset_id": m.asset_id, "kind": m.kind}
            if m.target_location is not None:
                entry["target_location"] = _vec_json(m.target_location)
            if m.target_rotation is not None:
                entry["target_rotation"] = {
                    "x": m.target_rotation.x, "y": m.target_rotation.y, "z": m.target_rotation.z,
                }
            if m.dimensions is not None:
                entry["dimensions"] = _vec_json(m.dimensions)
            if m.has_constraint_update:
                entry["anchor_asset_id"] = m.anchor_asset_id
                entry["relationship"] = m.relationship
                entry["contact"] = m.contact
                entry["direction"] = m.direction
            mods.append(entry)
        mods_out.append({"shot_id": shot_id, "asset_modifications": mods})
    scene["shot_asset_modifications"] = mods_out or None
    if include_dimensions:
        scene["asset_dimensions"] = {
            aid: {"width": p.dimensions.x, "depth": p.dimensions.y, "height": p.dimensions.z}
            for aid, p in layout.placements.items()
        }
    return {"scene": scene}


def diagnostic_to_json(diag: Diagnostic) -> dict:
    fix: dict = {}
    if diag.fix.translation is not None:
        fix["translation"] = _vec_json(diag.fix.translation)
    if diag.fix.rotation_z is not None:
        fix["rotation_z"] = diag.fix.rotation_z
    return {
        "kind": diag.kind,
        "asset_id": diag.asset_id,
        "anchor_id": diag.anchor_id,
        "measured": diag.measured,
        "unit": diag.unit,
        "budget": diag.budget,
        "fix": fix,
        "detail": diag.detail,
    }


def repair_report_to_json(result: RepairResult) -> dict:
    """Per-turn error table (rows = error kinds, columns = turns)."""
    table = {
        kind: [counts[kind] for counts in result.per_turn_counts]
        for kind in ("direction", "relationship", "occlusion", "contact")
    }
    return {
        "turns_used": result.turns_used,
        "converged": result.converged,
        "per_turn_counts": result.per_turn_counts,
        "error_table": table,
        "residual": [diagnostic_to_json(d) for d in result.residual],
    }
