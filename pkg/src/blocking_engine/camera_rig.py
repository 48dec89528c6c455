"""Orbital camera model and discrete servoing.

A camera state is (pivot, unit quaternion, distance) with fixed intrinsics;
the world position is pivot + R(q) . (0, 0, d), looking along the local -Z
axis with +Y up. Framing refinement runs as discrete servo commands (pan,
orbit, zoom, roll) scored by a deterministic geometric critic: a thresholded
reflection loop keeps the best state seen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .geometry import Aabb, UnitQuat, Vec3, aabb_point_distance
from .reflection_core import Feedback, ReflectionConfig, run_reflection


class EmptyTargets(ValueError):
    """Camera initialization needs at least one target box."""


class InvalidMargin(ValueError):
    """The framing safety margin must exceed 1."""


class MissingDirection(ValueError):
    """Pan and orbit movements need a direction."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Fixed optics. The vertical field of view follows from sensor and lens."""

    focal_length_mm: float = 35.0
    aperture: float = 2.8  # carried through to export for depth of field
    sensor_height_mm: float = 24.0
    viewport_height_px: int = 1080
    viewport_aspect: float = 16.0 / 9.0
    mode: str = "perspective"

    def __post_init__(self) -> None:
        if self.focal_length_mm <= 0 or self.sensor_height_mm <= 0:
            raise ValueError("focal length and sensor height must be positive")

    @property
    def vertical_fov_rad(self) -> float:
        return 2.0 * math.atan(self.sensor_height_mm / (2.0 * self.focal_length_mm))

    @property
    def horizontal_fov_rad(self) -> float:
        half_tan = math.tan(self.vertical_fov_rad / 2.0) * self.viewport_aspect
        return 2.0 * math.atan(half_tan)


@dataclass(frozen=True)
class CameraState:
    pivot: Vec3
    rotation: UnitQuat
    distance: float
    intrinsics: CameraIntrinsics

    def __post_init__(self) -> None:
        if self.distance <= 0:
            raise ValueError("orbital distance must be positive")


SERVO_OPS = (
    "pan_left", "pan_right", "pan_up", "pan_down",
    "orbit_left", "orbit_right", "orbit_up", "orbit_down",
    "zoom_in", "zoom_out", "roll_left", "roll_right",
)

OPPOSITE_OP = {
    "pan_left": "pan_right", "pan_right": "pan_left",
    "pan_up": "pan_down", "pan_down": "pan_up",
    "orbit_left": "orbit_right", "orbit_right": "orbit_left",
    "orbit_up": "orbit_down", "orbit_down": "orbit_up",
    "zoom_in": "zoom_out", "zoom_out": "zoom_in",
    "roll_left": "roll_right", "roll_right": "roll_left",
}


@dataclass(frozen=True)
class ServoCommand:
    op: str
    magnitude: float = 1.0

    def __post_init__(self) -> None:
        if self.op not in SERVO_OPS:
            raise ValueError(f"unknown servo op {self.op!r}")
        if not math.isfinite(self.magnitude):
            raise ValueError("magnitude must be finite")

    @property
    def opposite(self) -> "ServoCommand":
        return ServoCommand(OPPOSITE_OP[self.op], self.magnitude)


@dataclass(frozen=True)
class ServoConfig:
    """Per-step sizes for the discrete commands."""

    pan_step_frac: float = 0.1      # of viewport height, in pixels
    orbit_step_deg: float = 15.0
    roll_step_deg: float = 15.0
    dolly_base: float = 2.0
    dolly_step: float = 0.5         # exponent per zoom step


# frame-height coverage bands per distance class
DISTANCE_BANDS = {
    "close-up": (0.60, float("inf")),
    "medium shot": (0.30, 0.60),
    "long shot": (0.0, 0.30),
}

# camera elevation targets per angle class, degrees above the horizon
ANGLE_PITCH_DEG = {
    "eye-level": 0.0,
    "high angle": 20.0,
    "low angle": -20.0,
}

_VIEW_YAW_DEG = {"front": 0.0, "right": 90.0, "back": 180.0, "left": -90.0}


@dataclass(frozen=True)
class FramingSpec:
    focus_ids: tuple[str, ...] = ()
    angle: str = "eye-level"
    distance: str = "medium shot"
    movement: str = "static"
    direction: str | None = None
    view: str = "front"

    def __post_init__(self) -> None:
        if self.angle not in ANGLE_PITCH_DEG:
            raise ValueError(f"unknown angle {self.angle!r}")
        if self.distance not in DISTANCE_BANDS:
            raise ValueError(f"unknown distance {self.distance!r}")
        if self.view not in _VIEW_YAW_DEG:
            raise ValueError(f"unknown view {self.view!r}")
        if self.movement in ("pan", "orbit") and self.direction is None:
            raise MissingDirection(f"{self.movement} movement needs a direction")


def view_rotation(view: str, angle: str = "eye-level") -> UnitQuat:
    """Canonical-view quaternion: yaw for the view, pitched per angle class."""
    base = UnitQuat.from_axis_angle_deg(Vec3(0, 0, 1), _VIEW_YAW_DEG[view]).compose(
        UnitQuat.from_axis_angle_deg(Vec3(1, 0, 0), 90.0)
    )
    pitch = ANGLE_PITCH_DEG[angle]
    if pitch:
        base = base.compose(UnitQuat.from_axis_angle_deg(Vec3(1, 0, 0), -pitch))
    return base


def init_camera(target_boxes: Sequence[Aabb], spec: FramingSpec,
                focal_length_mm: float = 35.0, margin: float = 1.2,
                intrinsics: CameraIntrinsics | None = None) -> CameraState:
    """Initial state: pivot at the union-box centroid, canonical view rotation,
    distance from the bounding-sphere containment bound d = r . margin / sin(fov/2).
    """
    if not target_boxes:
        raise EmptyTargets("no target boxes")
    if margin < 1.0:
        raise InvalidMargin(f"margin must be >= 1, got {margin}")
    optics = intrinsics or CameraIntrinsics(focal_length_mm=focal_length_mm)
    union = Aabb.union(target_boxes)
    pivot = union.center
    r_bound = (union.max - pivot).norm()
    if r_bound == 0.0:
        r_bound = 1e-6  # degenerate point target
    distance = r_bound * margin / math.sin(optics.vertical_fov_rad / 2.0)
    return CameraState(
        pivot=pivot,
        rotation=view_rotation(spec.view, spec.angle),
        distance=distance,
        intrinsics=optics,
    )


@dataclass(frozen=True)
class CameraPose:
    position: Vec3
    view_matrix: np.ndarray
    world_matrix: np.ndarray


def camera_pose(state: CameraState) -> CameraPose:
    """World position and the view matrix T(0,0,-d) . R(q)^T . T(-pivot)."""
    rot = state.rotation.matrix()
    offset = rot @ np.array([0.0, 0.0, state.distance])
    position = state.pivot.as_array() + offset

    world = np.eye(4)
    world[:3, :3] = rot
    world[:3, 3] = position

    view = np.eye(4)
    view[:3, :3] = rot.T
    view[:3, 3] = -(rot.T @ position)
    return CameraPose(Vec3.from_array(position), view, world)


def pan_sensitivity(state: CameraState) -> float:
    """Meters of pivot motion per screen pixel at the pivot plane."""
    optics = state.intrinsics
    return (2.0 * state.distance * math.tan(optics.vertical_fov_rad / 2.0)
            / optics.viewport_height_px)


_PAN_SCREEN_DIR = {
    "pan_left": (-1.0, 0.0), "pan_right": (1.0, 0.0),
    "pan_up": (0.0, 1.0), "pan_down": (0.0, -1.0),
}

_ORBIT_AXIS_SIGN = {
    "orbit_left": (Vec3(0, 1, 0), -1.0), "orbit_right": (Vec3(0, 1, 0), 1.0),
    "orbit_up": (Vec3(1, 0, 0), -1.0), "orbit_down": (Vec3(1, 0, 0), 1.0),
}

_ROLL_SIGN = {"roll_left": 1.0, "roll_right": -1.0}


def apply_servo(state: CameraState, cmd: ServoCommand,
                config: ServoConfig = ServoConfig()) -> CameraState:
    """One discrete extrinsic update; intrinsics never change.

    pan: pivot slides in the image plane with depth-scaled sensitivity;
    orbit/roll: quaternion composition about camera-local axes;
    zoom: exponential dolly d' = d * base^(-step * magnitude).
    """
    op = cmd.op
    if op.startswith("pan"):
        sx, sy = _PAN_SCREEN_DIR[op]
        px = config.pan_step_frac * state.intrinsics.viewport_height_px * cmd.magnitude
        eta = pan_sensitivity(state)
        delta_local = np.array([sx * px * eta, sy * px * eta, 0.0])
        delta_world = state.rotation.matrix() @ delta_local
        return replace(state, pivot=state.pivot + Vec3.from_array(delta_world))
    if op.startswith("orbit"):
        axis, sign = _ORBIT_AXIS_SIGN[op]
        step = UnitQuat.from_axis_angle_deg(axis, sign * config.orbit_step_deg * cmd.magnitude)
        return replace(state, rotation=state.rotation.compose(step))
    if op.startswith("roll"):
        step = UnitQuat.from_axis_angle_deg(
            Vec3(0, 0, 1), _ROLL_SIGN[op] * config.roll_step_deg * cmd.magnitude
        )
        return replace(state, rotation=state.rotation.compose(step))
    # zoom
    kappa = config.dolly_step * cmd.magnitude
    if op == "zoom_out":
        kappa = -kappa
    return replace(state, distance=state.distance * config.dolly_base ** (-kappa))


# ---------------------------------------------------------------------------
# geometric framing critic


def _view_points(state: CameraState, boxes: Sequence[Aabb]) -> np.ndarray:
    pose = camera_pose(state)
    pts = []
    for box in boxes:
        for c in box.corners():
            pts.append(c.as_array())
    homo = np.hstack([np.array(pts), np.ones((len(pts), 1))])
    return (pose.view_matrix @ homo.T).T[:, :3]


def _in_frustum(view_pts: np.ndarray, optics: CameraIntrinsics, tol: float = 1e-9) -> np.ndarray:
    z = view_pts[:, 2]
    tan_v = math.tan(optics.vertical_fov_rad / 2.0)
    tan_h = tan_v * optics.viewport_aspect
    in_front = z < 0
    depth = np.where(in_front, -z, 1.0)
    ok_y = np.abs(view_pts[:, 1]) <= tan_v * depth + tol
    ok_x = np.abs(view_pts[:, 0]) <= tan_h * depth + tol
    return in_front & ok_x & ok_y


def corners_in_frustum(state: CameraState, boxes: Sequence[Aabb]) -> bool:
    if not boxes:
        return True
    return bool(_in_frustum(_view_points(state, boxes), state.intrinsics).all())


def aabb_intersects_frustum(state: CameraState, box: Aabb) -> bool:
    """Conservative plane test of a box against the camera frustum."""
    pose = camera_pose(state)
    corners = np.array([c.as_array() for c in box.corners()])
    homo = np.hstack([corners, np.ones((8, 1))])
    view = (pose.view_matrix @ homo.T).T[:, :3]
    optics = state.intrinsics
    tan_v = math.tan(optics.vertical_fov_rad / 2.0)
    tan_h = tan_v * optics.viewport_aspect
    x, y, z = view[:, 0], view[:, 1], view[:, 2]
    # all corners outside one plane -> no intersection
    if (z >= 0).all():
        return False
    if (y > -tan_v * z).all() or (-y > -tan_v * z).all():
        return False
    if (x > -tan_h * z).all() or (-x > -tan_h * z).all():
        return False
    return True


def camera_elevation_deg(state: CameraState) -> float:
    """Elevation of the camera above the pivot's horizontal plane, degrees."""
    pose = camera_pose(state)
    offset = pose.position - state.pivot
    r = offset.norm()
    if r == 0:
        return 0.0
    return math.degrees(math.asin(max(-1.0, min(1.0, offset.z / r))))


@dataclass(frozen=True)
class FramingReport:
    score: int
    satisfied: bool
    suggestion: ServoCommand | None
    penalties: dict = field(default_factory=dict)


def _score_only(state: CameraState, boxes: Sequence[Aabb], spec: FramingSpec) -> tuple[int, dict]:
    optics = state.intrinsics
    penalties: dict[str, int] = {}
    view_pts = _view_points(state, boxes)
    inside = _in_frustum(view_pts, optics)
    if not inside.all():
        penalties["corners_outside"] = 4

    tan_v = math.tan(optics.vertical_fov_rad / 2.0)
    tan_h = tan_v * optics.viewport_aspect
    union = Aabb.union(boxes)
    pose = camera_pose(state)
    center_view = pose.view_matrix @ np.append(union.center.as_array(), 1.0)
    if center_view[2] >= 0:
        # looking away from the subject entirely: every criterion fails
        penalties["centroid_offset"] = 2
        penalties["coverage"] = 2
        penalties["angle"] = 1
    else:
        depth = -center_view[2]
        ndc_x = center_view[0] / (tan_h * depth)
        ndc_y = center_view[1] / (tan_v * depth)
        if max(abs(ndc_x), abs(ndc_y)) > 0.15:
            penalties["centroid_offset"] = 2
        z = view_pts[:, 2]
        visible = z < 0
        if visible.any():
            ndc_ys = view_pts[visible, 1] / (tan_v * -z[visible])
            coverage = (ndc_ys.max() - ndc_ys.min()) / 2.0
        else:
            coverage = 0.0
        lo, hi = DISTANCE_BANDS[spec.distance]
        if not (lo <= coverage < hi):
            penalties["coverage"] = 2

    if "angle" not in penalties \
            and abs(camera_elevation_deg(state) - ANGLE_PITCH_DEG[spec.angle]) > 10.0:
        penalties["angle"] = 1

    score = max(1, min(10, 10 - sum(penalties.values())))
    return score, penalties


def framing_score(state: CameraState, target_boxes: Sequence[Aabb], spec: FramingSpec,
                  config: ServoConfig = ServoConfig()) -> FramingReport:
    """Deterministic critic: penalties for corners outside the frustum (-4),
    off-center framing (-2), coverage outside the distance band (-2), and
    elevation off the angle class (-1). The suggestion is the command whose
    simulated application scores best (ties resolve in the fixed op order).
    """
    if not target_boxes:
        return FramingReport(score=10, satisfied=True, suggestion=None)
    score, penalties = _score_only(state, target_boxes, spec)
    satisfied = score >= 8
    suggestion = None
    if not satisfied:
        best_op, best_score = None, score
        for op in SERVO_OPS:
            candidate = apply_servo(state, ServoCommand(op), config)
            c_score, _ = _score_only(candidate, target_boxes, spec)
            if c_score > best_score:
                best_op, best_score = op, c_score
        if best_op is None:
            # no single step improves: still nominate the least-bad move
            for op in SERVO_OPS:
                candidate = apply_servo(state, ServoCommand(op), config)
                c_score, _ = _score_only(candidate, target_boxes, spec)
                if best_op is None or c_score > best_score:
                    best_op, best_score = op, c_score
        suggestion = ServoCommand(best_op) if best_op else None
    return FramingReport(score=score, satisfied=satisfied, suggestion=suggestion,
                         penalties=penalties)


# ---------------------------------------------------------------------------
# servo loop


@dataclass
class ServoOutcome:
    final: CameraState
    status: str
    turns_used: int
    trace: list[tuple[str | None, float]]  # (command applied before score, score)


class _ServoPolicy:
    """Bridges the critic and the step commands into the reflection engine.

    A step that lowers the score is reverted with the opposite command before
    the next suggestion is taken.
    """

    def __init__(self, initial: CameraState, critic: Callable[[CameraState], FramingReport],
                 config: ServoConfig):
        self.initial = initial
        self.critic = critic
        self.config = config
        self.last_command: ServoCommand | None = None
        self.prev_score: float | None = None
        self.trace: list[tuple[str | None, float]] = []

    def generate(self, context) -> CameraState:
        return self.initial

    def score(self, state: CameraState, context) -> Feedback:
        report = self.critic(state)
        self.trace.append((self.last_command.op if self.last_command else None, report.score))
        return Feedback(score=report.score, critique=report,
                        suggested_refinement=report.suggestion)

    def refine(self, state: CameraState, feedback: Feedback, context) -> CameraState:
        suggestion = feedback.suggested_refinement
        if (self.last_command is not None and self.prev_score is not None
                and feedback.score < self.prev_score):
            state = apply_servo(state, self.last_command.opposite, self.config)
            report = self.critic(state)
            suggestion = report.suggestion
        self.prev_score = max(feedback.score, self.prev_score or float("-inf"))
        if suggestion is None:
            self.last_command = None
            return state
        self.last_command = suggestion
        return apply_servo(state, suggestion, self.config)

    def fallback(self, context) -> CameraState:  # pragma: no cover - best mode only
        return self.initial


def servo_loop(state: CameraState, spec: FramingSpec,
               critic: Callable[[CameraState], FramingReport] | None = None,
               target_boxes: Sequence[Aabb] = (),
               threshold: float = 8.0, max_turns: int = 5,
               config: ServoConfig = ServoConfig()) -> ServoOutcome:
    """Refine framing with discrete steps until the critic is satisfied.

    Exhausting the budget is not an error: the best-scoring state seen is
    returned, flagged as budget_exhausted_best.
    """
    if critic is None:
        boxes = list(target_boxes)
        critic = lambda s: framing_score(s, boxes, spec, config)  # noqa: E731
    policy = _ServoPolicy(state, critic, config)
    outcome = run_reflection(
        policy, None,
        ReflectionConfig(threshold=threshold, horizon=max_turns, budget_mode="best"),
    )
    return ServoOutcome(
        final=outcome.result,
        status=outcome.status,
        turns_used=outcome.turns_used,
        trace=policy.trace,
    )


# ---------------------------------------------------------------------------
# movement planning


@dataclass(frozen=True)
class Keyframe:
    frame: int
    state: CameraState
    focus_distance: float | None = None


@dataclass
class KeyframeTrack:
    keyframes: list[Keyframe]
    interpolation: str = "Bezier"

    def __post_init__(self) -> None:
        frames = [k.frame for k in self.keyframes]
        if frames != sorted(set(frames)):
            raise ValueError("keyframe frames must be strictly increasing")


@dataclass(frozen=True)
class MovementExtents:
    """How far a movement travels between its start and end keyframes."""

    pan_frac: float = 0.3       # of viewport height, in pixels
    orbit_deg: float = 45.0
    zoom_kappa: float = 1.0     # dolly exponent


_MOVE_PAN = {"left": "pan_left", "right": "pan_right", "up": "pan_up", "down": "pan_down"}
_MOVE_ORBIT = {"left": "orbit_left", "right": "orbit_right",
               "up": "orbit_up", "down": "orbit_down"}


def _focus_distance(state: CameraState, target_boxes: Sequence[Aabb]) -> float | None:
    if not target_boxes:
        return None
    position = camera_pose(state).position
    return min(aabb_point_distance(position, box) for box in target_boxes)


def plan_movement(state: CameraState, movement: str, direction: str | None,
                  n_frames: int, target_boxes: Sequence[Aabb] = (),
                  extents: MovementExtents = MovementExtents(),
                  config: ServoConfig = ServoConfig()) -> KeyframeTrack:
    """Start and end keyframes for the shot's camera movement.

    Static shots hold one keyframe. Every keyframe carries the nearest
    target-surface distance for focus pulling.
    """
    if movement in ("pan", "orbit") and direction is None:
        raise MissingDirection(f"{movement} movement needs a direction")
    start = Keyframe(1, state, _focus_distance(state, target_boxes))
    if movement == "static":
        return KeyframeTrack([start])

    if movement == "pan":
        magnitude = extents.pan_frac / config.pan_step_frac
        end_state = apply_servo(state, ServoCommand(_MOVE_PAN[direction], magnitude), config)
    elif movement == "orbit":
        magnitude = extents.orbit_deg / config.orbit_step_deg
        end_state = apply_servo(state, ServoCommand(_MOVE_ORBIT[direction], magnitude), config)
    elif movement == "zoom in":
        magnitude = extents.zoom_kappa / config.dolly_step
        end_state = apply_servo(state, ServoCommand("zoom_in", magnitude), config)
    elif movement == "zoom out":
        magnitude = extents.zoom_kappa / config.dolly_step
        end_state = apply_servo(state, ServoCommand("zoom_out", magnitude), config)
    else:
        raise ValueError(f"unknown movement {movement!r}")
    end = Keyframe(max(n_frames, 2), end_state, _focus_distance(end_state, target_boxes))
    return KeyframeTrack([start, end])


# ---------------------------------------------------------------------------
# export


def state_to_json(state: CameraState) -> dict:
    return {
        "pivot": {"x": state.pivot.x, "y": state.pivot.y, "z": state.pivot.z},
        "quaternion_wxyz": [state.rotation.w, state.rotation.x,
                            state.rotation.y, state.rotation.z],
        "distance": state.distance,
    }


def state_from_json(doc: dict, intrinsics: CameraIntrinsics) -> CameraState:
    q = doc["quaternion_wxyz"]
    return CameraState(
        pivot=Vec3(doc["pivot"]["x"], doc["pivot"]["y"], doc["pivot"]["z"]),
        rotation=UnitQuat(q[0], q[1], q[2], q[3]),
        distance=doc["distance"],
        intrinsics=intrinsics,
    )


def track_to_json(track: KeyframeTrack) -> dict:
    if not track.keyframes:
        raise ValueError("empty track")
    optics = track.keyframes[0].state.intrinsics
    return {
        "intrinsics": {
            "focal_length_mm": optics.focal_length_mm,
            "aperture": optics.aperture,
            "sensor_height_mm": optics.sensor_height_mm,
            "vertical_fov_rad": optics.vertical_fov_rad,
            "viewport_height_px": optics.viewport_height_px,
            "viewport_aspect": optics.viewport_aspect,
            "mode": optics.mode,
        },
        "keyframes": [
            {
                "frame": kf.frame,
                **state_to_json(kf.state),
                "focus_distance": kf.focus_distance,
            }
            for kf in track.keyframes
        ],
        "interpolation": track.interpolation,
    }


def track_from_json(doc: dict) -> KeyframeTrack:
    optics_doc = doc["intrinsics"]
    optics = CameraIntrinsics(
        focal_length_mm=optics_doc["focal_length_mm"],
        aperture=optics_doc["aperture"],
        sensor_height_mm=optics_doc["sensor_height_mm"],
        viewport_height_px=optics_doc["viewport_height_px"],
        viewport_aspect=optics_doc["viewport_aspect"],
        mode=optics_doc["mode"],
    )
    return KeyframeTrack(
        keyframes=[
            Keyframe(
                frame=kf["frame"],
                state=state_from_json(kf, optics),
                focus_distance=kf.get("focus_distance"),
            )
            for kf in doc["keyframes"]
        ],
        interpolation=doc.get("interpolation", "Bezier"),
    )
