"""Live non-destructive editing over a built world.

A session pins one shot of a world and accepts structured edits: servo
commands route through the camera rig, placement edits mutate exactly the
named asset and come back with advisory diagnostics (manual edits are never
auto-repaired), and undo restores the previous state byte for byte. Clients
echo the version they saw; a mismatch is rejected as stale.

HTTP surface (JSON bodies, stable key order):
  POST /sessions                      {world, cursor}        -> {session_id, ...}
  POST /sessions/{id}/edits           {edit, expected_version} -> edit result
  GET  /sessions/{id}/state?detail=summary|snapshot|topdown_svg|log
  GET  /sessions/{id}/events          server-push stream of {version, changed_ids}
Errors respond as {code, message, details}.
"""
from __future__ import annotations

import copy
import json
import queue
import re
import threading
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .camera_rig import (
    CameraState,
    ServoCommand,
    ServoConfig,
    apply_servo,
    plan_movement,
    track_to_json,
)
from .geometry import EulerDeg, Placement, UnitQuat, Vec3
from .layout_engine import (
    SceneLayout,
    SpatialConstraint,
    Tolerances,
    diagnostic_to_json,
    verify_scene,
)
from .pipeline import StoryWorld, canonical_json, export_snapshot, load_world
from .topdown import render_shot_svg

EDIT_KINDS = ("servo_command", "set_placement", "add_asset", "remove_asset",
              "set_camera_param", "undo")


class UnknownSession(KeyError):
    pass


class UnknownTarget(KeyError):
    pass


class StaleVersion(RuntimeError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"client expected version {expected}, session is at {actual}")
        self.expected = expected
        self.actual = actual


class EditSchemaError(ValueError):
    pass


@dataclass
class EditResult:
    accepted: bool
    version: int
    changed_ids: list[str]
    diagnostics: list[dict]

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "version": self.version,
            "changed_ids": self.changed_ids,
            "diagnostics": self.diagnostics,
        }


@dataclass
class _ShotState:
    """The mutable live state of one shot under editing."""

    placements: dict[str, Placement]
    asset_types: dict[str, str]
    constraints: list[SpatialConstraint]
    camera: CameraState

    def clone(self) -> "_ShotState":
        return copy.deepcopy(self)


@dataclass
class Session:
    session_id: str
    world: StoryWorld
    scene_id: int
    shot_id: int
    state: _ShotState
    version: int = 0
    edit_log: list[dict] = field(default_factory=list)
    undo_stack: list[_ShotState] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list[queue.SimpleQueue] = field(default_factory=list)
    servo_config: ServoConfig = field(default_factory=ServoConfig)

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self.lock:
            self.subscribers.append(q)
        return q

    def unsubscribe(self, q) -> None:
        with self.lock:
            if q in self.subscribers:
                self.subscribers.remove(q)

    def _publish(self, changed_ids: list[str]) -> None:
        event = {"version": self.version, "changed_ids": changed_ids}
        for q in list(self.subscribers):
            q.put(event)


def _initial_state(world: StoryWorld, scene_id: int, shot_id: int) -> _ShotState:
    shot = world.shot(scene_id, shot_id)
    scene = world.scenes[scene_id]
    return _ShotState(
        placements=dict(shot.placements),
        asset_types={aid: a.asset_type for aid, a in scene.assets.items()},
        constraints=list(shot.constraints),
        camera=shot.camera_track.keyframes[0].state,
    )


def open_session(world: StoryWorld, scene_id: int, shot_id: int,
                 session_id: str | None = None) -> Session:
    if scene_id not in world.scenes or shot_id not in world.scenes[scene_id].shots:
        raise UnknownTarget(f"scene {scene_id} shot {shot_id}")
    return Session(
        session_id=session_id or uuid.uuid4().hex[:12],
        world=world,
        scene_id=scene_id,
        shot_id=shot_id,
        state=_initial_state(world, scene_id, shot_id),
    )


# ---------------------------------------------------------------------------
# edit application


def _advisory_diagnostics(session: Session) -> list[dict]:
    state = session.state
    live = {c.asset_id for c in state.constraints} | \
           {c.anchor_asset_id for c in state.constraints if c.anchor_asset_id}
    constraints = [
        c for c in state.constraints
        if c.asset_id in state.placements
        and (c.anchor_asset_id is None or c.anchor_asset_id in state.placements)
    ]
    scene_size = session.world.scenes[session.scene_id].layout.scene_size
    layout = SceneLayout(scene_size, dict(state.placements), constraints)
    return [diagnostic_to_json(d) for d in verify_scene(layout, Tolerances())]


def _vec_from(doc, fallback: Vec3 | None = None) -> Vec3:
    if doc is None and fallback is not None:
        return fallback
    try:
        return Vec3(float(doc["x"]), float(doc["y"]), float(doc["z"]))
    except (TypeError, KeyError, ValueError) as exc:
        raise EditSchemaError(f"bad vector {doc!r}") from exc


def _apply_servo_edit(session: Session, payload: dict) -> list[str]:
    op = payload.get("op")
    try:
        cmd = ServoCommand(op=op, magnitude=float(payload.get("magnitude", 1.0)))
    except (TypeError, ValueError) as exc:
        raise EditSchemaError(str(exc)) from exc
    session.state.camera = apply_servo(session.state.camera, cmd, session.servo_config)
    return ["camera"]


def _apply_set_placement(session: Session, payload: dict) -> list[str]:
    asset_id = payload.get("asset_id")
    placement = session.state.placements.get(asset_id)
    if placement is None:
        raise UnknownTarget(asset_id or "<missing asset_id>")
    location = _vec_from(payload.get("location"), placement.location)
    dims_doc = payload.get("dimensions")
    dimensions = placement.dimensions
    if dims_doc is not None:
        dimensions = Vec3(float(dims_doc["width"]), float(dims_doc["depth"]),
                          float(dims_doc["height"]))
    rotation = placement.rotation
    rot_doc = payload.get("rotation")
    if rot_doc is not None:
        rotation = EulerDeg(float(rot_doc["x"]), float(rot_doc["y"]), float(rot_doc["z"]))
    session.state.placements[asset_id] = Placement(location, rotation, dimensions)
    return [asset_id]


def _apply_add_asset(session: Session, payload: dict) -> list[str]:
    asset_id = payload.get("asset_id")
    if not asset_id:
        raise EditSchemaError("add_asset needs an asset_id")
    if asset_id in session.state.placements:
        raise EditSchemaError(f"asset {asset_id!r} already present")
    dims_doc = payload.get("dimensions")
    if dims_doc is None:
        raise EditSchemaError("add_asset needs dimensions")
    placement = Placement(
        _vec_from(payload.get("location"), Vec3(0, 0, 0)),
        EulerDeg(**payload.get("rotation", {"x": 0, "y": 0, "z": 0})),
        Vec3(float(dims_doc["width"]), float(dims_doc["depth"]), float(dims_doc["height"])),
    )
    session.state.placements[asset_id] = placement
    session.state.asset_types[asset_id] = payload.get("asset_type", "object")
    return [asset_id]


def _apply_remove_asset(session: Session, payload: dict) -> list[str]:
    asset_id = payload.get("asset_id")
    if asset_id not in session.state.placements:
        raise UnknownTarget(asset_id or "<missing asset_id>")
    del session.state.placements[asset_id]
    session.state.constraints = [
        c for c in session.state.constraints
        if c.asset_id != asset_id and c.anchor_asset_id != asset_id
    ]
    return [asset_id]


def _apply_set_camera_param(session: Session, payload: dict) -> list[str]:
    camera = session.state.camera
    pivot = _vec_from(payload.get("pivot"), camera.pivot)
    distance = float(payload.get("distance", camera.distance))
    rotation = camera.rotation
    quat = payload.get("quaternion_wxyz")
    if quat is not None:
        rotation = UnitQuat(*[float(v) for v in quat])
    session.state.camera = CameraState(pivot, rotation, distance, camera.intrinsics)
    return ["camera"]


def apply_edit(session: Session, edit: dict, expected_version: int | None = None) -> EditResult:
    """Apply one structured edit under optimistic concurrency.

    Accepted edits bump the version and push a {version, changed_ids} event;
    diagnostics ride along as advisories and never block a manual edit.
    """
    kind = edit.get("kind")
    if kind not in EDIT_KINDS:
        raise EditSchemaError(f"unknown edit kind {kind!r}")
    payload = edit.get("payload", {})
    with session.lock:
        if expected_version is not None and expected_version != session.version:
            raise StaleVersion(expected_version, session.version)

        if kind == "undo":
            if not session.undo_stack:
                raise EditSchemaError("nothing to undo")
            previous = session.undo_stack.pop()
            changed = sorted(
                {aid for aid in set(previous.placements) | set(session.state.placements)
                 if previous.placements.get(aid) != session.state.placements.get(aid)}
            )
            if previous.camera != session.state.camera:
                changed.append("camera")
            session.state = previous
            session.version += 1
            session.edit_log.append({"kind": "undo", "payload": {}})
            diagnostics = _advisory_diagnostics(session)
            result = EditResult(True, session.version, changed, diagnostics)
        else:
            snapshot = session.state.clone()
            try:
                if kind == "servo_command":
                    changed = _apply_servo_edit(session, payload)
                elif kind == "set_placement":
                    changed = _apply_set_placement(session, payload)
                elif kind == "add_asset":
                    changed = _apply_add_asset(session, payload)
                elif kind == "remove_asset":
                    changed = _apply_remove_asset(session, payload)
                else:
                    changed = _apply_set_camera_param(session, payload)
            except Exception:
                session.state = snapshot  # edits are all-or-nothing
                raise
            session.undo_stack.append(snapshot)
            session.version += 1
            session.edit_log.append({"kind": kind, "payload": payload})
            diagnostics = _advisory_diagnostics(session) if kind in (
                "set_placement", "add_asset", "remove_asset") else []
            result = EditResult(True, session.version, changed, diagnostics)
    session._publish(result.changed_ids)
    return result


def replay_edit_log(world: StoryWorld, scene_id: int, shot_id: int,
                    edit_log: list[dict]) -> Session:
    """Fold the log over a fresh session; the result equals the live state."""
    session = open_session(world, scene_id, shot_id)
    for edit in edit_log:
        apply_edit(session, edit)
    return session


# ---------------------------------------------------------------------------
# read side


def session_snapshot(session: Session) -> dict:
    """Snapshot of the edited state in the standard shot-snapshot schema."""
    with session.lock:
        state = session.state
        base = export_snapshot(session.world, session.scene_id, session.shot_id)
        cam = session.world.graph.shot_context[(session.scene_id, session.shot_id)]
        instruction = cam.camera_instruction
        track = plan_movement(
            state.camera, instruction.movement, instruction.direction,
            session.world.config.movement_frames,
            [  # focus boxes from the edited placements
                _world_box(state.placements[aid])
                for aid in instruction.focus_on_ids if aid in state.placements
            ],
            config=session.servo_config,
        )
        base["placements"] = [
            _placement_entry(aid, state.placements[aid],
                             state.asset_types.get(aid, "object"))
            for aid in sorted(state.placements)
        ]
        base["constraints"] = [
            {
                "asset_id": c.asset_id,
                "anchor_asset_id": c.anchor_asset_id,
                "relationship": c.relationship,
                "contact": c.contact,
                "direction": c.direction,
            }
            for c in state.constraints
        ]
        base["camera_track"] = track_to_json(track)
        return base


def _world_box(p: Placement):
    from .geometry import world_aabb

    return world_aabb(p)


def _placement_entry(asset_id: str, p: Placement, asset_type: str) -> dict:
    return {
        "asset_id": asset_id,
        "asset_type": asset_type,
        "location": {"x": p.location.x, "y": p.location.y, "z": p.location.z},
        "rotation": {"x": p.rotation.x, "y": p.rotation.y, "z": p.rotation.z},
        "dimensions": {"width": p.dimensions.x, "depth": p.dimensions.y,
                       "height": p.dimensions.z},
    }


def session_state(session: Session, detail: str = "summary"):
    if detail == "summary":
        with session.lock:
            diagnostics = _advisory_diagnostics(session)
            return {
                "session_id": session.session_id,
                "cursor": {"scene_id": session.scene_id, "shot_id": session.shot_id},
                "version": session.version,
                "edit_count": len(session.edit_log),
                "residual_diagnostics": len(diagnostics),
            }
    if detail == "log":
        # sessions are rebuildable from the world plus this log
        with session.lock:
            return {
                "session_id": session.session_id,
                "version": session.version,
                "edit_log": [dict(e) for e in session.edit_log],
            }
    if detail == "snapshot":
        return session_snapshot(session)
    if detail == "topdown_svg":
        with session.lock:
            scene = session.world.scenes[session.scene_id]
            focus = session.world.shot(session.scene_id, session.shot_id).camera_spec.focus_ids
            return render_shot_svg(
                scene.layout.scene_size,
                session.state.placements,
                shell=scene.shell,
                camera_state=session.state.camera,
                focus_ids=set(focus),
            )
    raise EditSchemaError(f"unknown detail {detail!r}")


# ---------------------------------------------------------------------------
# HTTP server


class SessionManager:
    def __init__(self, world: StoryWorld):
        self.world = world
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()

    def create(self, scene_id: int, shot_id: int) -> Session:
        session = open_session(self.world, scene_id, shot_id)
        with self.lock:
            self.sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session


_SESSION_EDITS = re.compile(r"^/sessions/([0-9a-f]+)/edits$")
_SESSION_STATE = re.compile(r"^/sessions/([0-9a-f]+)/state$")
_SESSION_EVENTS = re.compile(r"^/sessions/([0-9a-f]+)/events$")


class EditorRequestHandler(BaseHTTPRequestHandler):
    manager: SessionManager  # injected by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        body = canonical_json(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self) -> None:  # noqa: N802 - CORS preflight for the studio
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _send_error_body(self, status: int, code: str, message: str, details=None) -> None:
        self._send_json(status, {"code": code, "message": message, "details": details})

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        try:
            return json.loads(raw.decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise EditSchemaError(f"body is not valid JSON: {exc}") from exc

    def do_POST(self) -> None:  # noqa: N802 - stdlib naming
        try:
            if self.path == "/sessions":
                body = self._read_body()
                cursor = body.get("cursor", {})
                session = self.manager.create(
                    int(cursor.get("scene_id", 0)), int(cursor.get("shot_id", 0))
                )
                self._send_json(200, {
                    "session_id": session.session_id,
                    "version": session.version,
                    "cursor": {"scene_id": session.scene_id, "shot_id": session.shot_id},
                })
                return
            match = _SESSION_EDITS.match(self.path)
            if match:
                session = self.manager.get(match.group(1))
                body = self._read_body()
                result = apply_edit(session, body.get("edit", {}),
                                    body.get("expected_version"))
                self._send_json(200, result.to_json())
                return
            self._send_error_body(404, "not_found", f"no route {self.path}")
        except StaleVersion as exc:
            self._send_error_body(409, "stale_version", str(exc),
                                  {"actual_version": exc.actual})
        except (UnknownSession, UnknownTarget) as exc:
            self._send_error_body(404, "unknown_target", str(exc))
        except EditSchemaError as exc:
            self._send_error_body(400, "schema", str(exc))
        except Exception as exc:  # noqa: BLE001
            self._send_error_body(500, "internal", str(exc))

    def do_GET(self) -> None:  # noqa: N802
        try:
            path, _, query = self.path.partition("?")
            match = _SESSION_STATE.match(path)
            if match:
                session = self.manager.get(match.group(1))
                params = dict(p.split("=", 1) for p in query.split("&") if "=" in p)
                detail = params.get("detail", "summary")
                result = session_state(session, detail)
                if detail == "topdown_svg":
                    body = result.encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "image/svg+xml")
                    self.send_header("Content-Length", str(len(body)))
                    self.send_header("Access-Control-Allow-Origin", "*")
                    self.end_headers()
                    self.wfile.write(body)
                else:
                    self._send_json(200, result)
                return
            match = _SESSION_EVENTS.match(path)
            if match:
                session = self.manager.get(match.group(1))
                self._stream_events(session)
                return
            self._send_error_body(404, "not_found", f"no route {path}")
        except UnknownSession as exc:
            self._send_error_body(404, "unknown_target", str(exc))
        except EditSchemaError as exc:
            self._send_error_body(400, "schema", str(exc))
        except Exception as exc:  # noqa: BLE001
            self._send_error_body(500, "internal", str(exc))

    def _stream_events(self, session: Session) -> None:
        q = session.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Connection", "close")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            while True:
                try:
                    event = q.get(timeout=15.0)
                except queue.Empty:
                    self.wfile.write(b": keep-alive\n\n")
                    self.wfile.flush()
                    continue
                data = json.dumps(event).encode("utf-8")
                self.wfile.write(b"data: " + data + b"\n\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            session.unsubscribe(q)


def make_server(world_dir: str, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    world = load_world(world_dir)
    manager = SessionManager(world)
    handler = type("BoundHandler", (EditorRequestHandler,), {"manager": manager})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve_forever(world_dir: str, port: int) -> None:  # pragma: no cover - CLI loop
    server = make_server(world_dir, port)
    print(f"editing service on http://127.0.0.1:{server.server_address[1]}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
