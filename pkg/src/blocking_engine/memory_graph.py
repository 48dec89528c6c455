"""The continuity memory graph: the persistent world state across scenes and
shots, parsed from storyboard JSON and guarded by a validating commit gate.

Four layers: an outline (scene/shot sequencing), the asset sheet (globally
unique entities), scene context (static environment per scene), and shot
context (per-shot camera and modifications). Task-scoped projections hand
each downstream consumer only the records it needs; commits go through a
caller-supplied validator and either bump the version atomically or return
the validator's diagnostics untouched.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

ASSET_TYPES = ("character", "object")
SCENE_TYPES = ("indoor", "outdoor")
ANGLES = ("eye-level", "high angle", "low angle")
DISTANCES = ("close-up", "medium shot", "long shot")
MOVEMENTS = ("static", "pan", "orbit", "zoom in", "zoom out")
DIRECTIONS = ("left", "right", "up", "down")
MODIFICATION_KINDS = ("add", "remove", "transform")
CONTEXT_TASKS = ("layout", "camera", "asset", "metrics")


class SchemaError(ValueError):
    """Missing field, wrong type, or value outside its enum."""


class UnknownReferenceError(ValueError):
    """A record references an id that does not exist (or may not be referenced)."""


class DuplicateIdError(ValueError):
    """An id that must be unique appears twice."""


class CycleError(ValueError):
    """A scene reference chain loops (impossible for well-formed graphs)."""


class UnknownTaskTarget(ValueError):
    """A context projection was asked for ids that do not fit the task."""


class ValidatorFailure(RuntimeError):
    """The commit validator itself raised; the graph is untouched."""


# Fields each task's context slice may expose. The metrics slice carries
# structural hooks only: ids, enums, and counts, never free-text prose.
METRICS_FIELD_ALLOWLIST = {
    "shot": ("scene_id", "shot_id"),
    "camera_instruction": ("focus_on_ids", "angle", "distance", "movement", "direction"),
    "asset_modification": ("asset_id", "kind"),
    "asset": ("asset_id", "asset_type"),
}


def _require(doc: Mapping, key: str, kind, where: str):
    if key not in doc:
        raise SchemaError(f"{where}: missing required field {key!r}")
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise SchemaError(f"{where}: field {key!r} has type {type(value).__name__}")
    return value


def _enum(value, allowed, where: str, key: str):
    if value not in allowed:
        raise SchemaError(f"{where}: {key} {value!r} not one of {allowed}")
    return value


def _extras(doc: Mapping, known: tuple[str, ...]) -> dict:
    return {k: doc[k] for k in doc if k not in known}


@dataclass
class ShotOutline:
    shot_id: int
    shot_description: str
    extras: dict = field(default_factory=dict)


@dataclass
class SceneOutline:
    scene_id: int
    scene_description: str
    shots: list[ShotOutline]
    extras: dict = field(default_factory=dict)


@dataclass
class AssetRecord:
    asset_id: str
    asset_type: str
    description: str
    reference_character: str | None = None
    text_to_image_prompt: str = ""
    extras: dict = field(default_factory=dict)


@dataclass
class SceneRecord:
    scene_id: int
    reference_scene_id: int | None
    asset_ids: list[str]
    scene_type: str
    layout_description: str
    lighting_description: str = ""
    ground_description: str = ""
    wall_description: str | None = None
    extras: dict = field(default_factory=dict)
    # engine state committed through the gate, never part of storyboard JSON
    committed_layout: Any = None


@dataclass
class AssetModification:
    asset_id: str
    kind: str
    description: str | None = None
    extras: dict = field(default_factory=dict)


@dataclass
class CharacterAction:
    asset_id: str
    action_description: str
    extras: dict = field(default_factory=dict)


@dataclass
class CameraInstruction:
    focus_on_ids: list[str]
    angle: str
    distance: str
    movement: str
    direction: str | None
    description: str
    extras: dict = field(default_factory=dict)


@dataclass
class ShotRecord:
    scene_id: int
    shot_id: int
    camera_instruction: CameraInstruction
    asset_modifications: list[AssetModification] | None = None
    character_actions: list[CharacterAction] | None = None
    sound_effect: str | None = None
    extras: dict = field(default_factory=dict)
    committed_camera: Any = None


@dataclass
class ContinuityMemoryGraph:
    story_summary: str
    outline: list[SceneOutline]
    asset_sheet: dict[str, AssetRecord]
    scene_context: dict[int, SceneRecord]
    shot_context: dict[tuple[int, int], ShotRecord]
    version: int = 0
    extras: dict = field(default_factory=dict)

    def scene_ids(self) -> list[int]:
        return sorted(self.scene_context)

    def shots_of(self, scene_id: int) -> list[int]:
        return sorted(sid for (scn, sid) in self.shot_context if scn == scene_id)


@dataclass(frozen=True)
class ContextSlice:
    task: str
    scene_id: int | None
    shot_id: int | None
    payload: dict


@dataclass(frozen=True)
class Proposal:
    kind: str  # scene_layout | shot_camera | shot_modification
    payload: Any
    scene_id: int | None = None
    shot_id: int | None = None
    provenance: str = "policy"

    def __post_init__(self) -> None:
        if self.kind not in ("scene_layout", "shot_camera", "shot_modification"):
            raise SchemaError(f"unknown proposal kind {self.kind!r}")


@dataclass
class DiagnosticReport:
    proposal_kind: str
    scene_id: int | None
    shot_id: int | None
    diagnostics: Any


@dataclass
class CommitResult:
    accepted: bool
    graph: ContinuityMemoryGraph
    report: DiagnosticReport | None = None


# ---------------------------------------------------------------------------
# parsing


_SHOT_OUTLINE_KEYS = ("shot_id", "shot_description")
_SCENE_OUTLINE_KEYS = ("scene_id", "scene_description", "shots")
_ASSET_KEYS = ("asset_id", "asset_type", "description", "reference_character",
               "text_to_image_prompt")
_SCENE_SETUP_KEYS = ("reference_scene_id", "asset_ids", "scene_type", "layout_description",
                     "lighting_description", "ground_description", "wall_description")
_CAMERA_KEYS = ("focus_on_ids", "angle", "distance", "movement", "direction", "description")
_MOD_KEYS = ("asset_id", "modification_type", "description")
_ACTION_KEYS = ("asset_id", "action_description")
_SHOT_DETAIL_KEYS = ("scene_id", "shot_id", "asset_modifications", "character_actions",
                     "lighting_modification", "sound_effect", "camera_instruction")
_TOP_KEYS = ("story_summary", "storyboard_outline", "asset_sheet", "scene_details",
             "shot_details")


def parse_storyboard(document: str | Mapping) -> ContinuityMemoryGraph:
    """Parse and validate storyboard JSON into a graph.

    Unknown fields are preserved on each record so documents round-trip.
    """
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise SchemaError("storyboard document must be a JSON object")

    story_summary = _require(doc, "story_summary", str, "storyboard")

    outline = []
    seen_scene_ids: list[int] = []
    for scene_doc in _require(doc, "storyboard_outline", list, "storyboard"):
        scene_id = _require(scene_doc, "scene_id", int, "storyboard_outline")
        if seen_scene_ids and scene_id <= seen_scene_ids[-1]:
            raise SchemaError(
                f"scene ids must be strictly increasing, got {scene_id} after {seen_scene_ids[-1]}"
            )
        seen_scene_ids.append(scene_id)
        shots = []
        last_shot = 0
        for shot_doc in _require(scene_doc, "shots", list, f"scene {scene_id} outline"):
            shot_id = _require(shot_doc, "shot_id", int, f"scene {scene_id} shot outline")
            if shot_id != last_shot + 1:
                raise SchemaError(
                    f"scene {scene_id}: shot ids must increase from 1, got {shot_id}"
                )
            last_shot = shot_id
            shots.append(ShotOutline(
                shot_id=shot_id,
                shot_description=_require(shot_doc, "shot_description", str,
                                          f"scene {scene_id} shot {shot_id}"),
                extras=_extras(shot_doc, _SHOT_OUTLINE_KEYS),
            ))
        outline.append(SceneOutline(
            scene_id=scene_id,
            scene_description=_require(scene_doc, "scene_description", str,
                                       f"scene {scene_id}"),
            shots=shots,
            extras=_extras(scene_doc, _SCENE_OUTLINE_KEYS),
        ))

    asset_sheet: dict[str, AssetRecord] = {}
    for asset_doc in _require(doc, "asset_sheet", list, "storyboard"):
        asset_id = _require(asset_doc, "asset_id", str, "asset_sheet")
        if asset_id in asset_sheet:
            raise DuplicateIdError(f"duplicate asset_id {asset_id!r}")
        record = AssetRecord(
            asset_id=asset_id,
            asset_type=_enum(_require(asset_doc, "asset_type", str, f"asset {asset_id}"),
                             ASSET_TYPES, f"asset {asset_id}", "asset_type"),
            description=_require(asset_doc, "description", str, f"asset {asset_id}"),
            reference_character=asset_doc.get("reference_character"),
            text_to_image_prompt=asset_doc.get("text_to_image_prompt", ""),
            extras=_extras(asset_doc, _ASSET_KEYS),
        )
        asset_sheet[asset_id] = record
    for record in asset_sheet.values():
        ref = record.reference_character
        if ref is not None and ref not in asset_sheet:
            raise UnknownReferenceError(
                f"asset {record.asset_id}: reference_character {ref!r} not in asset sheet"
            )

    scene_context: dict[int, SceneRecord] = {}
    for detail_doc in _require(doc, "scene_details", list, "storyboard"):
        scene_id = _require(detail_doc, "scene_id", int, "scene_details")
        if scene_id in scene_context:
            raise DuplicateIdError(f"duplicate scene_details for scene {scene_id}")
        if scene_id not in seen_scene_ids:
            raise UnknownReferenceError(f"scene_details for unknown scene {scene_id}")
        setup = _require(detail_doc, "scene_setup", Mapping, f"scene {scene_id}")
        ref = setup.get("reference_scene_id")
        if ref is not None and ref >= scene_id:
            raise UnknownReferenceError(
                f"scene {scene_id}: reference_scene_id {ref} must point to an earlier scene"
            )
        if ref is not None and ref not in seen_scene_ids:
            raise UnknownReferenceError(f"scene {scene_id}: unknown reference scene {ref}")
        asset_ids = _require(setup, "asset_ids", list, f"scene {scene_id}")
        if not asset_ids:
            raise SchemaError(f"scene {scene_id}: asset_ids must be non-empty")
        for aid in asset_ids:
            if aid not in asset_sheet:
                raise UnknownReferenceError(f"scene {scene_id}: unknown asset {aid!r}")
        scene_context[scene_id] = SceneRecord(
            scene_id=scene_id,
            reference_scene_id=ref,
            asset_ids=list(asset_ids),
            scene_type=_enum(_require(setup, "scene_type", str, f"scene {scene_id}"),
                             SCENE_TYPES, f"scene {scene_id}", "scene_type"),
            layout_description=_require(setup, "layout_description", str, f"scene {scene_id}"),
            lighting_description=setup.get("lighting_description", ""),
            ground_description=setup.get("ground_description", ""),
            wall_description=setup.get("wall_description"),
            extras=_extras(setup, _SCENE_SETUP_KEYS),
        )

    shot_context: dict[tuple[int, int], ShotRecord] = {}
    for shot_doc in _require(doc, "shot_details", list, "storyboard"):
        scene_id = _require(shot_doc, "scene_id", int, "shot_details")
        shot_id = _require(shot_doc, "shot_id", int, "shot_details")
        where = f"scene {scene_id} shot {shot_id}"
        if (scene_id, shot_id) in shot_context:
            raise DuplicateIdError(f"duplicate shot_details for {where}")
        if scene_id not in scene_context:
            raise UnknownReferenceError(f"{where}: no scene_details for scene {scene_id}")
        cam_doc = _require(shot_doc, "camera_instruction", Mapping, where)
        movement = _enum(_require(cam_doc, "movement", str, where),
                         MOVEMENTS, where, "movement")
        direction = cam_doc.get("direction")
        if movement in ("pan", "orbit"):
            if direction is None:
                raise SchemaError(f"{where}: movement {movement!r} requires a direction")
            _enum(direction, DIRECTIONS, where, "direction")
        elif direction is not None:
            raise SchemaError(f"{where}: direction given for movement {movement!r}")
        camera = CameraInstruction(
            focus_on_ids=list(_require(cam_doc, "focus_on_ids", list, where)),
            angle=_enum(_require(cam_doc, "angle", str, where), ANGLES, where, "angle"),
            distance=_enum(_require(cam_doc, "distance", str, where),
                           DISTANCES, where, "distance"),
            movement=movement,
            direction=direction,
            description=cam_doc.get("description", ""),
            extras=_extras(cam_doc, _CAMERA_KEYS),
        )
        modifications = None
        if shot_doc.get("asset_modifications") is not None:
            modifications = []
            for mod_doc in shot_doc["asset_modifications"]:
                aid = _require(mod_doc, "asset_id", str, where)
                if aid not in asset_sheet:
                    raise UnknownReferenceError(f"{where}: modification of unknown asset {aid!r}")
                modifications.append(AssetModification(
                    asset_id=aid,
                    kind=_enum(_require(mod_doc, "modification_type", str, where),
                               MODIFICATION_KINDS, where, "modification_type"),
                    description=mod_doc.get("description"),
                    extras=_extras(mod_doc, _MOD_KEYS),
                ))
        actions = None
        if shot_doc.get("character_actions") is not None:
            actions = []
            for act_doc in shot_doc["character_actions"]:
                aid = _require(act_doc, "asset_id", str, where)
                record = asset_sheet.get(aid)
                if record is None:
                    raise UnknownReferenceError(f"{where}: action for unknown asset {aid!r}")
                if record.asset_type != "character":
                    raise SchemaError(f"{where}: action on non-character asset {aid!r}")
                actions.append(CharacterAction(
                    asset_id=aid,
                    action_description=_require(act_doc, "action_description", str, where),
                    extras=_extras(act_doc, _ACTION_KEYS),
                ))
        shot_context[(scene_id, shot_id)] = ShotRecord(
            scene_id=scene_id,
            shot_id=shot_id,
            camera_instruction=camera,
            asset_modifications=modifications,
            character_actions=actions,
            sound_effect=shot_doc.get("sound_effect"),
            extras=_extras(shot_doc, _SHOT_DETAIL_KEYS),
        )

    graph = ContinuityMemoryGraph(
        story_summary=story_summary,
        outline=outline,
        asset_sheet=asset_sheet,
        scene_context=scene_context,
        shot_context=shot_context,
        extras=_extras(doc, _TOP_KEYS),
    )
    # focus targets must be onstage once the shot's modifications apply
    for (scene_id, shot_id), shot in graph.shot_context.items():
        onstage = set(onstage_assets(graph, scene_id, shot_id))
        for aid in shot.camera_instruction.focus_on_ids:
            if aid not in onstage:
                raise UnknownReferenceError(
                    f"scene {scene_id} shot {shot_id}: focus target {aid!r} not onstage"
                )
    return graph


def onstage_assets(graph: ContinuityMemoryGraph, scene_id: int, shot_id: int) -> list[str]:
    """Assets present in the shot: scene setup plus adds/removes through the
    shot list in order. Removed assets stay gone until a later add.
    """
    scene = graph.scene_context.get(scene_id)
    if scene is None:
        raise UnknownReferenceError(f"unknown scene {scene_id}")
    onstage = list(scene.asset_ids)
    for sid in graph.shots_of(scene_id):
        if sid > shot_id:
            break
        shot = graph.shot_context[(scene_id, sid)]
        for mod in shot.asset_modifications or []:
            if mod.kind == "add" and mod.asset_id not in onstage:
                onstage.append(mod.asset_id)
            elif mod.kind == "remove" and mod.asset_id in onstage:
                onstage.remove(mod.asset_id)
    return onstage


# ---------------------------------------------------------------------------
# serialization (canonical field order, extras appended)


def _outline_json(outline: list[SceneOutline]) -> list[dict]:
    return [
        {
            "scene_id": s.scene_id,
            "scene_description": s.scene_description,
            "shots": [
                {"shot_id": sh.shot_id, "shot_description": sh.shot_description, **sh.extras}
                for sh in s.shots
            ],
            **s.extras,
        }
        for s in outline
    ]


def graph_to_json(graph: ContinuityMemoryGraph) -> dict:
    return {
        "story_summary": graph.story_summary,
        "storyboard_outline": _outline_json(graph.outline),
        "asset_sheet": [
            {
                "asset_id": a.asset_id,
                "asset_type": a.asset_type,
                "description": a.description,
                "reference_character": a.reference_character,
                "text_to_image_prompt": a.text_to_image_prompt,
                **a.extras,
            }
            for a in graph.asset_sheet.values()
        ],
        "scene_details": [
            {
                "scene_id": s.scene_id,
                "scene_setup": {
                    "reference_scene_id": s.reference_scene_id,
                    "asset_ids": list(s.asset_ids),
                    "scene_type": s.scene_type,
                    "layout_description": s.layout_description,
                    "lighting_description": s.lighting_description,
                    "ground_description": s.ground_description,
                    "wall_description": s.wall_description,
                    **s.extras,
                },
            }
            for s in graph.scene_context.values()
        ],
        "shot_details": [
            {
                "scene_id": sh.scene_id,
                "shot_id": sh.shot_id,
                "asset_modifications": None if sh.asset_modifications is None else [
                    {
                        "asset_id": m.asset_id,
                        "modification_type": m.kind,
                        "description": m.description,
                        **m.extras,
                    }
                    for m in sh.asset_modifications
                ],
                "character_actions": None if sh.character_actions is None else [
                    {
                        "asset_id": a.asset_id,
                        "action_description": a.action_description,
                        **a.extras,
                    }
                    for a in sh.character_actions
                ],
                "sound_effect": sh.sound_effect,
                "camera_instruction": {
                    "focus_on_ids": list(sh.camera_instruction.focus_on_ids),
                    "angle": sh.camera_instruction.angle,
                    "distance": sh.camera_instruction.distance,
                    "movement": sh.camera_instruction.movement,
                    "direction": sh.camera_instruction.direction,
                    "description": sh.camera_instruction.description,
                    **sh.camera_instruction.extras,
                },
                **sh.extras,
            }
            for sh in graph.shot_context.values()
        ],
        **graph.extras,
    }


def serialize_storyboard(graph: ContinuityMemoryGraph) -> str:
    return json.dumps(graph_to_json(graph), indent=2, ensure_ascii=False)


# ---------------------------------------------------------------------------
# scene resolution


def resolve_scene(graph: ContinuityMemoryGraph, scene_id: int) -> SceneRecord:
    """Effective scene with the reference chain flattened: optional fields
    inherit from the nearest scene in the chain that defines them.
    """
    scene = graph.scene_context.get(scene_id)
    if scene is None:
        raise UnknownReferenceError(f"unknown scene {scene_id}")
    chain = [scene]
    visited = {scene_id}
    cursor = scene
    while cursor.reference_scene_id is not None:
        ref = cursor.reference_scene_id
        if ref in visited:
            raise CycleError(f"scene reference cycle at {ref}")
        visited.add(ref)
        cursor = graph.scene_context.get(ref)
        if cursor is None:
            raise UnknownReferenceError(f"scene {scene_id}: missing reference scene {ref}")
        chain.append(cursor)

    def inherit(attr: str, empty):
        for record in chain:
            value = getattr(record, attr)
            if value is not None and value != empty:
                return value
        return getattr(scene, attr)

    return SceneRecord(
        scene_id=scene.scene_id,
        reference_scene_id=scene.reference_scene_id,
        asset_ids=list(scene.asset_ids),
        scene_type=scene.scene_type,
        layout_description=inherit("layout_description", ""),
        lighting_description=inherit("lighting_description", ""),
        ground_description=inherit("ground_description", ""),
        wall_description=inherit("wall_description", None),
        extras=dict(scene.extras),
        committed_layout=scene.committed_layout,
    )


# ---------------------------------------------------------------------------
# context projection


def _asset_payload(record: AssetRecord) -> dict:
    return {
        "asset_id": record.asset_id,
        "asset_type": record.asset_type,
        "description": record.description,
        "reference_character": record.reference_character,
    }


def project_context(graph: ContinuityMemoryGraph, task: str,
                    scene_id: int | None = None,
                    shot_id: int | None = None) -> ContextSlice:
    """The minimal sub-records a task needs; nothing outside the requested
    scene/shot lineage plus referenced global assets.
    """
    if task not in CONTEXT_TASKS:
        raise UnknownTaskTarget(f"unknown task {task!r}")

    if task == "layout":
        if scene_id is None:
            raise UnknownTaskTarget("layout context needs a scene_id")
        scene = resolve_scene(graph, scene_id)
        shot_mods = {}
        for sid in graph.shots_of(scene_id):
            shot = graph.shot_context[(scene_id, sid)]
            if shot.asset_modifications:
                shot_mods[sid] = [
                    {"asset_id": m.asset_id, "kind": m.kind, "description": m.description}
                    for m in shot.asset_modifications
                ]
        payload = {
            "scene": {
                "scene_id": scene.scene_id,
                "scene_type": scene.scene_type,
                "asset_ids": list(scene.asset_ids),
                "layout_description": scene.layout_description,
                "ground_description": scene.ground_description,
                "wall_description": scene.wall_description,
            },
            "assets": {aid: _asset_payload(graph.asset_sheet[aid])
                       for aid in scene.asset_ids},
            "shot_modifications": shot_mods,
        }
        return ContextSlice("layout", scene_id, None, payload)

    if task == "camera":
        if scene_id is None or shot_id is None:
            raise UnknownTaskTarget("camera context needs scene_id and shot_id")
        shot = graph.shot_context.get((scene_id, shot_id))
        if shot is None:
            raise UnknownTaskTarget(f"unknown shot ({scene_id}, {shot_id})")
        cam = shot.camera_instruction
        payload = {
            "scene_id": scene_id,
            "shot_id": shot_id,
            "camera_instruction": {
                "focus_on_ids": list(cam.focus_on_ids),
                "angle": cam.angle,
                "distance": cam.distance,
                "movement": cam.movement,
                "direction": cam.direction,
                "description": cam.description,
            },
            "focus_assets": {aid: _asset_payload(graph.asset_sheet[aid])
                             for aid in cam.focus_on_ids},
        }
        return ContextSlice("camera", scene_id, shot_id, payload)

    if task == "asset":
        if scene_id is not None:
            scene = resolve_scene(graph, scene_id)
            ids = scene.asset_ids
        else:
            ids = list(graph.asset_sheet)
        payload = {"assets": {aid: _asset_payload(graph.asset_sheet[aid]) for aid in ids}}
        return ContextSlice("asset", scene_id, None, payload)

    # metrics: structural hooks only, per the allowlist
    shots = []
    for (scn, sid), shot in sorted(graph.shot_context.items()):
        cam = shot.camera_instruction
        shots.append({
            "scene_id": scn,
            "shot_id": sid,
            "camera_instruction": {
                "focus_on_ids": list(cam.focus_on_ids),
                "angle": cam.angle,
                "distance": cam.distance,
                "movement": cam.movement,
                "direction": cam.direction,
            },
            "asset_modifications": [
                {"asset_id": m.asset_id, "kind": m.kind}
                for m in shot.asset_modifications or []
            ],
            "onstage": onstage_assets(graph, scn, sid),
        })
    payload = {
        "shots": shots,
        "assets": {aid: {"asset_id": a.asset_id, "asset_type": a.asset_type}
                   for aid, a in graph.asset_sheet.items()},
    }
    return ContextSlice("metrics", None, None, payload)


# ---------------------------------------------------------------------------
# gatekeeping


def commit(graph: ContinuityMemoryGraph, proposal: Proposal,
           validator: Callable[[Proposal, ContinuityMemoryGraph], tuple[bool, Any]],
           ) -> CommitResult:
    """Validate a proposal and integrate it atomically (copy then swap).

    The validator returns (ok, diagnostics). On rejection the original graph
    is returned untouched with the diagnostics; on acceptance a new graph with
    the payload written into the proper layer and version + 1.
    """
    if proposal.kind == "scene_layout":
        if proposal.scene_id not in graph.scene_context:
            raise UnknownReferenceError(f"proposal targets unknown scene {proposal.scene_id}")
    else:
        key = (proposal.scene_id, proposal.shot_id)
        if key not in graph.shot_context:
            raise UnknownReferenceError(f"proposal targets unknown shot {key}")

    try:
        ok, diagnostics = validator(proposal, graph)
    except Exception as exc:  # noqa: BLE001 - validator is caller-supplied
        raise ValidatorFailure(f"validator raised: {exc}") from exc

    if not ok:
        return CommitResult(
            accepted=False,
            graph=graph,
            report=DiagnosticReport(
                proposal_kind=proposal.kind,
                scene_id=proposal.scene_id,
                shot_id=proposal.shot_id,
                diagnostics=diagnostics,
            ),
        )

    updated = copy.deepcopy(graph)
    if proposal.kind == "scene_layout":
        updated.scene_context[proposal.scene_id].committed_layout = proposal.payload
    elif proposal.kind == "shot_camera":
        updated.shot_context[(proposal.scene_id, proposal.shot_id)].committed_camera = \
            proposal.payload
    else:  # shot_modification
        shot = updated.shot_context[(proposal.scene_id, proposal.shot_id)]
        mods = list(shot.asset_modifications or [])
        mods.append(proposal.payload)
        shot.asset_modifications = mods
    updated.version = graph.version + 1
    return CommitResult(accepted=True, graph=updated)
