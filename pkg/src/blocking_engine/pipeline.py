"""End-to-end orchestration: storyboard + dimensions + layouts in, a built
story world out, with verified layouts committed through the graph gate,
per-shot snapshots, servo-planned cameras, and the consistency metrics.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import layout_engine, memory_graph
from .asset_forge import (
    AssetLibrary,
    CanonicalAsset,
    DimensionEstimate,
    normalize_request_key,
)
from .camera_rig import (
    FramingSpec,
    KeyframeTrack,
    ServoConfig,
    aabb_intersects_frustum,
    init_camera,
    plan_movement,
    servo_loop,
    track_from_json,
    track_to_json,
)
from .geometry import Aabb, EulerDeg, Placement, Vec3, world_aabb
from .layout_engine import (
    RepairResult,
    SceneLayout,
    SceneShell,
    ShotModification,
    SpatialConstraint,
    apply_shot_modifications,
    generate_scene_shell,
    layout_from_json,
    layout_to_json,
    repair_report_to_json,
    repair_scene,
    spatial_drift_error,
    verify_scene,
)
from .memory_graph import ContinuityMemoryGraph, Proposal, onstage_assets

ABLATIONS = ("full", "no-graph", "no-asset-registry", "no-shared-layout")


class BuildError(RuntimeError):
    """Aggregated per-stage failures, each tagged with scene/shot coordinates."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class UnknownShot(KeyError):
    pass


@dataclass(frozen=True)
class BuildConfig:
    focal_length_mm: float = 35.0
    margin: float = 1.2
    repair_max_turns: int = 5
    servo_threshold: float = 8.0
    servo_max_turns: int = 5
    movement_frames: int = 48
    default_view: str = "front"
    seed: int = 0
    ablation: str = "full"

    def __post_init__(self) -> None:
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}; pick from {ABLATIONS}")

    def to_json(self) -> dict:
        return {
            "focal_length_mm": self.focal_length_mm,
            "margin": self.margin,
            "repair_max_turns": self.repair_max_turns,
            "servo_threshold": self.servo_threshold,
            "servo_max_turns": self.servo_max_turns,
            "movement_frames": self.movement_frames,
            "default_view": self.default_view,
            "seed": self.seed,
            "ablation": self.ablation,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "BuildConfig":
        return cls(**{k: doc[k] for k in cls().to_json() if k in doc})


@dataclass
class ShotBuild:
    scene_id: int
    shot_id: int
    placements: dict[str, Placement]
    constraints: list[SpatialConstraint]
    onstage: list[str]
    camera_spec: FramingSpec
    camera_track: KeyframeTrack
    servo_trace: list[tuple[str | None, float]] = field(default_factory=list)
    servo_status: str = "accepted"


@dataclass
class SceneBuild:
    scene_id: int
    scene_type: str
    layout: SceneLayout
    shell: SceneShell
    assets: dict[str, CanonicalAsset]
    repair: RepairResult
    shots: dict[int, ShotBuild] = field(default_factory=dict)


@dataclass
class StoryWorld:
    graph: ContinuityMemoryGraph
    scenes: dict[int, SceneBuild]
    library_stats: dict
    config: BuildConfig

    def shot(self, scene_id: int, shot_id: int) -> ShotBuild:
        scene = self.scenes.get(scene_id)
        if scene is None or shot_id not in scene.shots:
            raise UnknownShot(f"scene {scene_id} shot {shot_id}")
        return scene.shots[shot_id]


# ---------------------------------------------------------------------------
# metrics formulas


OCCM_EPSILON = 1e-6


def occm(detected: int, expected: int) -> float:
    """Onstage character count match: exp(-|D-E| / (eps + E)) * 100."""
    if detected < 0 or expected < 0:
        raise ValueError("counts must be non-negative")
    return math.exp(-abs(detected - expected) / (OCCM_EPSILON + expected)) * 100.0


# ---------------------------------------------------------------------------
# building


def parse_dimensions(document: str | Sequence) -> dict[str, DimensionEstimate]:
    doc = json.loads(document) if isinstance(document, str) else document
    if not isinstance(doc, Sequence):
        raise memory_graph.SchemaError("dimensions document must be a JSON array")
    out: dict[str, DimensionEstimate] = {}
    for entry in doc:
        est = DimensionEstimate.from_json(entry)
        if est.asset_id in out:
            raise memory_graph.DuplicateIdError(f"duplicate estimate for {est.asset_id!r}")
        out[est.asset_id] = est
    return out


def _materialize_assets(graph: ContinuityMemoryGraph,
                        estimates: Mapping[str, DimensionEstimate],
                        library: AssetLibrary,
                        errors: list[str]) -> dict[str, CanonicalAsset]:
    """Scaled box proxies for every asset, deduplicating raw model requests
    by normalized description across scenes.
    """
    from .asset_forge import DEFAULT_RAW_DIMS, apply_dimension

    assets: dict[str, CanonicalAsset] = {}
    for scene_id in graph.scene_ids():
        for asset_id in graph.scene_context[scene_id].asset_ids:
            record = graph.asset_sheet[asset_id]
            key = normalize_request_key(record.description)
            raw_dims = DEFAULT_RAW_DIMS.get(record.asset_type, DEFAULT_RAW_DIMS["object"])
            raw_proxy, _ = library.get_or_register(
                key,
                lambda: CanonicalAsset(asset_id=record.asset_id, dimensions=raw_dims,
                                       asset_type=record.asset_type, source="placeholder"),
            )
            if asset_id in assets:
                continue
            estimate = estimates.get(asset_id)
            if estimate is None:
                errors.append(f"asset {asset_id}: no dimension estimate")
                continue
            _, dims = apply_dimension(raw_proxy.dimensions, estimate)
            assets[asset_id] = CanonicalAsset(
                asset_id=asset_id, dimensions=dims,
                asset_type=record.asset_type, source=raw_proxy.source,
            )
    return assets


def _merge_graph_modifications(graph: ContinuityMemoryGraph, scene_id: int,
                               layout: SceneLayout,
                               assets: Mapping[str, CanonicalAsset],
                               errors: list[str]) -> SceneLayout:
    """Fold storyboard add/remove intents into the layout's per-shot targets."""
    merged = layout.copy()
    for shot_id in graph.shots_of(scene_id):
        shot = graph.shot_context[(scene_id, shot_id)]
        if not shot.asset_modifications:
            continue
        mods = list(merged.shot_modifications.get(shot_id, []))
        numeric = {m.asset_id: m for m in mods}
        for intent in shot.asset_modifications:
            where = f"scene {scene_id} shot {shot_id}"
            if intent.kind == "remove":
                mods = [m for m in mods if m.asset_id != intent.asset_id]
                mods.append(ShotModification(asset_id=intent.asset_id, kind="remove"))
            elif intent.kind == "add":
                target = numeric.get(intent.asset_id)
                asset = assets.get(intent.asset_id)
                if target is None or asset is None:
                    errors.append(f"{where}: add of {intent.asset_id!r} has no target transform")
                    continue
                mods = [m for m in mods if m.asset_id != intent.asset_id]
                mods.append(replace(target, kind="add", dimensions=asset.dimensions))
            else:  # transform must come with planner numbers
                if intent.asset_id not in numeric:
                    errors.append(
                        f"{where}: transform of {intent.asset_id!r} has no target transform"
                    )
        merged.shot_modifications[shot_id] = mods
    return merged


def _ablation_rng(config: BuildConfig, scene_id: int, shot_id: int, asset_id: str) -> random.Random:
    return random.Random(f"{config.seed}:{config.ablation}:{scene_id}:{shot_id}:{asset_id}")


def _apply_ablation(placements: dict[str, Placement], config: BuildConfig,
                    scene_id: int, shot_id: int) -> dict[str, Placement]:
    """Seeded degradation modes that discard parts of the shared world state.

    no-shared-layout recomputes placements per shot (positions and spins
    drift); no-asset-registry rebuilds proxies per shot (extents drift);
    no-graph does both, harder.
    """
    if config.ablation == "full":
        return placements
    out = {}
    for asset_id, p in placements.items():
        rng = _ablation_rng(config, scene_id, shot_id, asset_id)
        loc, rot, dims = p.location, p.rotation, p.dimensions
        if config.ablation in ("no-shared-layout", "no-graph"):
            sigma = 0.4 if config.ablation == "no-shared-layout" else 0.8
            loc = loc + Vec3(rng.gauss(0, sigma), rng.gauss(0, sigma), 0.0)
            rot = EulerDeg(rot.x, rot.y, rot.z + rng.gauss(0, 15.0))
        if config.ablation in ("no-asset-registry", "no-graph"):
            scale = max(0.5, 1.0 + rng.gauss(0, 0.05))
            dims = dims.scaled(scale)
        out[asset_id] = Placement(loc, rot, dims)
    return out


def _layout_gate(proposal: Proposal, graph: ContinuityMemoryGraph):
    diagnostics = verify_scene(proposal.payload)
    return not diagnostics, [layout_engine.diagnostic_to_json(d) for d in diagnostics]


def build_story(storyboard_doc: str | Mapping,
                dimensions_doc: str | Sequence,
                layouts: Mapping[int, Mapping],
                config: BuildConfig = BuildConfig()) -> StoryWorld:
    """Build every scene and shot: materialize assets through the dedup
    library, verify and repair each scene layout, commit it through the
    graph gate, then derive per-shot snapshots and servo the cameras.

    Deterministic for a fixed config. Raises BuildError with one entry per
    failed stage, tagged by scene/shot; buildable scenes are reported too.
    """
    errors: list[str] = []
    graph = memory_graph.parse_storyboard(storyboard_doc)
    estimates = parse_dimensions(dimensions_doc)
    library = AssetLibrary()
    assets = _materialize_assets(graph, estimates, library, errors)
    if errors:
        raise BuildError(errors)

    dims_by_id = {aid: a.dimensions for aid, a in assets.items()}
    scenes: dict[int, SceneBuild] = {}
    buildable: list[int] = []
    for scene_id in graph.scene_ids():
        resolved = memory_graph.resolve_scene(graph, scene_id)
        layout_doc = layouts.get(scene_id)
        if layout_doc is None:
            errors.append(f"scene {scene_id}: no layout document")
            continue
        try:
            layout = layout_from_json(layout_doc, dims_by_id)
        except (layout_engine.LayoutSchemaError, layout_engine.UnknownAnchorError) as exc:
            errors.append(f"scene {scene_id}: bad layout: {exc}")
            continue
        missing = [aid for aid in resolved.asset_ids if aid not in layout.placements]
        if missing:
            errors.append(f"scene {scene_id}: layout missing placements for {missing}")
            continue
        layout = _merge_graph_modifications(graph, scene_id, layout, assets, errors)

        repair = repair_scene(layout, max_turns=config.repair_max_turns)
        proposal = Proposal(kind="scene_layout", scene_id=scene_id, payload=repair.layout)
        result = memory_graph.commit(graph, proposal, _layout_gate)
        if not result.accepted:
            errors.append(
                f"scene {scene_id}: layout rejected with "
                f"{len(result.report.diagnostics)} residual diagnostics"
            )
            continue
        graph = result.graph
        shell = generate_scene_shell(layout.scene_size, resolved.scene_type)
        scenes[scene_id] = SceneBuild(
            scene_id=scene_id,
            scene_type=resolved.scene_type,
            layout=repair.layout,
            shell=shell,
            assets={aid: assets[aid] for aid in resolved.asset_ids},
            repair=repair,
        )
        buildable.append(scene_id)

    if errors:
        if buildable:
            errors.append(f"buildable scenes: {buildable}")
        raise BuildError(errors)

    world = StoryWorld(graph=graph, scenes=scenes,
                       library_stats=library.stats(), config=config)

    servo_config = ServoConfig()
    for scene_id, scene in scenes.items():
        snapshot = scene.layout
        for shot_id in graph.shots_of(scene_id):
            snapshot = apply_shot_modifications(snapshot, shot_id)
            placements = _apply_ablation(dict(snapshot.placements), config,
                                         scene_id, shot_id)
            shot = graph.shot_context[(scene_id, shot_id)]
            cam = shot.camera_instruction
            spec = FramingSpec(
                focus_ids=tuple(cam.focus_on_ids),
                angle=cam.angle,
                distance=cam.distance,
                movement=cam.movement,
                direction=cam.direction,
                view=config.default_view,
            )
            target_boxes = [world_aabb(placements[aid]) for aid in cam.focus_on_ids]
            state = init_camera(target_boxes, spec,
                                focal_length_mm=config.focal_length_mm,
                                margin=config.margin)
            outcome = servo_loop(state, spec, target_boxes=target_boxes,
                                 threshold=config.servo_threshold,
                                 max_turns=config.servo_max_turns,
                                 config=servo_config)
            track = plan_movement(outcome.final, cam.movement, cam.direction,
                                  config.movement_frames, target_boxes,
                                  config=servo_config)
            result = memory_graph.commit(
                world.graph,
                Proposal(kind="shot_camera", scene_id=scene_id, shot_id=shot_id,
                         payload=track_to_json(track)),
                lambda proposal, g: (True, []),
            )
            world.graph = result.graph
            scene.shots[shot_id] = ShotBuild(
                scene_id=scene_id,
                shot_id=shot_id,
                placements=placements,
                constraints=list(snapshot.constraints),
                onstage=onstage_assets(graph, scene_id, shot_id),
                camera_spec=spec,
                camera_track=track,
                servo_trace=outcome.trace,
                servo_status=outcome.status,
            )
    return world


# ---------------------------------------------------------------------------
# metrics


def default_static_ids(world: StoryWorld, scene_id: int) -> list[str]:
    """Assets present in every shot of the scene and never retargeted."""
    graph = world.graph
    shot_ids = graph.shots_of(scene_id)
    scene = world.scenes[scene_id]
    moved = set()
    for mods in scene.layout.shot_modifications.values():
        moved.update(m.asset_id for m in mods)
    static = []
    for aid in sorted(scene.layout.placements):
        if aid in moved:
            continue
        if all(aid in scene.shots[sid].placements for sid in shot_ids):
            static.append(aid)
    return static


def shot_character_counts(world: StoryWorld, scene_id: int, shot_id: int) -> tuple[int, int]:
    """(detected, expected): characters whose boxes intersect the first-keyframe
    frustum vs characters onstage per the storyboard.
    """
    shot = world.shot(scene_id, shot_id)
    graph = world.graph
    characters = [aid for aid in shot.onstage
                  if graph.asset_sheet[aid].asset_type == "character"]
    expected = len(characters)
    state = shot.camera_track.keyframes[0].state
    detected = sum(
        1 for aid in characters
        if aid in shot.placements
        and aabb_intersects_frustum(state, world_aabb(shot.placements[aid]))
    )
    return detected, expected


@dataclass
class MetricsReport:
    sde_per_scene: dict[int, float | None]
    occm_per_shot: dict[str, float]
    occm_mean: float
    repair_tables: dict[int, dict]
    servo_traces: dict[str, list]

    def to_json(self) -> dict:
        return {
            "sde_per_scene": {str(k): v for k, v in self.sde_per_scene.items()},
            "occm_per_shot": self.occm_per_shot,
            "occm_mean": self.occm_mean,
            "repair_tables": {str(k): v for k, v in self.repair_tables.items()},
            "servo_traces": self.servo_traces,
        }


def compute_metrics(world: StoryWorld,
                    static_ids: Mapping[int, Sequence[str]] | None = None) -> MetricsReport:
    """Recompute every metric from the world alone (pure)."""
    sde: dict[int, float | None] = {}
    occms: dict[str, float] = {}
    repair_tables: dict[int, dict] = {}
    servo_traces: dict[str, list] = {}
    for scene_id in sorted(world.scenes):
        scene = world.scenes[scene_id]
        shot_ids = world.graph.shots_of(scene_id)
        chosen = list(static_ids[scene_id]) if static_ids and scene_id in static_ids \
            else default_static_ids(world, scene_id)
        if len(shot_ids) >= 2 and chosen:
            shots = [scene.shots[sid].placements for sid in shot_ids]
            present = [aid for aid in chosen if all(aid in s for s in shots)]
            sde[scene_id] = spatial_drift_error(shots, present) if present else None
        else:
            sde[scene_id] = None
        repair_tables[scene_id] = repair_report_to_json(scene.repair)
        for sid in shot_ids:
            detected, expected = shot_character_counts(world, scene_id, sid)
            key = f"{scene_id}:{sid}"
            occms[key] = occm(detected, expected)
            servo_traces[key] = [
                {"command": cmd, "score": score}
                for cmd, score in scene.shots[sid].servo_trace
            ]
    mean = sum(occms.values()) / len(occms) if occms else 0.0
    return MetricsReport(
        sde_per_scene=sde,
        occm_per_shot=occms,
        occm_mean=mean,
        repair_tables=repair_tables,
        servo_traces=servo_traces,
    )


# ---------------------------------------------------------------------------
# snapshots


def _placement_json(asset_id: str, p: Placement, asset_type: str) -> dict:
    return {
        "asset_id": asset_id,
        "asset_type": asset_type,
        "location": {"x": p.location.x, "y": p.location.y, "z": p.location.z},
        "rotation": {"x": p.rotation.x, "y": p.rotation.y, "z": p.rotation.z},
        "dimensions": {"width": p.dimensions.x, "depth": p.dimensions.y,
                       "height": p.dimensions.z},
    }


def _box_json(box: Aabb) -> dict:
    return {
        "min": {"x": box.min.x, "y": box.min.y, "z": box.min.z},
        "max": {"x": box.max.x, "y": box.max.y, "z": box.max.z},
    }


def _shell_json(shell: SceneShell) -> dict:
    return {
        "ground": _box_json(shell.ground),
        "walls": {side: _box_json(box) for side, box in sorted(shell.walls.items())},
    }


def _constraint_json(c: SpatialConstraint) -> dict:
    return {
        "asset_id": c.asset_id,
        "anchor_asset_id": c.anchor_asset_id,
        "relationship": c.relationship,
        "contact": c.contact,
        "direction": c.direction,
    }


def export_snapshot(world: StoryWorld, scene_id: int, shot_id: int) -> dict:
    """Stable-ordered snapshot of one shot: placements, shell, constraints,
    and the camera block exactly as the rig exports it.
    """
    scene = world.scenes.get(scene_id)
    if scene is None or shot_id not in scene.shots:
        raise UnknownShot(f"scene {scene_id} shot {shot_id}")
    shot = scene.shots[shot_id]
    asset_types = {aid: a.asset_type for aid, a in scene.assets.items()}
    cam = world.graph.shot_context[(scene_id, shot_id)].camera_instruction
    return {
        "scene_id": scene_id,
        "shot_id": shot_id,
        "scene_type": scene.scene_type,
        "scene_size": {
            "x": scene.layout.scene_size.x,
            "x_negative": scene.layout.scene_size.x_negative,
            "y": scene.layout.scene_size.y,
            "y_negative": scene.layout.scene_size.y_negative,
        },
        "placements": [
            _placement_json(aid, shot.placements[aid],
                            asset_types.get(aid, "object"))
            for aid in sorted(shot.placements)
        ],
        "constraints": [_constraint_json(c) for c in shot.constraints],
        "shell": _shell_json(scene.shell),
        "camera_instruction": {
            "focus_on_ids": list(cam.focus_on_ids),
            "angle": cam.angle,
            "distance": cam.distance,
            "movement": cam.movement,
            "direction": cam.direction,
            "description": cam.description,
        },
        "camera_track": track_to_json(shot.camera_track),
    }


@dataclass
class ShotView:
    """A parsed snapshot: everything the editor and renderers need."""

    scene_id: int
    shot_id: int
    scene_type: str
    scene_size: layout_engine.SceneSize
    placements: dict[str, Placement]
    asset_types: dict[str, str]
    constraints: list[SpatialConstraint]
    shell: SceneShell
    camera_instruction: dict
    camera_track: KeyframeTrack


def parse_snapshot(doc: Mapping) -> ShotView:
    ss = doc["scene_size"]
    placements = {}
    asset_types = {}
    for entry in doc["placements"]:
        dims = entry["dimensions"]
        placements[entry["asset_id"]] = Placement(
            Vec3(entry["location"]["x"], entry["location"]["y"], entry["location"]["z"]),
            EulerDeg(entry["rotation"]["x"], entry["rotation"]["y"], entry["rotation"]["z"]),
            Vec3(dims["width"], dims["depth"], dims["height"]),
        )
        asset_types[entry["asset_id"]] = entry.get("asset_type", "object")
    constraints = [
        SpatialConstraint(
            asset_id=c["asset_id"],
            anchor_asset_id=c.get("anchor_asset_id"),
            relationship=c.get("relationship"),
            contact=c.get("contact"),
            direction=c.get("direction"),
        )
        for c in doc.get("constraints", [])
    ]

    def box(b):
        return Aabb(Vec3(b["min"]["x"], b["min"]["y"], b["min"]["z"]),
                    Vec3(b["max"]["x"], b["max"]["y"], b["max"]["z"]))

    shell_doc = doc["shell"]
    shell = SceneShell(
        ground=box(shell_doc["ground"]),
        walls={side: box(b) for side, b in shell_doc.get("walls", {}).items()},
    )
    return ShotView(
        scene_id=doc["scene_id"],
        shot_id=doc["shot_id"],
        scene_type=doc.get("scene_type", "outdoor"),
        scene_size=layout_engine.SceneSize(ss["x"], ss["x_negative"], ss["y"], ss["y_negative"]),
        placements=placements,
        asset_types=asset_types,
        constraints=constraints,
        shell=shell,
        camera_instruction=dict(doc.get("camera_instruction", {})),
        camera_track=track_from_json(doc["camera_track"]),
    )


def snapshot_to_export(view: ShotView) -> dict:
    """Re-serialize a parsed snapshot; export -> parse -> export is identity."""
    return {
        "scene_id": view.scene_id,
        "shot_id": view.shot_id,
        "scene_type": view.scene_type,
        "scene_size": {
            "x": view.scene_size.x,
            "x_negative": view.scene_size.x_negative,
            "y": view.scene_size.y,
            "y_negative": view.scene_size.y_negative,
        },
        "placements": [
            _placement_json(aid, view.placements[aid], view.asset_types.get(aid, "object"))
            for aid in sorted(view.placements)
        ],
        "constraints": [_constraint_json(c) for c in view.constraints],
        "shell": _shell_json(view.shell),
        "camera_instruction": dict(view.camera_instruction),
        "camera_track": track_to_json(view.camera_track),
    }


# ---------------------------------------------------------------------------
# world directory io


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def write_world(world: StoryWorld, out_dir: str | Path) -> None:
    """Persist the world as a directory of canonical JSON (plus SVGs)."""
    from .topdown import render_topdown

    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    (root / "storyboard.json").write_text(
        memory_graph.serialize_storyboard(world.graph) + "\n", encoding="utf-8")
    (root / "manifest.json").write_text(canonical_json({
        "config": world.config.to_json(),
        "graph_version": world.graph.version,
        "library": world.library_stats,
        "scenes": [
            {"scene_id": sid, "shots": sorted(world.scenes[sid].shots)}
            for sid in sorted(world.scenes)
        ],
    }), encoding="utf-8")
    (root / "assets.json").write_text(canonical_json({
        "assets": [
            {
                "asset_id": a.asset_id,
                "asset_type": a.asset_type,
                "source": a.source,
                "dimensions": {"width": a.dimensions.x, "depth": a.dimensions.y,
                               "height": a.dimensions.z},
            }
            for sid in sorted(world.scenes)
            for a in (world.scenes[sid].assets[k] for k in sorted(world.scenes[sid].assets))
        ],
        "library": world.library_stats,
    }), encoding="utf-8")
    for scene_id in sorted(world.scenes):
        scene = world.scenes[scene_id]
        scene_dir = root / "scenes" / str(scene_id)
        scene_dir.mkdir(parents=True, exist_ok=True)
        (scene_dir / "layout.json").write_text(
            canonical_json(layout_to_json(scene.layout)), encoding="utf-8")
        (scene_dir / "repair.json").write_text(
            canonical_json(repair_report_to_json(scene.repair)), encoding="utf-8")
        (scene_dir / "shell.json").write_text(
            canonical_json({"scene_type": scene.scene_type, **_shell_json(scene.shell)}),
            encoding="utf-8")
        for shot_id in sorted(scene.shots):
            shot_dir = scene_dir / "shots" / str(shot_id)
            shot_dir.mkdir(parents=True, exist_ok=True)
            (shot_dir / "snapshot.json").write_text(
                canonical_json(export_snapshot(world, scene_id, shot_id)), encoding="utf-8")
            (shot_dir / "topdown.svg").write_text(
                render_topdown(world, scene_id, shot_id), encoding="utf-8")
    (root / "metrics.json").write_text(
        canonical_json(compute_metrics(world).to_json()), encoding="utf-8")


def load_world(world_dir: str | Path) -> StoryWorld:
    """Reload a world directory; cameras come from stored keyframes, never
    re-servoed, so a loaded world equals the built one.
    """
    root = Path(world_dir)
    graph = memory_graph.parse_storyboard((root / "storyboard.json").read_text())
    manifest = json.loads((root / "manifest.json").read_text())
    config = BuildConfig.from_json(manifest["config"])
    assets_doc = json.loads((root / "assets.json").read_text())
    all_assets = {
        a["asset_id"]: CanonicalAsset(
            asset_id=a["asset_id"],
            dimensions=Vec3(a["dimensions"]["width"], a["dimensions"]["depth"],
                            a["dimensions"]["height"]),
            asset_type=a["asset_type"],
            source=a["source"],
        )
        for a in assets_doc["assets"]
    }
    scenes: dict[int, SceneBuild] = {}
    for entry in manifest["scenes"]:
        scene_id = entry["scene_id"]
        scene_dir = root / "scenes" / str(scene_id)
        layout = layout_from_json(json.loads((scene_dir / "layout.json").read_text()))
        shell_doc = json.loads((scene_dir / "shell.json").read_text())
        repair_doc = json.loads((scene_dir / "repair.json").read_text())
        repair = RepairResult(
            layout=layout,
            turns_used=repair_doc["turns_used"],
            per_turn_counts=repair_doc["per_turn_counts"],
            converged=repair_doc["converged"],
            residual=[],
        )
        scene_type = shell_doc.get("scene_type", "outdoor")
        shell = generate_scene_shell(layout.scene_size, scene_type)
        scene = SceneBuild(
            scene_id=scene_id,
            scene_type=scene_type,
            layout=layout,
            shell=shell,
            assets={aid: all_assets[aid] for aid in graph.scene_context[scene_id].asset_ids
                    if aid in all_assets},
            repair=repair,
        )
        for shot_id in entry["shots"]:
            doc = json.loads((scene_dir / "shots" / str(shot_id) / "snapshot.json").read_text())
            view = parse_snapshot(doc)
            cam = graph.shot_context[(scene_id, shot_id)].camera_instruction
            scene.shots[shot_id] = ShotBuild(
                scene_id=scene_id,
                shot_id=shot_id,
                placements=view.placements,
                constraints=view.constraints,
                onstage=onstage_assets(graph, scene_id, shot_id),
                camera_spec=FramingSpec(
                    focus_ids=tuple(cam.focus_on_ids),
                    angle=cam.angle, distance=cam.distance,
                    movement=cam.movement, direction=cam.direction,
                    view=config.default_view,
                ),
                camera_track=view.camera_track,
            )
        scenes[scene_id] = scene
    return StoryWorld(graph=graph, scenes=scenes,
                      library_stats=manifest.get("library", {}), config=config)
