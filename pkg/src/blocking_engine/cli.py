"""Command line entry points.

Exit codes: 0 success, 2 schema/input error, 3 verification residuals,
4 internal error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import layout_engine, memory_graph, pipeline
from .layout_engine import (
    LayoutSchemaError,
    Tolerances,
    diagnostic_to_json,
    layout_from_json,
    layout_to_json,
    repair_report_to_json,
    repair_scene,
    verify_scene,
)
from .pipeline import BuildConfig, BuildError, UnknownShot, canonical_json

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_RESIDUALS = 3
EXIT_INTERNAL = 4

SCHEMA_ERRORS = (
    LayoutSchemaError,
    layout_engine.UnknownAnchorError,
    layout_engine.UnknownAssetError,
    memory_graph.SchemaError,
    memory_graph.UnknownReferenceError,
    memory_graph.DuplicateIdError,
    json.JSONDecodeError,
    FileNotFoundError,
    KeyError,
    ValueError,
)


def _load_json(path: str):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _load_layout_dir(path: str) -> dict[int, dict]:
    layouts = {}
    for file in sorted(Path(path).glob("scene_*.json")):
        scene_id = int(file.stem.split("_", 1)[1])
        layouts[scene_id] = json.loads(file.read_text(encoding="utf-8"))
    return layouts


def cmd_build(args) -> int:
    config = BuildConfig.from_json(_load_json(args.config)) if args.config else BuildConfig()
    if args.seed is not None:
        config = BuildConfig.from_json({**config.to_json(), "seed": args.seed})
    if args.ablation:
        config = BuildConfig.from_json({**config.to_json(), "ablation": args.ablation})
    try:
        world = pipeline.build_story(
            Path(args.storyboard).read_text(encoding="utf-8"),
            Path(args.dims).read_text(encoding="utf-8"),
            _load_layout_dir(args.layouts),
            config,
        )
    except BuildError as exc:
        print(canonical_json({"errors": exc.errors}), end="")
        return EXIT_RESIDUALS
    pipeline.write_world(world, args.out)
    print(canonical_json({
        "out": str(args.out),
        "scenes": sorted(world.scenes),
        "library": world.library_stats,
        "graph_version": world.graph.version,
    }), end="")
    return EXIT_OK


def _layout_from_file(path: str):
    return layout_from_json(_load_json(path))


def cmd_verify(args) -> int:
    layout = _layout_from_file(args.layout)
    diagnostics = verify_scene(layout, Tolerances())
    print(canonical_json({
        "diagnostics": [diagnostic_to_json(d) for d in diagnostics],
        "count": len(diagnostics),
    }), end="")
    return EXIT_RESIDUALS if diagnostics else EXIT_OK


def cmd_repair(args) -> int:
    layout = _layout_from_file(args.layout)
    result = repair_scene(layout, max_turns=args.max_turns)
    report = repair_report_to_json(result)
    report["layout"] = layout_to_json(result.layout)
    print(canonical_json(report), end="")
    return EXIT_OK if result.converged else EXIT_RESIDUALS


def cmd_camera(args) -> int:
    doc = _load_json(args.snapshot)
    view = pipeline.parse_snapshot(doc)
    if args.shot is not None and view.shot_id != args.shot:
        raise LayoutSchemaError(
            f"snapshot holds shot {view.shot_id}, not {args.shot}"
        )
    from .camera_rig import FramingSpec, init_camera, plan_movement, servo_loop, track_to_json
    from .geometry import world_aabb

    cam = view.camera_instruction
    spec = FramingSpec(
        focus_ids=tuple(cam.get("focus_on_ids", [])),
        angle=cam.get("angle", "eye-level"),
        distance=cam.get("distance", "medium shot"),
        movement=cam.get("movement", "static"),
        direction=cam.get("direction"),
    )
    boxes = [world_aabb(view.placements[aid]) for aid in spec.focus_ids
             if aid in view.placements]
    state = init_camera(boxes, spec)
    outcome = servo_loop(state, spec, target_boxes=boxes)
    track = plan_movement(outcome.final, spec.movement, spec.direction, 48, boxes)
    print(canonical_json({
        "servo_status": outcome.status,
        "trace": [{"command": c, "score": s} for c, s in outcome.trace],
        "camera_track": track_to_json(track),
    }), end="")
    return EXIT_OK


def cmd_metrics(args) -> int:
    world = pipeline.load_world(args.world)
    if args.ablation and args.ablation != world.config.ablation:
        # re-derive shot placements under the requested degradation mode
        config = BuildConfig.from_json({**world.config.to_json(), "ablation": args.ablation})
        for scene_id, scene in world.scenes.items():
            snapshot = scene.layout
            for shot_id in world.graph.shots_of(scene_id):
                snapshot = layout_engine.apply_shot_modifications(snapshot, shot_id)
                scene.shots[shot_id].placements = pipeline._apply_ablation(
                    dict(snapshot.placements), config, scene_id, shot_id
                )
        world.config = config
    report = pipeline.compute_metrics(world)
    print(canonical_json(report.to_json()), end="")
    return EXIT_OK


def cmd_render(args) -> int:
    from .topdown import render_topdown

    world = pipeline.load_world(args.world)
    try:
        svg = render_topdown(world, args.scene, args.shot)
    except UnknownShot as exc:
        raise LayoutSchemaError(str(exc)) from exc
    Path(args.svg).write_text(svg, encoding="utf-8")
    print(canonical_json({"svg": args.svg}), end="")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .editor_service import serve_forever

    port = args.port if args.port is not None else int(
        os.environ.get("BLOCKING_ENGINE_PORT", "8787")
    )
    serve_forever(args.world, port)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocking-engine",
        description="Verified 3D storyboard blocking: layouts, cameras, metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a world from storyboard, dimensions, layouts")
    p.add_argument("--storyboard", required=True)
    p.add_argument("--dims", required=True)
    p.add_argument("--layouts", required=True, help="directory of scene_<id>.json files")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ablation", choices=pipeline.ABLATIONS, default=None)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="verify one layout file")
    p.add_argument("--layout", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("repair", help="verify and repair one layout file")
    p.add_argument("--layout", required=True)
    p.add_argument("--max-turns", type=int, default=5)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("camera", help="plan a camera for a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--shot", type=int, default=None)
    p.set_defaults(func=cmd_camera)

    p = sub.add_parser("metrics", help="compute metrics over a world directory")
    p.add_argument("--world", required=True)
    p.add_argument("--ablation", choices=pipeline.ABLATIONS, default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("render", help="top-down SVG of one shot")
    p.add_argument("--world", required=True)
    p.add_argument("--scene", type=int, required=True)
    p.add_argument("--shot", type=int, required=True)
    p.add_argument("--svg", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="run the editing service over a world")
    p.add_argument("--world", required=True)
    p.add_argument("--port", type=int, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SCHEMA_ERRORS as exc:
        print(canonical_json({"error": {"code": "schema", "message": str(exc)}}), end="",
              file=sys.stderr)
        return EXIT_SCHEMA
    except BuildError as exc:
        print(canonical_json({"error": {"code": "residuals", "errors": exc.errors}}), end="",
              file=sys.stderr)
        return EXIT_RESIDUALS
    except Exception as exc:  # noqa: BLE001 - last-ditch boundary
        print(canonical_json({"error": {"code": "internal", "message": str(exc)}}), end="",
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
