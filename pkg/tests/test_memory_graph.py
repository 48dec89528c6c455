"""Parsing, projection, scene resolution, and the commit gate."""
import json
from pathlib import Path

import pytest

from blocking_engine.memory_graph import (
    CycleError,
    DuplicateIdError,
    METRICS_FIELD_ALLOWLIST,
    Proposal,
    SchemaError,
    UnknownReferenceError,
    UnknownTaskTarget,
    ValidatorFailure,
    commit,
    graph_to_json,
    onstage_assets,
    parse_storyboard,
    project_context,
    resolve_scene,
    serialize_storyboard,
)

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "casablanca" / "storyboard.json"


def minimal_doc():
    return {
        "story_summary": "One person in a room.",
        "storyboard_outline": [
            {"scene_id": 1, "scene_description": "The room.",
             "shots": [{"shot_id": 1, "shot_description": "A look around."}]}
        ],
        "asset_sheet": [
            {"asset_id": "hero", "asset_type": "character",
             "description": "A person.", "reference_character": None,
             "text_to_image_prompt": "a person"}
        ],
        "scene_details": [
            {"scene_id": 1, "scene_setup": {
                "reference_scene_id": None,
                "asset_ids": ["hero"],
                "scene_type": "outdoor",
                "layout_description": "Hero at the center.",
                "lighting_description": "Noon.",
                "ground_description": "Grass.",
                "wall_description": None,
            }}
        ],
        "shot_details": [
            {"scene_id": 1, "shot_id": 1,
             "asset_modifications": None, "character_actions": None,
             "lighting_modification": None, "sound_effect": None,
             "camera_instruction": {
                 "focus_on_ids": ["hero"], "angle": "eye-level",
                 "distance": "medium shot", "movement": "static",
                 "direction": None, "description": "Static shot."}}
        ],
    }


def test_parse_minimal():
    graph = parse_storyboard(json.dumps(minimal_doc()))
    assert graph.scene_ids() == [1]
    assert graph.shots_of(1) == [1]
    assert list(graph.asset_sheet) == ["hero"]
    assert graph.version == 0


def test_parse_casablanca_fixture():
    graph = parse_storyboard(FIXTURE.read_text())
    assert graph.scene_ids() == [1, 2]
    scene2 = graph.scene_context[2]
    assert scene2.reference_scene_id == 1
    assert set(scene2.asset_ids) == {"piano", "sam", "ilsa_lund", "rick_blaine"}
    assert len(scene2.asset_ids) == 4


def test_unknown_asset_reference_names_the_ghost():
    doc = minimal_doc()
    doc["scene_details"][0]["scene_setup"]["asset_ids"] = ["hero", "ghost"]
    with pytest.raises(UnknownReferenceError, match="ghost"):
        parse_storyboard(doc)


def test_reference_scene_must_be_earlier():
    doc = minimal_doc()
    doc["scene_details"][0]["scene_setup"]["reference_scene_id"] = 1
    with pytest.raises(UnknownReferenceError):
        parse_storyboard(doc)


def test_duplicate_asset_id():
    doc = minimal_doc()
    doc["asset_sheet"].append(dict(doc["asset_sheet"][0]))
    with pytest.raises(DuplicateIdError):
        parse_storyboard(doc)


def test_bad_enum_is_schema_error():
    doc = minimal_doc()
    doc["shot_details"][0]["camera_instruction"]["angle"] = "dutch"
    with pytest.raises(SchemaError):
        parse_storyboard(doc)


def test_direction_iff_pan_or_orbit():
    doc = minimal_doc()
    doc["shot_details"][0]["camera_instruction"]["movement"] = "pan"
    with pytest.raises(SchemaError, match="direction"):
        parse_storyboard(doc)
    doc["shot_details"][0]["camera_instruction"]["movement"] = "static"
    doc["shot_details"][0]["camera_instruction"]["direction"] = "left"
    with pytest.raises(SchemaError):
        parse_storyboard(doc)


def test_focus_target_must_be_onstage():
    doc = minimal_doc()
    doc["asset_sheet"].append({
        "asset_id": "extra", "asset_type": "character",
        "description": "Someone else.", "reference_character": None,
        "text_to_image_prompt": "someone"})
    doc["shot_details"][0]["camera_instruction"]["focus_on_ids"] = ["extra"]
    with pytest.raises(UnknownReferenceError, match="extra"):
        parse_storyboard(doc)


def test_round_trip_preserves_unknown_fields():
    doc = minimal_doc()
    doc["studio_notes"] = {"budget": "small"}
    doc["asset_sheet"][0]["tags"] = ["no_polyhaven"]
    graph = parse_storyboard(json.dumps(doc))
    serialized = serialize_storyboard(graph)
    graph2 = parse_storyboard(serialized)
    assert graph_to_json(graph) == graph_to_json(graph2)
    assert graph2.extras["studio_notes"] == {"budget": "small"}
    assert graph2.asset_sheet["hero"].extras["tags"] == ["no_polyhaven"]


def test_round_trip_fixture_equal():
    graph = parse_storyboard(FIXTURE.read_text())
    again = parse_storyboard(serialize_storyboard(graph))
    assert graph_to_json(graph) == graph_to_json(again)


# ---------------------------------------------------------------------------
# onstage bookkeeping


def test_onstage_remove_persists():
    graph = parse_storyboard(FIXTURE.read_text())
    assert set(onstage_assets(graph, 1, 1)) == {"rick_blaine", "ugarte", "piano", "cafe_table"}
    assert set(onstage_assets(graph, 1, 2)) == {"rick_blaine", "piano", "cafe_table"}


# ---------------------------------------------------------------------------
# resolve_scene


def test_resolve_identity_without_reference():
    graph = parse_storyboard(FIXTURE.read_text())
    scene1 = resolve_scene(graph, 1)
    assert scene1.wall_description == "Plaster walls with moorish arches."


def test_resolve_inherits_wall_description():
    graph = parse_storyboard(FIXTURE.read_text())
    scene2 = resolve_scene(graph, 2)
    # scene 2 leaves walls null; the referenced scene supplies them
    assert scene2.wall_description == "Plaster walls with moorish arches."
    assert scene2.layout_description.startswith("The piano is on the left side.")


def test_resolve_transitive_chain_matches_walk():
    doc = minimal_doc()
    doc["storyboard_outline"].extend([
        {"scene_id": 2, "scene_description": "Again.",
         "shots": [{"shot_id": 1, "shot_description": "s"}]},
        {"scene_id": 3, "scene_description": "Later.",
         "shots": [{"shot_id": 1, "shot_description": "s"}]},
    ])
    doc["scene_details"].extend([
        {"scene_id": 2, "scene_setup": {
            "reference_scene_id": 1, "asset_ids": ["hero"], "scene_type": "outdoor",
            "layout_description": "", "lighting_description": "Dusk.",
            "ground_description": "", "wall_description": None}},
        {"scene_id": 3, "scene_setup": {
            "reference_scene_id": 2, "asset_ids": ["hero"], "scene_type": "outdoor",
            "layout_description": "", "lighting_description": "",
            "ground_description": "", "wall_description": None}},
    ])
    for sid in (2, 3):
        doc["shot_details"].append({
            "scene_id": sid, "shot_id": 1,
            "asset_modifications": None, "character_actions": None,
            "lighting_modification": None, "sound_effect": None,
            "camera_instruction": {
                "focus_on_ids": ["hero"], "angle": "eye-level",
                "distance": "long shot", "movement": "static",
                "direction": None, "description": ""}})
    graph = parse_storyboard(doc)

    # oracle: brute-force walk of the chain, nearest definition wins
    def walk(attr, sid):
        while sid is not None:
            record = graph.scene_context[sid]
            value = getattr(record, attr)
            if value:
                return value
            sid = record.reference_scene_id
        return ""

    resolved = resolve_scene(graph, 3)
    assert resolved.lighting_description == walk("lighting_description", 3) == "Dusk."
    assert resolved.layout_description == walk("layout_description", 3) \
        == "Hero at the center."
    # purity: repeated calls identical
    assert resolve_scene(graph, 3) == resolved


def test_resolve_cycle_detected_defensively():
    graph = parse_storyboard(FIXTURE.read_text())
    graph.scene_context[1].reference_scene_id = 2  # corrupt deliberately
    with pytest.raises(CycleError):
        resolve_scene(graph, 2)


# ---------------------------------------------------------------------------
# project_context


def test_camera_slice_is_minimal():
    graph = parse_storyboard(FIXTURE.read_text())
    ctx = project_context(graph, "camera", scene_id=1, shot_id=1)
    assert ctx.payload["camera_instruction"]["movement"] == "static"
    assert set(ctx.payload["focus_assets"]) == {"rick_blaine", "ugarte"}
    assert "layout_description" not in json.dumps(ctx.payload)


def test_layout_slice_masks_other_scenes():
    graph = parse_storyboard(FIXTURE.read_text())
    ctx = project_context(graph, "layout", scene_id=2)
    blob = json.dumps(ctx.payload)
    assert "cafe_table" not in blob  # scene 1 only
    assert "ugarte" not in blob
    assert ctx.payload["scene"]["scene_id"] == 2
    # the planner needs every shot modification of its own scene
    assert 2 in ctx.payload["shot_modifications"]


def test_layout_slice_is_subgraph():
    graph = parse_storyboard(FIXTURE.read_text())
    ctx = project_context(graph, "layout", scene_id=1)
    for aid, payload in ctx.payload["assets"].items():
        record = graph.asset_sheet[aid]
        assert payload["description"] == record.description


def test_metrics_slice_honors_allowlist():
    graph = parse_storyboard(FIXTURE.read_text())
    ctx = project_context(graph, "metrics")
    for shot in ctx.payload["shots"]:
        cam_keys = set(shot["camera_instruction"])
        assert cam_keys == set(METRICS_FIELD_ALLOWLIST["camera_instruction"])
        for mod in shot["asset_modifications"]:
            assert set(mod) == set(METRICS_FIELD_ALLOWLIST["asset_modification"])
    for asset in ctx.payload["assets"].values():
        assert set(asset) == set(METRICS_FIELD_ALLOWLIST["asset"])
    blob = json.dumps(ctx.payload)
    assert "description" not in blob
    assert "prompt" not in blob


def test_project_context_errors():
    graph = parse_storyboard(FIXTURE.read_text())
    with pytest.raises(UnknownTaskTarget):
        project_context(graph, "lighting")
    with pytest.raises(UnknownTaskTarget):
        project_context(graph, "layout")
    with pytest.raises(UnknownTaskTarget):
        project_context(graph, "camera", scene_id=1)


# ---------------------------------------------------------------------------
# commit gate


def accept_all(proposal, graph):
    return True, []


def reject_with(diags):
    def validator(proposal, graph):
        return False, diags
    return validator


def test_commit_accept_bumps_version():
    graph = parse_storyboard(FIXTURE.read_text())
    proposal = Proposal(kind="scene_layout", scene_id=1, payload={"fake": "layout"})
    result = commit(graph, proposal, accept_all)
    assert result.accepted
    assert result.graph.version == 1
    assert result.graph.scene_context[1].committed_layout == {"fake": "layout"}
    assert graph.scene_context[1].committed_layout is None  # original untouched


def test_commit_reject_leaves_graph_untouched():
    graph = parse_storyboard(FIXTURE.read_text())
    before = serialize_storyboard(graph)
    proposal = Proposal(kind="scene_layout", scene_id=1, payload={"bad": True})
    result = commit(graph, proposal, reject_with([{"kind": "occlusion"}]))
    assert not result.accepted
    assert result.report is not None
    assert result.report.diagnostics == [{"kind": "occlusion"}]
    assert result.graph is graph
    assert serialize_storyboard(graph) == before
    assert graph.version == 0


def test_commit_gate_rejects_interpenetrating_layout():
    # the real engine verifier as the gate: two boxes 0.5 m into each other
    from blocking_engine.geometry import EulerDeg, Placement, Vec3
    from blocking_engine.layout_engine import SceneLayout, SceneSize
    from blocking_engine.pipeline import _layout_gate

    graph = parse_storyboard(FIXTURE.read_text())
    bad = SceneLayout(
        SceneSize(10, -10, 10, -10),
        {
            "piano": Placement(Vec3(0, 0, 0), EulerDeg(0, 0, 0), Vec3(1, 1, 1)),
            "sam": Placement(Vec3(0.5, 0, 0), EulerDeg(0, 0, 0), Vec3(1, 1, 1)),
        },
    )
    result = commit(graph, Proposal(kind="scene_layout", scene_id=1, payload=bad),
                    _layout_gate)
    assert not result.accepted
    assert len(result.report.diagnostics) == 1
    diag = result.report.diagnostics[0]
    assert diag["kind"] == "occlusion"
    assert diag["measured"] == pytest.approx(0.5)
    assert diag["budget"] == 0.02
    assert graph.version == 0


def test_commit_twice_is_deterministic():
    graph = parse_storyboard(FIXTURE.read_text())
    proposal = Proposal(kind="scene_layout", scene_id=1, payload={"p": 1})
    once = commit(graph, proposal, accept_all).graph
    twice = commit(once, proposal, accept_all).graph
    assert twice.version == 2
    assert twice.scene_context[1].committed_layout == {"p": 1}


def test_commit_unknown_target():
    graph = parse_storyboard(FIXTURE.read_text())
    with pytest.raises(UnknownReferenceError):
        commit(graph, Proposal(kind="scene_layout", scene_id=9, payload={}), accept_all)


def test_validator_failure_propagates():
    graph = parse_storyboard(FIXTURE.read_text())

    def broken(proposal, g):
        raise RuntimeError("validator bug")

    with pytest.raises(ValidatorFailure):
        commit(graph, Proposal(kind="scene_layout", scene_id=1, payload={}), broken)
    assert graph.version == 0
