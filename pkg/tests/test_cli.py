"""The command surface: exit codes and output shapes."""
import json
from pathlib import Path

import pytest

from blocking_engine.cli import main

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "casablanca"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "world"
    code = main([
        "build",
        "--storyboard", str(FIXTURE_DIR / "storyboard.json"),
        "--dims", str(FIXTURE_DIR / "dimensions.json"),
        "--layouts", str(FIXTURE_DIR / "layouts"),
        "--out", str(out),
    ])
    assert code == 0
    return out


def test_build_outputs_world(world_dir, capsys):
    assert (world_dir / "manifest.json").exists()
    assert (world_dir / "scenes" / "2" / "shots" / "3" / "snapshot.json").exists()
    manifest = json.loads((world_dir / "manifest.json").read_text())
    assert manifest["library"]["unique_models"] == 6


def test_verify_clean_layout(capsys, tmp_path):
    # embed dimensions so the standalone command sees real extents
    layout = json.loads((FIXTURE_DIR / "layouts" / "scene_2.json").read_text())
    layout["scene"]["asset_dimensions"] = {
        "piano": {"width": 0.7, "depth": 0.7, "height": 0.7},
        "sam": {"width": 0.875, "depth": 0.525, "height": 1.75},
        "ilsa_lund": {"width": 0.84, "depth": 0.504, "height": 1.68},
        "rick_blaine": {"width": 0.9, "depth": 0.54, "height": 1.8},
    }
    path = tmp_path / "layout.json"
    path.write_text(json.dumps(layout))
    code, out, _ = run(capsys, "verify", "--layout", str(path))
    assert code == 0
    assert json.loads(out)["count"] == 0


def test_verify_reports_residuals(capsys, tmp_path):
    doc = {
        "scene": {
            "scene_size": {"x": 10, "x_negative": -10, "y": 10, "y_negative": -10},
            "assets": [
                {"asset_id": "a", "location": {"x": 0, "y": 0, "z": 0},
                 "rotation": {"x": 0, "y": 0, "z": 0}},
                {"asset_id": "b", "location": {"x": 0.2, "y": 0, "z": 0},
                 "rotation": {"x": 0, "y": 0, "z": 0}},
            ],
        }
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "--layout", str(path))
    assert code == 3
    report = json.loads(out)
    assert report["count"] == 1
    assert report["diagnostics"][0]["kind"] == "occlusion"


def test_repair_converges(capsys, tmp_path):
    doc = {
        "scene": {
            "scene_size": {"x": 10, "x_negative": -10, "y": 10, "y_negative": -10},
            "assets": [
                {"asset_id": "a", "location": {"x": 0, "y": 0, "z": 0},
                 "rotation": {"x": 0, "y": 0, "z": 0}},
                {"asset_id": "b", "location": {"x": 0.2, "y": 0, "z": 0},
                 "rotation": {"x": 0, "y": 0, "z": 0}},
            ],
        }
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "repair", "--layout", str(path), "--max-turns", "5")
    assert code == 0
    report = json.loads(out)
    assert report["converged"]
    assert report["error_table"]["occlusion"][0] == 1
    assert report["error_table"]["occlusion"][-1] == 0


def test_metrics_over_world(world_dir, capsys):
    code, out, _ = run(capsys, "metrics", "--world", str(world_dir))
    assert code == 0
    report = json.loads(out)
    assert report["sde_per_scene"]["2"] == 0.0
    assert report["occm_per_shot"]["2:3"] == 100.0


def test_metrics_ablation_increases_drift(world_dir, capsys):
    code, out, _ = run(capsys, "metrics", "--world", str(world_dir),
                       "--ablation", "no-shared-layout")
    assert code == 0
    report = json.loads(out)
    assert report["sde_per_scene"]["2"] > 0.0


def test_render_writes_svg(world_dir, capsys, tmp_path):
    svg_path = tmp_path / "shot.svg"
    code, _, _ = run(capsys, "render", "--world", str(world_dir),
                     "--scene", "2", "--shot", "1", "--svg", str(svg_path))
    assert code == 0
    assert svg_path.read_text().startswith("<svg")


def test_camera_from_snapshot(world_dir, capsys):
    snapshot = world_dir / "scenes" / "2" / "shots" / "1" / "snapshot.json"
    code, out, _ = run(capsys, "camera", "--snapshot", str(snapshot), "--shot", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["camera_track"]["interpolation"] == "Bezier"
    assert doc["camera_track"]["keyframes"]


def test_schema_error_exit_code(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "verify", "--layout", str(path))
    assert code == 2
    assert json.loads(err)["error"]["code"] == "schema"


def test_build_missing_layout_exit_code(capsys, tmp_path):
    empty = tmp_path / "layouts"
    empty.mkdir()
    code, out, err = run(
        capsys, "build",
        "--storyboard", str(FIXTURE_DIR / "storyboard.json"),
        "--dims", str(FIXTURE_DIR / "dimensions.json"),
        "--layouts", str(empty),
        "--out", str(tmp_path / "world"),
    )
    assert code == 3
    assert "scene 1" in out + err
