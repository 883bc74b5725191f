import hashlib
import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from spvkit.cli import main
from spvkit.frames import save_luma
from spvkit.study import (
    append_jsonl,
    build_plan,
    load_catalog,
    new_session,
    record_to_dict,
    session_header,
    submit_response,
    TrialRecord,
)

from conftest import plan_only_scenes, rect_mask, write_catalog, write_overlay


@pytest.fixture
def runner():
    return CliRunner()


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def make_input_image(tmp_path, size=(64, 64)):
    path = tmp_path / "input.png"
    save_luma(path, np.random.default_rng(5).random(size))
    return str(path)


# -------------------------------------------------------------------- render


def test_render_deterministic_outputs(runner, tmp_path):
    image = make_input_image(tmp_path)
    args = [
        "render", image, "-o", str(tmp_path / "a.png"),
        "--grid", "8x8", "--canvas", "64", "--dropout", "0.10", "--seed", "7",
    ]
    first = runner.invoke(main, args)
    assert first.exit_code == 0, first.output
    assert "seed: 7" in first.output
    second = runner.invoke(
        main,
        ["render", image, "-o", str(tmp_path / "b.png"),
         "--grid", "8x8", "--canvas", "64", "--dropout", "0.10", "--seed", "7"],
    )
    assert second.exit_code == 0
    assert sha(tmp_path / "a.png") == sha(tmp_path / "b.png")


def test_render_om_empty_overlay_black_frame(runner, tmp_path):
    image = make_input_image(tmp_path, size=(48, 48))
    overlay_dir = tmp_path / "ov"
    write_overlay(overlay_dir, 0, objects=[], size=(48, 48))
    out = tmp_path / "om.png"
    result = runner.invoke(
        main,
        ["render", image, "-o", str(out), "--method", "om",
         "--overlay-dir", str(overlay_dir), "--grid", "8x8", "--canvas", "64", "--seed", "1"],
    )
    assert result.exit_code == 0, result.output
    import cv2

    assert not cv2.imread(str(out), cv2.IMREAD_GRAYSCALE).any()


def test_render_draws_and_prints_seed(runner, tmp_path):
    image = make_input_image(tmp_path)
    result = runner.invoke(
        main, ["render", image, "-o", str(tmp_path / "x.png"), "--grid", "8x8", "--canvas", "64"]
    )
    assert result.exit_code == 0
    assert "seed: " in result.output


def test_render_config_file_defaults_with_flag_override(runner, tmp_path):
    image = make_input_image(tmp_path)
    config = tmp_path / "grid.cfg"
    config.write_text("rows = 8\ncols = 8\ncanvas = 64\ndropout_rate = 0.1\nseed = 3\n")
    a = runner.invoke(main, ["render", image, "-o", str(tmp_path / "a.png"), "--config", str(config)])
    assert a.exit_code == 0, a.output
    assert "seed: 3" in a.output
    b = runner.invoke(
        main,
        ["render", image, "-o", str(tmp_path / "b.png"), "--config", str(config), "--seed", "9"],
    )
    assert "seed: 9" in b.output
    assert sha(tmp_path / "a.png") != sha(tmp_path / "b.png")


def test_render_error_exits_nonzero(runner, tmp_path):
    image = make_input_image(tmp_path)
    result = runner.invoke(
        main, ["render", image, "-o", str(tmp_path / "x.png"), "--method", "om",
               "--grid", "8x8", "--canvas", "64"]
    )
    assert result.exit_code != 0
    assert "overlay" in result.output.lower()


# --------------------------------------------------------------------- video


def write_frames(tmp_path, count, size=(48, 48)):
    frames_dir = tmp_path / "frames"
    os.makedirs(frames_dir, exist_ok=True)
    rng = np.random.default_rng(2)
    for i in range(count):
        save_luma(frames_dir / f"frame_{i:06d}.png", rng.random(size))
    return frames_dir


def test_video_direct_length_and_manifest(runner, tmp_path):
    frames_dir = write_frames(tmp_path, 20)
    out_dir = tmp_path / "seq"
    result = runner.invoke(
        main,
        ["video", str(frames_dir), "-o", str(out_dir), "--grid", "8x8", "--canvas", "48",
         "--seed", "4", "--fps", "20"],
    )
    assert result.exit_code == 0, result.output
    manifest = json.load(open(out_dir / "manifest.json"))
    assert manifest["frame_count"] == 16  # 20 - 5 + 1
    assert manifest["fps"] == 20
    assert len(list(out_dir.glob("frame_*.png"))) == 16


def test_video_missing_overlay_frame_12(runner, tmp_path):
    frames_dir = write_frames(tmp_path, 14)
    overlays = tmp_path / "ov"
    for i in range(14):
        if i == 12:
            continue
        write_overlay(overlays, i, objects=[("bed", 0.9, rect_mask((48, 48), 0, 9, 0, 9))], size=(48, 48))
    result = runner.invoke(
        main,
        ["video", str(frames_dir), "-o", str(tmp_path / "seq"), "--method", "om",
         "--overlays-dir", str(overlays), "--grid", "8x8", "--canvas", "48", "--seed", "1"],
    )
    assert result.exit_code != 0
    assert "frame 12" in result.output


# --------------------------------------------------------------------- score


def write_session_file(tmp_path, catalog_path, subject, seed):
    catalog = load_catalog(catalog_path)
    plan = build_plan(catalog, seed)
    session = new_session(f"sess-{subject}", subject, plan, {"age_band": "20-30"})
    log = tmp_path / "sessions" / f"{session.session_id}.jsonl"
    os.makedirs(log.parent, exist_ok=True)
    append_jsonl(log, session_header(session, catalog_path))
    for i, trial in enumerate(plan.trials):
        record = TrialRecord(
            trial_index=i,
            stimulus_id=trial.stimulus_id,
            method=trial.method,
            kind=trial.kind,
            view=trial.view,
            objects_marked=trial.objects,
            room_choice=trial.room,
            likert="DY",
            response_time_s=3.0,
        )
        session = submit_response(session, record)
        append_jsonl(log, record_to_dict(session.records[-1]))
    return log


def test_score_command_prints_table_and_writes_files(runner, tmp_path):
    catalog_path = write_catalog(tmp_path / "catalog.json", plan_only_scenes(2))
    write_session_file(tmp_path, catalog_path, "s1", 1)
    write_session_file(tmp_path, catalog_path, "s2", 2)
    out_dir = tmp_path / "report"
    result = runner.invoke(
        main,
        ["score", str(tmp_path / "sessions" / "*.jsonl"), "--catalog", catalog_path,
         "--group-by", "method,kind", "--out", str(out_dir)],
    )
    assert result.exit_code == 0, result.output
    assert "% correct ident" in result.output
    assert "scored 2 session(s)" in result.output
    assert (out_dir / "report.json").is_file()
    report = json.load(open(out_dir / "report.json"))
    # perfect synthetic subjects
    assert all(g["objects"]["pct_correct_identification"] == 100.0 for g in report["groups"])
    assert all(g["rooms"]["pct_room_recognized"] == 100.0 for g in report["groups"])


def test_score_meta_filter_excludes_everything(runner, tmp_path):
    catalog_path = write_catalog(tmp_path / "catalog.json", plan_only_scenes(2))
    write_session_file(tmp_path, catalog_path, "s1", 1)
    result = runner.invoke(
        main,
        ["score", str(tmp_path / "sessions" / "*.jsonl"), "--catalog", catalog_path,
         "--meta", "age_band=50-60"],
    )
    assert result.exit_code != 0


def test_score_rejects_bad_meta_flag(runner, tmp_path):
    catalog_path = write_catalog(tmp_path / "catalog.json", plan_only_scenes(1))
    result = runner.invoke(
        main, ["score", "x.jsonl", "--catalog", catalog_path, "--meta", "noequals"]
    )
    assert result.exit_code != 0
