import json

import numpy as np
import pytest

from poseforge.cli import main
from poseforge.dataset_io import load_workspace, save_workspace
from poseforge.geometry import RigidTransform
from poseforge.study import AnnotationRecord, write_annotation_log

from .conftest import cube_mesh, front_pose, make_scene, write_dataset


@pytest.fixture
def workspace(small_intrinsics, tmp_path):
    scene = make_scene(small_intrinsics, value=25)
    oid = scene.add_object(cube_mesh(size=30.0))
    scene.set_pose(oid, front_pose(z=300.0))
    path = tmp_path / "ws.json"
    save_workspace(scene, path)
    return path, oid


def test_render_writes_png_and_mask(workspace, tmp_path):
    path, _ = workspace
    out = tmp_path / "frame.png"
    mask = tmp_path / "mask.png"
    assert main(["render", "--workspace", str(path), "--out", str(out), "--mask", str(mask)]) == 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert mask.exists()


def test_render_is_deterministic_across_runs(workspace, tmp_path):
    path, _ = workspace
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    main(["render", "--workspace", str(path), "--out", str(a)])
    main(["render", "--workspace", str(path), "--out", str(b), "--workers", "4"])
    assert a.read_bytes() == b.read_bytes()


def test_import_sample_builds_workspace(tmp_path):
    dataset = write_dataset(tmp_path / "data", sample_ids=("s0",))
    out = tmp_path / "imported.json"
    assert main(["import-sample", "--dataset", str(dataset), "--sample", "s0", "--out", str(out)]) == 0
    scene = load_workspace(out)
    assert len(scene.objects) == 1
    assert np.array_equal(scene.objects[0].pose.as_matrix(), np.eye(4))


def test_import_sample_with_gt(tmp_path):
    dataset = write_dataset(tmp_path / "data", sample_ids=("s0",))
    out = tmp_path / "imported.json"
    main(["import-sample", "--dataset", str(dataset), "--sample", "s0", "--out", str(out), "--use-gt"])
    scene = load_workspace(out)
    assert not np.array_equal(scene.objects[0].pose.as_matrix(), np.eye(4))


def test_export_pose_prints_matrix(workspace, capsys):
    path, oid = workspace
    assert main(["export-pose", "--workspace", str(path), "--id", oid]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4
    assert len(lines[0].split()) == 4


def _study_fixture(tmp_path):
    dataset = write_dataset(tmp_path / "data", sample_ids=("s0", "s1"))
    from poseforge.dataset_io import load_sample

    records = []
    for sample_id in ("s0", "s1"):
        entry = load_sample(dataset, sample_id).objects[0]
        from pathlib import Path

        object_id = Path(entry.mesh_path).stem
        for user in ("u0", "u1"):
            for trial in range(3):
                off = 1.0 + trial
                pose = RigidTransform(entry.gt.rotation, entry.gt.translation + [off, 0.0, 0.0])
                records.append(
                    AnnotationRecord(
                        user=user, sample=sample_id, trial=trial, object_id=object_id,
                        pose=pose, duration_s=30.0 + 5 * trial,
                        timestamp="2026-01-01T00:00:00+00:00",
                    )
                )
    log = tmp_path / "log.jsonl"
    write_annotation_log(log, records)
    return dataset, log


@pytest.mark.parametrize("mode", ["inter", "intra", "time"])
def test_evaluate_modes(tmp_path, capsys, mode):
    dataset, log = _study_fixture(tmp_path)
    out_dir = tmp_path / "out"
    code = main([
        "evaluate", "--logs", str(log), "--dataset", str(dataset),
        "--mode", mode, "--out-dir", str(out_dir),
    ])
    assert code == 0
    assert (out_dir / f"{mode}_table.tsv").exists()
    summary = json.loads((out_dir / f"{mode}_summary.json").read_text())
    assert summary["mode"] == mode
    table = capsys.readouterr().out
    assert "\t" in table


def test_evaluate_inter_mean_matches_best_trial_offset(tmp_path):
    dataset, log = _study_fixture(tmp_path)
    out_dir = tmp_path / "out"
    main(["evaluate", "--logs", str(log), "--dataset", str(dataset), "--mode", "inter",
          "--out-dir", str(out_dir)])
    summary = json.loads((out_dir / "inter_summary.json").read_text())
    # every user's best trial is 1 mm off along x
    for sample in ("s0", "s1"):
        assert abs(summary["groups"][sample]["euclidean_mm"]["mean"] - 1.0) < 1e-9


def test_evaluate_sus(tmp_path, capsys):
    responses = {"responses": {"u0": [3, 2, 4, 2, 4, 2, 4, 2, 4, 2], "u1": [5] * 10}}
    path = tmp_path / "sus.json"
    path.write_text(json.dumps(responses), encoding="utf-8")
    out_dir = tmp_path / "out"
    assert main(["evaluate", "--mode", "sus", "--responses", str(path), "--out-dir", str(out_dir)]) == 0
    summary = json.loads((out_dir / "sus_summary.json").read_text())
    assert summary["adjusted"]["u1"] == [5, 1, 5, 1, 5, 1, 5, 1, 5, 1]


def test_evaluate_tlx(tmp_path):
    responses = {"responses": {"u0": [10, 8, 6, 15, 12, 4], "u1": [14, 8, 6, 15, 12, 4]}}
    path = tmp_path / "tlx.json"
    path.write_text(json.dumps(responses), encoding="utf-8")
    out_dir = tmp_path / "out"
    assert main(["evaluate", "--mode", "tlx", "--responses", str(path), "--out-dir", str(out_dir)]) == 0
    summary = json.loads((out_dir / "tlx_summary.json").read_text())
    assert summary["dimensions"]["mental_demand"]["mean"] == 12.0


def test_evaluate_max_points_subsample_matches_full_for_translations(tmp_path):
    # translation-only offsets displace every vertex identically, so any
    # vertex subsample yields the same ADD
    dataset, log = _study_fixture(tmp_path)
    full_dir, sub_dir = tmp_path / "full", tmp_path / "sub"
    main(["evaluate", "--logs", str(log), "--dataset", str(dataset), "--mode", "inter",
          "--out-dir", str(full_dir)])
    main(["evaluate", "--logs", str(log), "--dataset", str(dataset), "--mode", "inter",
          "--out-dir", str(sub_dir), "--max-points", "4"])
    full = json.loads((full_dir / "inter_summary.json").read_text())
    sub = json.loads((sub_dir / "inter_summary.json").read_text())
    for sample in full["groups"]:
        assert abs(
            full["groups"][sample]["add_mm"]["mean"] - sub["groups"][sample]["add_mm"]["mean"]
        ) < 1e-9


def test_evaluate_sus_requires_responses(capsys):
    assert main(["evaluate", "--mode", "sus"]) == 2


def test_serve_parser_defaults():
    from poseforge.cli import build_parser

    args = build_parser().parse_args(["serve", "--dataset", "d"])
    assert args.port is None and args.host == "127.0.0.1"
