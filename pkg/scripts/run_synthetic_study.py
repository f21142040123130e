#!/usr/bin/env python3
"""End-to-end demo on synthetic data.

Builds a small on-disk dataset, replays a scripted annotation session per
simulated user through the session host (so logs carry real timings), then
runs the inter/intra/time aggregations and prints the tables.

    python scripts/run_synthetic_study.py --out /tmp/study --users 3 --samples 5
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from poseforge.cli import main as cli_main
from poseforge.dataset_io import export_pose, load_sample, save_mesh_ply
from poseforge.geometry import RigidTransform, rotation_from_axis_angle
from poseforge.scene import MeshAsset
from poseforge.service import AnnotationSession


def box_mesh(mesh_id: str, size: float) -> MeshAsset:
    h = size / 2.0
    corners = np.array(
        [
            [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
            [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
        ]
    )
    quads = [
        (0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4),
        (2, 3, 7, 6), (1, 2, 6, 5), (0, 3, 7, 4),
    ]
    triangles = []
    for a, b, c, d in quads:
        triangles += [(a, b, c), (a, c, d)]
    return MeshAsset(vertices=corners, triangles=triangles, name=mesh_id, mesh_id=mesh_id)


def build_dataset(root: Path, n_samples: int, rng) -> None:
    for i in range(n_samples):
        base = root / "samples" / f"s{i}"
        (base / "objects").mkdir(parents=True)
        (base / "gt").mkdir()
        image = rng.integers(0, 256, size=(120, 160, 3), dtype=np.uint8)
        Image.fromarray(image, mode="RGB").save(base / "image.png")
        (base / "camera.txt").write_text("150 150 80 60 160 120\n", encoding="utf-8")
        mesh = box_mesh(f"box{i}", size=30.0 + 4.0 * i)
        save_mesh_ply(mesh, base / "objects" / f"{mesh.mesh_id}.ply")
        gt = RigidTransform(
            rotation_from_axis_angle(rng.normal(size=3), rng.uniform(0.1, 1.2)),
            [*rng.uniform(-30, 30, size=2), rng.uniform(250, 500)],
        )
        (base / "gt" / f"{mesh.mesh_id}.txt").write_text(export_pose(gt), encoding="utf-8")


def simulate_user(dataset: Path, log_path: Path, user: str, seed: int, noise: float, rng):
    """Drive a full session: for each trial, jump near the ground truth with
    a noisy pose-text command, wiggle with a drag, and confirm."""
    session = AnnotationSession(dataset, user=user, seed=seed, log_path=log_path)
    gts = {
        sid: load_sample(dataset, sid).objects[0].gt
        for sid in {s for s, _ in session.plan.entries}
    }
    while not session.complete:
        sample_id, _ = session.current_trial()
        gt = gts[sample_id]
        wobble = rotation_from_axis_angle(
            rng.normal(size=3), math.radians(rng.uniform(0.5, noise))
        )
        guess = RigidTransform(
            gt.rotation @ wobble, gt.translation + rng.uniform(-noise, noise, size=3)
        )
        target = session.scene.objects[0].object_id
        session.apply({"type": "select_object", "params": {"object": target}})
        session.apply({"type": "set_pose_text", "params": {"text": export_pose(guess)}})
        session.apply(
            {"type": "gesture_rotate",
             "params": {"start": [80.0, 60.0], "end": [80.0 + rng.uniform(-3, 3), 60.0]}}
        )
        session.apply({"type": "confirm_annotation"})
    return session


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--users", type=int, default=3)
    parser.add_argument("--samples", type=int, default=5)
    parser.add_argument("--noise", type=float, default=8.0, help="max pose noise (deg / mm)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out)
    dataset = out / "dataset"
    rng = np.random.default_rng(args.seed)
    build_dataset(dataset, args.samples, rng)
    print(f"dataset with {args.samples} samples at {dataset}")

    log_path = out / "annotations.jsonl"
    if log_path.exists():
        log_path.unlink()
    for u in range(args.users):
        simulate_user(dataset, log_path, f"u{u}", seed=args.seed + u, noise=args.noise, rng=rng)
        print(f"user u{u}: session complete")

    for mode in ("inter", "intra", "time"):
        print(f"\n== {mode} ==")
        cli_main([
            "evaluate", "--logs", str(log_path), "--dataset", str(dataset),
            "--mode", mode, "--out-dir", str(out / "reports"),
        ])


if __name__ == "__main__":
    main()
