#!/usr/bin/env python3
"""Overlay renderer benchmark: 50k-triangle sphere at 640x480.

    python scripts/benchmark_render.py [--workers N] [--runs 9]
"""

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from poseforge.geometry import CameraIntrinsics, RigidTransform
from poseforge.raster import rasterize
from poseforge.scene import MeshAsset, Scene


def sphere_mesh(rows=126, cols=201, radius=100.0) -> MeshAsset:
    thetas = np.linspace(1e-3, math.pi - 1e-3, rows)
    phis = np.linspace(0.0, 2.0 * math.pi, cols)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    vertices = np.stack(
        [
            radius * np.sin(tt) * np.cos(pp),
            radius * np.sin(tt) * np.sin(pp),
            radius * np.cos(tt),
        ],
        axis=-1,
    ).reshape(-1, 3)
    triangles = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            a = r * cols + c
            triangles.append((a, a + 1, a + cols))
            triangles.append((a + 1, a + cols + 1, a + cols))
    return MeshAsset(vertices=vertices, triangles=np.asarray(triangles),
                     name="sphere", mesh_id="sphere")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--runs", type=int, default=9)
    args = parser.parse_args()

    mesh = sphere_mesh()
    k = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)
    scene = Scene(np.zeros((480, 640, 3), dtype=np.uint8), k)
    oid = scene.add_object(mesh)
    scene.set_pose(oid, RigidTransform(np.eye(3), np.array([0.0, 0.0, 420.0])))

    rasterize(scene, workers=args.workers)  # JIT warmup
    times = []
    for _ in range(args.runs):
        start = time.perf_counter()
        frame = rasterize(scene, workers=args.workers)
        times.append(time.perf_counter() - start)
    times.sort()
    covered = int((frame.mask >= 0).sum())
    print(f"{len(mesh.triangles)} triangles, 640x480, workers={args.workers}")
    print(f"covered pixels: {covered}")
    print(f"median {times[len(times) // 2] * 1e3:.2f} ms  "
          f"min {times[0] * 1e3:.2f} ms  max {times[-1] * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
