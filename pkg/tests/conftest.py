import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from PIL import Image

from poseforge.dataset_io import export_pose
from poseforge.geometry import CameraIntrinsics, RigidTransform, rotation_from_axis_angle
from poseforge.scene import MeshAsset, Scene

settings.register_profile(
    "poseforge",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("poseforge")


def random_rotation(rng) -> np.ndarray:
    """Uniform random rotation from a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_pose(rng, max_translation=1000.0) -> RigidTransform:
    return RigidTransform(
        random_rotation(rng), rng.uniform(-max_translation, max_translation, size=3)
    )


def tetra_mesh(mesh_id="tetra", scale=1.0) -> MeshAsset:
    vertices = np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    ) * scale
    triangles = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
    return MeshAsset(vertices=vertices, triangles=triangles, name=mesh_id, mesh_id=mesh_id)


def cube_mesh(mesh_id="cube", size=50.0, center=(0.0, 0.0, 0.0)) -> MeshAsset:
    h = size / 2.0
    c = np.asarray(center, dtype=float)
    corners = np.array(
        [
            [-h, -h, -h], [h, -h, -h], [h, h, -h], [-h, h, -h],
            [-h, -h, h], [h, -h, h], [h, h, h], [-h, h, h],
        ]
    ) + c
    quads = [
        (0, 1, 2, 3), (4, 5, 6, 7), (0, 1, 5, 4),
        (2, 3, 7, 6), (1, 2, 6, 5), (0, 3, 7, 4),
    ]
    triangles = []
    for a, b, cc, d in quads:
        triangles += [(a, b, cc), (a, cc, d)]
    return MeshAsset(vertices=corners, triangles=triangles, name=mesh_id, mesh_id=mesh_id)


def blob_mesh(rng, mesh_id, n_triangles=8, radius=40.0) -> MeshAsset:
    """Random triangle soup around the origin (meshes may be open)."""
    vertices = rng.uniform(-radius, radius, size=(n_triangles * 3, 3))
    triangles = np.arange(n_triangles * 3).reshape(-1, 3)
    return MeshAsset(vertices=vertices, triangles=triangles, name=mesh_id, mesh_id=mesh_id)


@pytest.fixture
def intrinsics():
    return CameraIntrinsics(fx=1000.0, fy=1000.0, cx=320.0, cy=240.0, width=640, height=480)


@pytest.fixture
def small_intrinsics():
    return CameraIntrinsics(fx=80.0, fy=80.0, cx=32.0, cy=32.0, width=64, height=64)


def flat_background(intrinsics, value=0) -> np.ndarray:
    return np.full((intrinsics.height, intrinsics.width, 3), value, dtype=np.uint8)


def make_scene(intrinsics, value=0) -> Scene:
    return Scene(flat_background(intrinsics, value), intrinsics)


def front_pose(z=500.0, rotation=None) -> RigidTransform:
    r = np.eye(3) if rotation is None else rotation
    return RigidTransform(r, np.array([0.0, 0.0, z]))


def write_dataset(
    root,
    sample_ids=("s0", "s1", "s2"),
    width=64,
    height=48,
    with_gt=True,
    unit_scale=None,
    mesh_factory=None,
    seed=7,
):
    """Write a small on-disk dataset following the documented layout."""
    rng = np.random.default_rng(seed)
    root = root if hasattr(root, "joinpath") else __import__("pathlib").Path(root)
    for i, sample_id in enumerate(sample_ids):
        base = root / "samples" / sample_id
        (base / "objects").mkdir(parents=True)
        image = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        Image.fromarray(image, mode="RGB").save(base / "image.png")
        camera = f"60.0 60.0 {width / 2} {height / 2} {width} {height}\n"
        if unit_scale is not None:
            camera += f"{unit_scale}\n"
        (base / "camera.txt").write_text(camera, encoding="utf-8")
        mesh = (mesh_factory or (lambda j: cube_mesh(f"obj{j}", size=20.0)))(i)
        from poseforge.dataset_io import save_mesh_ply

        save_mesh_ply(mesh, base / "objects" / f"{mesh.mesh_id}.ply")
        if with_gt:
            (base / "gt").mkdir()
            gt = RigidTransform(
                rotation_from_axis_angle((0.3, 1.0, 0.2), 0.2 + 0.1 * i),
                np.array([2.0, -1.0, 200.0 + 10.0 * i]),
            )
            (base / "gt" / f"{mesh.mesh_id}.txt").write_text(
                export_pose(gt), encoding="utf-8"
            )
    return root
