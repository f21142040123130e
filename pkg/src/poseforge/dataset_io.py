"""File ingest and export: ASCII PLY / OBJ meshes, dataset samples, pose
text, and the versioned workspace document.

Dataset layout (converters from the original Linemod/HANDAL releases are
documented in the README, not implemented here):

    root/samples/<id>/image.png            background photograph
    root/samples/<id>/camera.txt           "fx fy cx cy width height",
                                           optional second line: unit scale
                                           multiplier to millimeters
    root/samples/<id>/objects/<name>.ply   meshes (.obj accepted too)
    root/samples/<id>/gt/<name>.txt        optional ground-truth pose per mesh

Every loader is total over the package error types: malformed bytes raise
ParseError / UnsupportedFormatError / LayoutError / VersionMismatchError,
never a bare exception.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    InvalidRotationError,
    LayoutError,
    ParseError,
    UnsupportedFormatError,
    VersionMismatchError,
)
from .geometry import CameraIntrinsics, RigidTransform, rotation_drift
from .scene import MeshAsset, Scene, SceneObject

WORKSPACE_VERSION = 1


# -- meshes -------------------------------------------------------------------


def load_mesh(path) -> MeshAsset:
    """Parse a .ply (ASCII) or .obj mesh; quads and larger faces are fan
    triangulated."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix not in (".ply", ".obj"):
        raise UnsupportedFormatError(f"unsupported mesh extension {suffix!r}")
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"cannot read {p}: {exc}") from exc
    if suffix == ".ply":
        vertices, faces = _parse_ply(text)
    else:
        vertices, faces = _parse_obj(text)
    try:
        return MeshAsset(
            vertices=np.asarray(vertices, dtype=np.float64),
            triangles=np.asarray(faces, dtype=np.int32),
            name=p.stem,
            mesh_id=p.stem,
            source_path=str(path),
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(f"invalid mesh data in {p}: {exc}") from exc


def _fan(indices: list[int]) -> list[tuple[int, int, int]]:
    return [(indices[0], indices[i], indices[i + 1]) for i in range(1, len(indices) - 1)]


def _parse_ply(text: str):
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            line = lines[pos].strip()
            pos += 1
            if line:
                return line
        raise ParseError("unexpected end of PLY file")

    try:
        if next_line() != "ply":
            raise ParseError("missing 'ply' magic")
        elements = []  # (name, count)
        vertex_props: list[str] = []
        fmt_seen = False
        while True:
            line = next_line()
            tokens = line.split()
            if tokens[0] == "comment":
                continue
            if tokens[0] == "format":
                if len(tokens) < 2 or tokens[1] != "ascii":
                    raise UnsupportedFormatError("only ASCII PLY is supported")
                fmt_seen = True
            elif tokens[0] == "element":
                if len(tokens) != 3:
                    raise ParseError(f"bad element line: {line!r}")
                elements.append((tokens[1], int(tokens[2])))
            elif tokens[0] == "property":
                if elements and elements[-1][0] == "vertex" and tokens[1] != "list":
                    vertex_props.append(tokens[-1])
            elif tokens[0] == "end_header":
                break
        if not fmt_seen:
            raise ParseError("missing PLY format declaration")
        try:
            xi, yi, zi = (vertex_props.index(c) for c in ("x", "y", "z"))
        except ValueError:
            raise ParseError("vertex element must declare x, y, z properties")
        vertices, faces, n_vertices = [], [], 0
        for name, count in elements:
            if count < 0:
                raise ParseError(f"negative element count for {name!r}")
            if name == "vertex":
                for _ in range(count):
                    vals = [float(v) for v in next_line().split()]
                    if len(vals) < len(vertex_props):
                        raise ParseError("short vertex line")
                    xyz = (vals[xi], vals[yi], vals[zi])
                    if not all(math.isfinite(v) for v in xyz):
                        raise ParseError("non-finite vertex coordinate")
                    vertices.append(xyz)
                n_vertices = count
            elif name == "face":
                for _ in range(count):
                    vals = [int(v) for v in next_line().split()]
                    if not vals or len(vals) < 1 + vals[0] or vals[0] < 3:
                        raise ParseError("bad face line")
                    idx = vals[1 : 1 + vals[0]]
                    if any(i < 0 or i >= n_vertices for i in idx):
                        raise ParseError("face index out of range")
                    faces.extend(_fan(idx))
            else:
                for _ in range(count):
                    next_line()
        return vertices, faces
    except (ValueError, OverflowError, IndexError) as exc:
        raise ParseError(f"malformed PLY: {exc}") from exc


def _parse_obj(text: str):
    vertices, faces = [], []
    try:
        for raw in text.splitlines():
            tokens = raw.split()
            if not tokens:
                continue
            if tokens[0] == "v":
                if len(tokens) < 4:
                    raise ParseError(f"short vertex line: {raw!r}")
                xyz = tuple(float(v) for v in tokens[1:4])
                if not all(math.isfinite(v) for v in xyz):
                    raise ParseError("non-finite vertex coordinate")
                vertices.append(xyz)
            elif tokens[0] == "f":
                if len(tokens) < 4:
                    raise ParseError(f"face needs at least 3 vertices: {raw!r}")
                idx = []
                for token in tokens[1:]:
                    i = int(token.split("/")[0])
                    if i == 0:
                        raise ParseError("OBJ indices are 1-based, got 0")
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                if any(i < 0 or i >= len(vertices) for i in idx):
                    raise ParseError("face index out of range")
                faces.extend(_fan(idx))
        return vertices, faces
    except (ValueError, OverflowError, IndexError) as exc:
        raise ParseError(f"malformed OBJ: {exc}") from exc


def save_mesh_ply(mesh: MeshAsset, path) -> None:
    p = Path(path)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(mesh.vertices)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {len(mesh.triangles)}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    for v in mesh.vertices:
        lines.append(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    for t in mesh.triangles:
        lines.append(f"3 {int(t[0])} {int(t[1])} {int(t[2])}")
    _atomic_write_text(p, "\n".join(lines) + "\n")


# -- pose text ----------------------------------------------------------------


def export_pose(pose: RigidTransform) -> str:
    """4 lines of 4 fixed-point values; 8 decimal places keeps the
    import/export round trip under 1e-7 per entry at any magnitude."""
    m = pose.as_matrix()
    return "\n".join(" ".join(f"{v:.8f}" for v in row) for row in m) + "\n"


def import_pose(text: str) -> RigidTransform:
    try:
        values = [float(v) for v in text.split()]
    except (ValueError, OverflowError) as exc:
        raise ParseError(f"pose text is not numeric: {exc}") from exc
    if len(values) != 16:
        raise ParseError(f"pose text must hold 16 values, got {len(values)}")
    m = np.array(values, dtype=np.float64).reshape(4, 4)
    if not np.isfinite(m).all():
        raise ParseError("pose text contains non-finite values")
    if np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > 1e-6:
        raise ParseError("bottom row must be [0 0 0 1]")
    r = m[:3, :3]
    if float(np.linalg.det(r)) <= 0.0:
        raise InvalidRotationError("rotation block has non-positive determinant")
    if rotation_drift(r) > 1e-4:
        raise InvalidRotationError("rotation block is too far from orthonormal")
    m[3] = (0.0, 0.0, 0.0, 1.0)
    return RigidTransform.from_matrix(m, reorthonormalize=True)


# -- dataset samples ------------------------------------------------------------


@dataclass(frozen=True)
class SampleObject:
    mesh_path: str
    gt: RigidTransform | None


@dataclass(frozen=True)
class DatasetSample:
    sample_id: str
    image_path: str
    intrinsics: CameraIntrinsics
    unit_scale: float
    objects: tuple[SampleObject, ...]


def parse_camera_file(path) -> tuple[CameraIntrinsics, float]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"cannot read camera file: {exc}") from exc
    lines = [line for line in (l.strip() for l in text.splitlines()) if line]
    if not lines:
        raise ParseError("empty camera file")
    try:
        fields = [float(v) for v in lines[0].split()]
        if len(fields) != 6:
            raise ParseError("camera line must hold fx fy cx cy width height")
        if fields[4] != int(fields[4]) or fields[5] != int(fields[5]):
            raise ParseError("width and height must be integers")
        intrinsics = CameraIntrinsics(
            fx=fields[0], fy=fields[1], cx=fields[2], cy=fields[3],
            width=int(fields[4]), height=int(fields[5]),
        )
        scale = 1.0
        if len(lines) > 1:
            scale = float(lines[1].split()[0])
            if not (math.isfinite(scale) and scale > 0):
                raise ParseError(f"unit scale must be positive, got {scale}")
        return intrinsics, scale
    except ParseError:
        raise
    except (ValueError, OverflowError, IndexError) as exc:
        raise ParseError(f"malformed camera file: {exc}") from exc


def list_sample_ids(root) -> list[str]:
    samples = Path(root) / "samples"
    if not samples.is_dir():
        raise LayoutError(f"missing samples directory under {root}")
    return sorted(p.name for p in samples.iterdir() if p.is_dir())


def load_sample(root, sample_id) -> DatasetSample:
    base = Path(root) / "samples" / str(sample_id)
    if not base.is_dir():
        raise LayoutError(f"no sample directory {base}")
    image_path = base / "image.png"
    camera_path = base / "camera.txt"
    objects_dir = base / "objects"
    for required, kind in ((image_path, "image.png"), (camera_path, "camera.txt")):
        if not required.is_file():
            raise LayoutError(f"sample {sample_id}: missing {kind}")
    if not objects_dir.is_dir():
        raise LayoutError(f"sample {sample_id}: missing objects/ directory")
    intrinsics, unit_scale = parse_camera_file(camera_path)
    try:
        with Image.open(image_path) as im:
            size = im.size
    except Exception as exc:
        raise ParseError(f"cannot read {image_path}: {exc}") from exc
    if size != (intrinsics.width, intrinsics.height):
        raise LayoutError(
            f"sample {sample_id}: image is {size[0]}x{size[1]} but camera.txt "
            f"declares {intrinsics.width}x{intrinsics.height}"
        )
    objects = []
    mesh_paths = sorted(
        p for p in objects_dir.iterdir() if p.suffix.lower() in (".ply", ".obj")
    )
    for mesh_path in mesh_paths:
        gt = None
        gt_path = base / "gt" / (mesh_path.stem + ".txt")
        if gt_path.is_file():
            try:
                gt = import_pose(gt_path.read_text(encoding="utf-8"))
            except (OSError, UnicodeDecodeError) as exc:
                raise ParseError(f"cannot read {gt_path}: {exc}") from exc
            if unit_scale != 1.0:
                gt = RigidTransform(gt.rotation, gt.translation * unit_scale)
        objects.append(SampleObject(mesh_path=str(mesh_path), gt=gt))
    return DatasetSample(
        sample_id=str(sample_id),
        image_path=str(image_path),
        intrinsics=intrinsics,
        unit_scale=unit_scale,
        objects=tuple(objects),
    )


def build_scene(sample: DatasetSample, use_gt: bool = False) -> Scene:
    """Scene for a sample: objects at identity pose (annotation-from-scratch)
    unless ``use_gt`` pulls in the ground truth where present."""
    background = _load_image_rgb(sample.image_path)
    scene = Scene(background, sample.intrinsics, background_path=sample.image_path)
    for entry in sample.objects:
        mesh = load_mesh(entry.mesh_path)
        if sample.unit_scale != 1.0:
            mesh = MeshAsset(
                vertices=mesh.vertices * sample.unit_scale,
                triangles=mesh.triangles,
                name=mesh.name,
                mesh_id=mesh.mesh_id,
                source_path=mesh.source_path,
            )
        scene.add_object(mesh)
        if use_gt and entry.gt is not None:
            scene.set_pose(mesh.mesh_id, entry.gt)
    return scene


def _load_image_rgb(path) -> np.ndarray:
    # PIL decoders raise a zoo of exception types on corrupt bytes
    # (SyntaxError, zlib.error, struct.error, OSError, ...); map them all.
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except Exception as exc:
        raise ParseError(f"cannot read image {path}: {exc}") from exc


# -- workspace -----------------------------------------------------------------


def save_workspace(scene: Scene, path) -> None:
    """Key-ordered JSON snapshot of the scene; in-memory backgrounds and
    meshes are written next to the file so the document always refers to
    loadable assets.  Writes are atomic (temp file + rename)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    background_ref = scene.background_path
    if background_ref is None:
        background_ref = p.name + ".background.png"
        from .raster import encode_png

        _atomic_write_bytes(p.parent / background_ref, encode_png(scene.background))
    objects = []
    for obj in scene.objects:
        mesh_ref = obj.mesh.source_path
        if mesh_ref is None:
            mesh_dir = p.name + ".meshes"
            (p.parent / mesh_dir).mkdir(exist_ok=True)
            mesh_ref = f"{mesh_dir}/{obj.mesh.mesh_id}.ply"
            save_mesh_ply(obj.mesh, p.parent / mesh_ref)
        objects.append(
            {
                "id": obj.mesh.mesh_id,
                "name": obj.mesh.name,
                "mesh": mesh_ref,
                "pose": [float(v) for v in obj.pose.as_matrix().ravel()],
                "color": [int(c) for c in obj.color],
                "opacity": float(obj.opacity),
                "visible": bool(obj.visible),
                "mirror_x": bool(obj.mirror_x),
                "mirror_y": bool(obj.mirror_y),
                "spacing": [float(s) for s in obj.spacing],
            }
        )
    doc = {
        "workspace_version": WORKSPACE_VERSION,
        "background": background_ref,
        "intrinsics": {
            "fx": scene.intrinsics.fx,
            "fy": scene.intrinsics.fy,
            "cx": scene.intrinsics.cx,
            "cy": scene.intrinsics.cy,
            "width": scene.intrinsics.width,
            "height": scene.intrinsics.height,
        },
        "scene_camera": [float(v) for v in scene.scene_camera.as_matrix().ravel()],
        "objects": objects,
    }
    _atomic_write_text(p, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_workspace(path) -> Scene:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"cannot parse workspace {p}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("workspace document must be a JSON object")
    version = doc.get("workspace_version")
    if not isinstance(version, int):
        raise ParseError("missing workspace_version")
    if version != WORKSPACE_VERSION:
        raise VersionMismatchError(
            f"workspace version {version} not supported (expected {WORKSPACE_VERSION})"
        )
    try:
        ki = doc["intrinsics"]
        intrinsics = CameraIntrinsics(
            fx=ki["fx"], fy=ki["fy"], cx=ki["cx"], cy=ki["cy"],
            width=ki["width"], height=ki["height"],
        )
        background_ref = doc["background"]
        background = _load_image_rgb(_resolve(p, background_ref))
        scene = Scene(background, intrinsics, background_path=background_ref)
        scene.scene_camera = _pose_from_floats(doc["scene_camera"])
        seen = set()
        for entry in doc["objects"]:
            object_id = str(entry["id"])
            if object_id in seen:
                raise ParseError(f"duplicate object id {object_id!r}")
            seen.add(object_id)
            mesh = load_mesh(_resolve(p, entry["mesh"]))
            mesh = MeshAsset(
                vertices=mesh.vertices,
                triangles=mesh.triangles,
                name=str(entry.get("name", object_id)),
                mesh_id=object_id,
                source_path=str(entry["mesh"]),
            )
            spacing = np.asarray(entry["spacing"], dtype=np.float64).reshape(3)
            opacity = float(entry["opacity"])
            color = tuple(int(c) for c in entry["color"])
            if not 0.0 <= opacity <= 1.0:
                raise ParseError(f"opacity out of range: {opacity}")
            if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
                raise ParseError(f"bad color: {color}")
            if not (np.isfinite(spacing).all() and (spacing > 0).all()):
                raise ParseError("bad spacing")
            scene.objects.append(
                SceneObject(
                    mesh=mesh,
                    pose=_pose_from_floats(entry["pose"]),
                    color=color,
                    opacity=opacity,
                    visible=bool(entry["visible"]),
                    mirror_x=bool(entry["mirror_x"]),
                    mirror_y=bool(entry["mirror_y"]),
                    spacing=spacing,
                )
            )
        return scene
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, IndexError, InvalidRotationError) as exc:
        raise ParseError(f"malformed workspace {p}: {exc}") from exc


def _pose_from_floats(values) -> RigidTransform:
    m = np.asarray([float(v) for v in values], dtype=np.float64)
    if m.size != 16:
        raise ParseError(f"pose must hold 16 values, got {m.size}")
    m = m.reshape(4, 4)
    try:
        # exact floats from a previous save pass validation unchanged,
        # keeping the save -> load -> save round trip byte-identical
        return RigidTransform.from_matrix(m)
    except InvalidRotationError:
        return RigidTransform.from_matrix(m, reorthonormalize=True)


def _resolve(workspace_path: Path, ref: str) -> Path:
    ref_path = Path(str(ref))
    return ref_path if ref_path.is_absolute() else workspace_path.parent / ref_path


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
