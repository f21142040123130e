"""Annotation scene state: background image, intrinsics, posed mesh objects
with display attributes, and the free scene camera next to the fixed
original camera.

The world frame of a scene is the original camera's frame, so the original
camera extrinsic is the identity and object poses map model coordinates
directly into it.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateIdError,
    OutOfBoundsError,
    OutOfRangeError,
    UnknownObjectError,
)
from .geometry import CameraIntrinsics, RigidTransform, reflection_about

# Geometry closer than this to the camera is clipped, never drawn or picked.
NEAR_CLIP_MM = 1.0

# Fixed 12-color palette assigned round-robin to newly added objects.
PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 212),
    (0, 128, 128),
    (220, 190, 255),
)


class StandardView(str, enum.Enum):
    FRONT = "front"
    BACK = "back"
    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    BOTTOM = "bottom"
    RESET = "reset-to-original"


# Unit forward direction (world frame) for each canned view; the paper's
# convention here is +Y down, so "top" looks along -Y.
_VIEW_FORWARD = {
    StandardView.FRONT: np.array([0.0, 0.0, 1.0]),
    StandardView.BACK: np.array([0.0, 0.0, -1.0]),
    StandardView.LEFT: np.array([1.0, 0.0, 0.0]),
    StandardView.RIGHT: np.array([-1.0, 0.0, 0.0]),
    StandardView.TOP: np.array([0.0, -1.0, 0.0]),
    StandardView.BOTTOM: np.array([0.0, 1.0, 0.0]),
}


@dataclass(frozen=True)
class MeshAsset:
    """Triangle mesh in its model frame (millimeters)."""

    vertices: np.ndarray
    triangles: np.ndarray
    name: str
    mesh_id: str
    source_path: str | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        if v.shape[0] < 1 or not np.isfinite(v).all():
            raise ValueError("mesh needs at least one finite vertex")
        if t.shape[0] < 1:
            raise ValueError("mesh needs at least one triangle")
        if t.min() < 0 or t.max() >= v.shape[0]:
            raise ValueError("triangle index out of range")
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass
class SceneObject:
    mesh: MeshAsset
    pose: RigidTransform
    color: tuple[int, int, int]
    opacity: float = 1.0
    visible: bool = True
    mirror_x: bool = False
    mirror_y: bool = False
    spacing: np.ndarray = field(default_factory=lambda: np.ones(3))

    @property
    def object_id(self) -> str:
        return self.mesh.mesh_id


def effective_model_transform(obj: SceneObject) -> np.ndarray:
    """4x4 mapping model vertices into the world frame:
    pose @ mirror @ diag(spacing), mirrors reflecting about the centroid
    planes of the spacing-scaled model."""
    pose = obj.pose.as_matrix()
    spacing = np.asarray(obj.spacing, dtype=np.float64)
    if not (obj.mirror_x or obj.mirror_y) and (spacing == 1.0).all():
        return pose
    mirror = np.eye(4)
    center = spacing * obj.mesh.centroid
    if obj.mirror_x:
        mirror = mirror @ reflection_about("x", center)
    if obj.mirror_y:
        mirror = mirror @ reflection_about("y", center)
    scale = np.diag([spacing[0], spacing[1], spacing[2], 1.0])
    return pose @ mirror @ scale


class Scene:
    """Mutable scene owned by a single writer; render/pick callers take
    snapshots.  Object list order is stable under display updates."""

    def __init__(
        self,
        background: np.ndarray,
        intrinsics: CameraIntrinsics,
        background_path: str | None = None,
    ):
        bg = np.asarray(background, dtype=np.uint8)
        if bg.shape != (intrinsics.height, intrinsics.width, 3):
            raise ValueError(
                f"background {bg.shape} does not match intrinsics "
                f"{intrinsics.height}x{intrinsics.width}"
            )
        self.background = bg
        self.intrinsics = intrinsics
        self.background_path = background_path
        self.objects: list[SceneObject] = []
        self.scene_camera = RigidTransform.identity()

    # -- object management -------------------------------------------------

    def add_object(self, mesh: MeshAsset) -> str:
        if any(o.object_id == mesh.mesh_id for o in self.objects):
            raise DuplicateIdError(f"object id {mesh.mesh_id!r} already in scene")
        color = PALETTE[len(self.objects) % len(PALETTE)]
        self.objects.append(
            SceneObject(mesh=mesh, pose=RigidTransform.identity(), color=color)
        )
        return mesh.mesh_id

    def _find(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise UnknownObjectError(f"no object with id {object_id!r}")

    def object_index(self, object_id: str) -> int:
        for i, obj in enumerate(self.objects):
            if obj.object_id == object_id:
                return i
        raise UnknownObjectError(f"no object with id {object_id!r}")

    def get_pose(self, object_id: str) -> RigidTransform:
        return self._find(object_id).pose

    def set_pose(self, object_id: str, pose) -> None:
        obj = self._find(object_id)
        if not isinstance(pose, RigidTransform):
            pose = RigidTransform.from_matrix(pose)
        obj.pose = pose

    def set_display(
        self,
        object_id: str,
        visible: bool | None = None,
        opacity: float | None = None,
        color: tuple[int, int, int] | None = None,
        mirror_x: bool | None = None,
        mirror_y: bool | None = None,
        spacing=None,
    ) -> None:
        """Partial display update; validates everything before mutating so
        an invalid field leaves the object untouched."""
        obj = self._find(object_id)
        if opacity is not None:
            opacity = float(opacity)
            if not 0.0 <= opacity <= 1.0:
                raise OutOfRangeError(f"opacity must be in [0, 1], got {opacity}")
        if color is not None:
            color = tuple(int(c) for c in color)
            if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
                raise OutOfRangeError(f"color must be three bytes, got {color}")
        if spacing is not None:
            spacing = np.asarray(spacing, dtype=np.float64).reshape(3)
            if not (np.isfinite(spacing).all() and (spacing > 0).all()):
                raise OutOfRangeError("spacing components must be positive")
        if visible is not None:
            obj.visible = bool(visible)
        if opacity is not None:
            obj.opacity = opacity
        if color is not None:
            obj.color = color
        if mirror_x is not None:
            obj.mirror_x = bool(mirror_x)
        if mirror_y is not None:
            obj.mirror_y = bool(mirror_y)
        if spacing is not None:
            obj.spacing = spacing

    # -- cameras ------------------------------------------------------------

    def view_transform(self, camera: str) -> RigidTransform:
        if camera == "original":
            return RigidTransform.identity()
        if camera == "scene":
            return self.scene_camera
        raise ValueError(f"camera must be 'scene' or 'original', got {camera!r}")

    def world_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounds of all posed objects; unit box at the origin
        when the scene has no objects."""
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        for obj in self.objects:
            a = effective_model_transform(obj)
            pts = obj.mesh.vertices @ a[:3, :3].T + a[:3, 3]
            lo = np.minimum(lo, pts.min(axis=0))
            hi = np.maximum(hi, pts.max(axis=0))
        if not np.isfinite(lo).all():
            return np.full(3, -0.5), np.full(3, 0.5)
        return lo, hi

    def set_standard_view(self, view: StandardView | str) -> None:
        view = StandardView(view)
        if view is StandardView.RESET:
            self.scene_camera = RigidTransform.identity()
            return
        lo, hi = self.world_bounds()
        center = (lo + hi) / 2.0
        radius = max(float(np.linalg.norm(hi - lo)) / 2.0, 1.0)
        forward = _VIEW_FORWARD[view]
        # Frame the bounding box at 1.5x its radius along the view axis.
        distance = 1.5 * radius
        down_hint = np.array([0.0, 1.0, 0.0])
        if abs(forward[1]) > 0.5:
            down_hint = np.array([0.0, 0.0, 1.0])
        down = down_hint - (down_hint @ forward) * forward
        down = down / np.linalg.norm(down)
        right = np.cross(down, forward)
        r = np.stack([right, down, forward])
        position = center - forward * distance
        self.scene_camera = RigidTransform(r, -(r @ position))

    # -- picking ------------------------------------------------------------

    def pick_object(self, pixel, camera: str = "original") -> str | None:
        """Front-most visible object under the pixel's viewing ray, or None."""
        u, v = float(pixel[0]), float(pixel[1])
        k = self.intrinsics
        if not (0.0 <= u < k.width and 0.0 <= v < k.height):
            raise OutOfBoundsError(f"pixel ({u}, {v}) outside {k.width}x{k.height}")
        view = self.view_transform(camera).as_matrix()
        direction = np.array([(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0])
        best_t = np.inf
        best_id = None
        for obj in self.objects:
            if not obj.visible:
                continue
            a = view @ effective_model_transform(obj)
            pts = obj.mesh.vertices @ a[:3, :3].T + a[:3, 3]
            t = _ray_hit(direction, pts[obj.mesh.triangles])
            if t is not None and t < best_t:
                best_t = t
                best_id = obj.object_id
        return best_id

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> "Scene":
        """Independent copy for renderer threads; meshes are shared (their
        arrays are immutable)."""
        snap = Scene(self.background, self.intrinsics, self.background_path)
        snap.scene_camera = self.scene_camera
        snap.objects = [copy.copy(obj) for obj in self.objects]
        return snap


def _ray_hit(direction: np.ndarray, tris: np.ndarray) -> float | None:
    """Smallest ray parameter t with origin 0 and unnormalized ``direction``
    (z component 1, so t equals the camera depth) hitting any triangle at
    depth >= NEAR_CLIP_MM.  Moller-Trumbore over the whole batch."""
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = np.where(det != 0.0, 1.0 / det, 0.0)
        tvec = -v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = np.cross(tvec, e1)
        vv = qvec @ direction * inv_det
        t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    hit = (
        (det != 0.0)
        & (u >= 0.0)
        & (vv >= 0.0)
        & (u + vv <= 1.0)
        & (t >= NEAR_CLIP_MM)
    )
    if not hit.any():
        return None
    return float(t[hit].min())
