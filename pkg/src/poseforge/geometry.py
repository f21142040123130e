"""Pinhole image-formation math and SE(3) manipulation primitives.

Coordinate conventions used across the package:

    world / camera frames : right-handed, +X right, +Y down, +Z forward
                            (the original camera looks along +Z)
    image plane           : origin at the top-left corner, u rightward,
                            v downward, in pixels
    lengths               : millimeters

A pose maps points from the world frame into the camera frame,
``p_cam = R @ p_world + t``.  Pixels follow from the intrinsics as
``u = fx * x / z + cx`` and ``v = fy * y / z + cy`` after the perspective
divide by the camera-frame depth ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, DegenerateAxisError, InvalidRotationError

# Construction invariant for rotations; drift past DRIFT_TOL triggers
# re-orthonormalization when composing gesture chains.
ROTATION_TOL = 1e-9
DRIFT_TOL = 1e-12

# Scroll-wheel depth gain: one notch scales depth by exp(DEPTH_GAIN).
DEPTH_GAIN = 0.05

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def _as_vec3(value) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64).reshape(3)
    if not np.isfinite(v).all():
        raise ValueError("expected 3 finite components")
    return v


def rotation_drift(rotation: np.ndarray) -> float:
    """Max absolute deviation of R.T @ R from the identity."""
    r = np.asarray(rotation, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        drift = float(np.abs(r.T @ r - np.eye(3)).max())
    return drift if math.isfinite(drift) else math.inf


def validate_rotation(rotation: np.ndarray, tol: float = ROTATION_TOL) -> np.ndarray:
    r = np.asarray(rotation, dtype=np.float64)
    if r.shape != (3, 3) or not np.isfinite(r).all():
        raise InvalidRotationError("rotation must be a finite 3x3 matrix")
    if rotation_drift(r) > tol:
        raise InvalidRotationError("matrix is not orthonormal within tolerance")
    if abs(float(np.linalg.det(r)) - 1.0) > tol:
        raise InvalidRotationError("matrix determinant is not +1 within tolerance")
    return r


def orthonormalize(rotation: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on the rows; third row from the cross product so the
    result has determinant +1 for inputs that are nearly rotations."""
    r = np.asarray(rotation, dtype=np.float64)
    u0 = r[0] / np.linalg.norm(r[0])
    u1 = r[1] - (u0 @ r[1]) * u0
    u1 = u1 / np.linalg.norm(u1)
    u2 = np.cross(u0, u1)
    return np.stack([u0, u1, u2])


@dataclass(frozen=True)
class RigidTransform:
    """SE(3) transform [R|t] mapping world points into camera coordinates.

    Invariants are checked on every construction: rotation orthonormal and
    det +1 within ROTATION_TOL, translation finite.  As a 4x4 matrix the
    bottom row is [0 0 0 1].
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = validate_rotation(self.rotation)
        t = _as_vec3(self.translation)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix, reorthonormalize: bool = False) -> "RigidTransform":
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (4, 4) or not np.isfinite(m).all():
            raise InvalidRotationError("expected a finite 4x4 matrix")
        if np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0])).max() > 1e-9:
            raise InvalidRotationError("bottom row must be [0 0 0 1]")
        r = m[:3, :3]
        if reorthonormalize:
            if float(np.linalg.det(r)) <= 0.0:
                raise InvalidRotationError("rotation determinant must be positive")
            r = orthonormalize(r)
        return cls(r, m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def apply(self, points) -> np.ndarray:
        """Transform one (3,) point or an (N, 3) batch."""
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def allclose(self, other: "RigidTransform", tol: float = 1e-9) -> bool:
        return bool(
            np.abs(self.rotation - other.rotation).max() <= tol
            and np.abs(self.translation - other.translation).max() <= tol
        )


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def as_matrix4(self) -> np.ndarray:
        """4x4 embedding with padding rows [0 0 1 0] / [0 0 0 1]."""
        m = np.eye(4)
        m[0, 0], m[1, 1] = self.fx, self.fy
        m[0, 2], m[1, 2] = self.cx, self.cy
        return m


def point_h(x, y, z) -> np.ndarray:
    """Homogeneous point with w = 1."""
    return np.array([x, y, z, 1.0], dtype=np.float64)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equal to applying ``b`` first, then ``a``."""
    r = a.rotation @ b.rotation
    t = a.rotation @ b.translation + a.translation
    if rotation_drift(r) > DRIFT_TOL:
        r = orthonormalize(r)
    return RigidTransform(r, t)


def invert(m: RigidTransform) -> RigidTransform:
    rt = m.rotation.T
    return RigidTransform(rt, -(rt @ m.translation))


def world_to_camera(m: RigidTransform, p: np.ndarray) -> np.ndarray:
    """Map a homogeneous world point (w = 1) into camera coordinates."""
    p = np.asarray(p, dtype=np.float64).reshape(4)
    if p[3] != 1.0:
        raise ValueError("expected a homogeneous point with w = 1")
    out = np.empty(4)
    out[:3] = m.rotation @ p[:3] + m.translation
    out[3] = 1.0
    return out


def project(k: CameraIntrinsics, p_c) -> np.ndarray:
    """Project a camera-frame point to pixel coordinates (u, v).

    Raises BehindCameraError when the depth is not positive; callers that
    clip (the renderer) must do so before projecting.
    """
    p = np.asarray(p_c, dtype=np.float64).reshape(-1)
    x, y, z = p[0], p[1], p[2]
    if z <= 0.0:
        raise BehindCameraError(f"depth must be positive, got z={z}")
    return np.array([k.fx * x / z + k.cx, k.fy * y / z + k.cy])


def project_world(k: CameraIntrinsics, m: RigidTransform, p_w) -> np.ndarray:
    return project(k, world_to_camera(m, np.asarray(p_w, dtype=np.float64)))


def rotation_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    a = np.asarray(axis, dtype=np.float64).reshape(3)
    n = float(np.linalg.norm(a))
    if n < 1e-12:
        raise DegenerateAxisError("rotation axis has near-zero length")
    ux, uy, uz = a / n
    k = np.array([[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def trackball_rotate(
    current: RigidTransform,
    drag_start,
    drag_end,
    pivot,
    k: CameraIntrinsics,
) -> RigidTransform:
    """Arcball rotation of a posed object about its pivot point.

    ``pivot`` is expressed in the frame ``current`` maps from (the object's
    model frame); its camera-frame position is left unchanged, so its
    projected pixel is invariant under any drag.  A full-width horizontal
    drag corresponds to a 2*pi turn about the vertical camera axis, a
    full-height vertical drag to a 2*pi turn about the horizontal axis.
    """
    s = np.asarray(drag_start, dtype=np.float64).reshape(2)
    e = np.asarray(drag_end, dtype=np.float64).reshape(2)
    if s[0] == e[0] and s[1] == e[1]:
        return current
    p_c = current.apply(_as_vec3(pivot))
    if p_c[2] <= 0.0:
        raise BehindCameraError("pivot is behind the camera")
    omega = np.array(
        [
            2.0 * math.pi * (e[1] - s[1]) / k.height,
            2.0 * math.pi * (e[0] - s[0]) / k.width,
            0.0,
        ]
    )
    angle = float(np.linalg.norm(omega))
    r_g = rotation_from_axis_angle(omega, angle)
    gesture = RigidTransform(r_g, p_c - r_g @ p_c)
    return compose(gesture, current)


def translate_in_view(
    current: RigidTransform,
    drag_start,
    drag_end,
    k: CameraIntrinsics,
    depth: float | None = None,
) -> RigidTransform:
    """Slide the object parallel to the image plane.

    The translation is chosen so a point at ``depth`` (default: the pose
    translation depth) shifts by exactly the drag vector in pixels; the
    object's depth is unchanged.
    """
    s = np.asarray(drag_start, dtype=np.float64).reshape(2)
    e = np.asarray(drag_end, dtype=np.float64).reshape(2)
    if s[0] == e[0] and s[1] == e[1]:
        return current
    z = float(current.translation[2]) if depth is None else float(depth)
    if z <= 0.0:
        raise BehindCameraError("object depth must be positive")
    delta = np.array([(e[0] - s[0]) * z / k.fx, (e[1] - s[1]) * z / k.fy, 0.0])
    return RigidTransform(current.rotation, current.translation + delta)


def scale_depth(
    current: RigidTransform,
    steps: float,
    pivot=None,
    gain: float = DEPTH_GAIN,
) -> RigidTransform:
    """Scroll-wheel depth change: scales the pivot's camera depth by
    exp(steps * gain) while keeping its projected pixel fixed.

    ``pivot`` is a camera-frame point (default: the pose translation).
    """
    p = current.translation if pivot is None else _as_vec3(pivot)
    if p[2] <= 0.0:
        raise BehindCameraError("pivot is behind the camera")
    if steps == 0:
        return current
    factor = math.exp(steps * gain)
    return RigidTransform(current.rotation, current.translation + (factor - 1.0) * p)


def reflection_about(axis: str, center) -> np.ndarray:
    """4x4 reflection about the plane normal to ``axis`` through ``center``."""
    if axis not in _AXIS_INDEX:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    i = _AXIS_INDEX[axis]
    c = _as_vec3(center)
    m = np.eye(4)
    m[i, i] = -1.0
    m[i, 3] = 2.0 * c[i]
    return m


def mirror_transform(m: RigidTransform, axis: str, mesh_center) -> np.ndarray:
    """Pose-with-reflection 4x4: mirrors model geometry about the axis plane
    through ``mesh_center`` before applying ``m``.  Not a rigid transform
    (the linear part has determinant -1); applying the reflection twice
    recovers the plain pose."""
    return m.as_matrix() @ reflection_about(axis, mesh_center)
