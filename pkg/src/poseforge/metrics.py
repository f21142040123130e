"""Pose-error metrics: angular distance, translation distance, and the
average per-vertex model distance (ADD)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMeshError
from .geometry import RigidTransform

METRIC_KEYS = ("angular_deg", "euclidean_mm", "add_mm")


@dataclass(frozen=True)
class PoseErrors:
    angular_deg: float
    euclidean_mm: float
    add_mm: float

    def as_dict(self) -> dict:
        return {
            "angular_deg": self.angular_deg,
            "euclidean_mm": self.euclidean_mm,
            "add_mm": self.add_mm,
        }


def _vertices_of(mesh) -> np.ndarray:
    v = np.asarray(getattr(mesh, "vertices", mesh), dtype=np.float64)
    if v.size == 0:
        raise EmptyMeshError("mesh has no vertices")
    return v.reshape(-1, 3)


def angular_distance(r1, r2) -> float:
    """Geodesic angle between two rotation matrices, in degrees.

    Defined as arccos((trace(r1.T @ r2) - 1) / 2), evaluated through an
    algebraically equivalent atan2 form: with Q = r1.T @ r2 a rotation by
    theta, ||r1 - r2||_F = 2*sqrt(2)*sin(theta/2) and trace(Q) + 1 =
    4*cos^2(theta/2).  This stays exact at theta = 0 (identical inputs
    give a Frobenius norm of exactly zero) and well-conditioned at 180
    degrees, where the arccos form loses precision.
    """
    a = np.asarray(r1, dtype=np.float64)
    b = np.asarray(r2, dtype=np.float64)
    half_sin = float(np.linalg.norm(a - b)) / (2.0 * math.sqrt(2.0))
    half_cos = math.sqrt(max(float(np.trace(a.T @ b)) + 1.0, 0.0)) / 2.0
    return math.degrees(2.0 * math.atan2(half_sin, half_cos))


def euclidean_distance(t1, t2) -> float:
    """L2 distance between two translations, in millimeters."""
    a = np.asarray(t1, dtype=np.float64).reshape(3)
    b = np.asarray(t2, dtype=np.float64).reshape(3)
    return float(np.linalg.norm(a - b))


def add_metric(mesh, p1: RigidTransform, p2: RigidTransform) -> float:
    """Mean distance between corresponding model vertices under two poses:
    (1/N) * sum_i ||(R1 v_i + t1) - (R2 v_i + t2)||, in millimeters.

    Uses every vertex; pass ``max_points`` vertices yourself beforehand if
    subsampling a huge mesh is ever needed.
    """
    v = _vertices_of(mesh)
    a = v @ p1.rotation.T + p1.translation
    b = v @ p2.rotation.T + p2.translation
    return float(np.linalg.norm(a - b, axis=1).mean())


def pose_errors(mesh, annotated: RigidTransform, gt: RigidTransform) -> PoseErrors:
    """Bundle of the three metrics between an annotated pose and a reference."""
    return PoseErrors(
        angular_deg=angular_distance(annotated.rotation, gt.rotation),
        euclidean_mm=euclidean_distance(annotated.translation, gt.translation),
        add_mm=add_metric(mesh, annotated, gt),
    )
