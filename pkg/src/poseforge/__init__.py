"""Interactive 6D pose annotation workbench core.

Pinhole projection and SE(3) gesture math, scene state, a deterministic
software overlay renderer, dataset/workspace IO, study metrics with the
full aggregation pipeline, and a local annotation service.
"""

from . import errors
from .geometry import (
    CameraIntrinsics,
    RigidTransform,
    compose,
    invert,
    mirror_transform,
    project,
    project_world,
    rotation_from_axis_angle,
    scale_depth,
    trackball_rotate,
    translate_in_view,
    world_to_camera,
)
from .metrics import PoseErrors, add_metric, angular_distance, euclidean_distance, pose_errors
from .raster import OverlayFrame, rasterize, render_comparison, render_difference
from .scene import MeshAsset, Scene, SceneObject, StandardView, effective_model_transform
from .study import (
    AnnotationRecord,
    TrialPlan,
    best_of_trials,
    inter_personal_stats,
    intra_personal_stats,
    make_trial_plan,
    sus_adjust,
    time_table,
    tlx_summary,
    trim_top_90,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord",
    "CameraIntrinsics",
    "MeshAsset",
    "OverlayFrame",
    "PoseErrors",
    "RigidTransform",
    "Scene",
    "SceneObject",
    "StandardView",
    "TrialPlan",
    "add_metric",
    "angular_distance",
    "best_of_trials",
    "compose",
    "effective_model_transform",
    "errors",
    "euclidean_distance",
    "inter_personal_stats",
    "intra_personal_stats",
    "invert",
    "make_trial_plan",
    "mirror_transform",
    "pose_errors",
    "project",
    "project_world",
    "rasterize",
    "render_comparison",
    "render_difference",
    "rotation_from_axis_angle",
    "scale_depth",
    "sus_adjust",
    "time_table",
    "tlx_summary",
    "trackball_rotate",
    "translate_in_view",
    "trim_top_90",
    "world_to_camera",
]
