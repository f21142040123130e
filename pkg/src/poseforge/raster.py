"""Deterministic headless overlay renderer.

Produces the composited 2D view an annotator judges alignment by: every
visible object's triangles are projected through the pinhole model,
depth-resolved per pixel, and blended over the background at the object's
opacity.  Pure function of the scene snapshot; identical scenes give
bit-identical frames for any worker count.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import _kernels
from .errors import DimensionMismatchError, MissingPoseError
from .scene import NEAR_CLIP_MM, Scene, effective_model_transform

LIME = (0, 255, 0)
MAGENTA = (255, 0, 255)


@dataclass(frozen=True)
class OverlayFrame:
    """Composited frame: RGB image, per-pixel object index (-1 empty) with
    the index->id mapping, and camera-frame depth (+inf empty)."""

    color: np.ndarray
    mask: np.ndarray
    depth: np.ndarray
    object_ids: tuple[str, ...]


def _clip_triangle_near(tri: np.ndarray, near: float) -> list[np.ndarray]:
    """Sutherland-Hodgman clip of one camera-frame triangle against the
    z >= near half-space; returns 0..2 triangles."""
    inside = tri[:, 2] >= near
    if inside.all():
        return [tri]
    if not inside.any():
        return []
    poly = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        a_in, b_in = inside[i], inside[(i + 1) % 3]
        if a_in:
            poly.append(a)
        if a_in != b_in:
            s = (near - a[2]) / (b[2] - a[2])
            poly.append(a + s * (b - a))
    out = []
    for i in range(1, len(poly) - 1):
        out.append(np.stack([poly[0], poly[i], poly[i + 1]]))
    return out


def _triangle_soup(scene: Scene, camera: str):
    """Camera-frame triangles of all visible objects, near-clipped and
    projected; returns (uv, z, obj_index, object_ids)."""
    k = scene.intrinsics
    view = scene.view_transform(camera).as_matrix()
    uv_parts, z_parts, obj_parts = [], [], []
    ids = tuple(o.object_id for o in scene.objects)
    for idx, obj in enumerate(scene.objects):
        if not obj.visible:
            continue
        a = view @ effective_model_transform(obj)
        pts = obj.mesh.vertices @ a[:3, :3].T + a[:3, 3]
        tris = pts[obj.mesh.triangles]
        front = tris[:, :, 2] >= NEAR_CLIP_MM
        keep = tris[front.all(axis=1)]
        crossing = tris[front.any(axis=1) & ~front.all(axis=1)]
        clipped = [keep] if keep.size else []
        for tri in crossing:
            clipped.extend(t[None] for t in _clip_triangle_near(tri, NEAR_CLIP_MM))
        if not clipped:
            continue
        cam = np.concatenate(clipped)
        z = cam[:, :, 2]
        uv = np.empty_like(cam[:, :, :2])
        uv[:, :, 0] = k.fx * cam[:, :, 0] / z + k.cx
        uv[:, :, 1] = k.fy * cam[:, :, 1] / z + k.cy
        uv_parts.append(uv)
        z_parts.append(z)
        obj_parts.append(np.full(len(cam), idx, dtype=np.int32))
    if not uv_parts:
        return None, None, None, ids
    return (
        np.ascontiguousarray(np.concatenate(uv_parts)),
        np.ascontiguousarray(np.concatenate(z_parts)),
        np.concatenate(obj_parts),
        ids,
    )


def _background_canvas(scene: Scene, camera: str) -> np.ndarray:
    if camera == "original":
        return scene.background.copy()
    # The background photograph is only valid from the original viewpoint.
    return np.zeros_like(scene.background)


def rasterize(scene: Scene, camera: str = "original", workers: int = 1) -> OverlayFrame:
    """Render the scene from the given camera ('original' or 'scene').

    ``workers`` splits the image into row bands processed in parallel;
    the result is bit-identical for any value.
    """
    k = scene.intrinsics
    depth = np.full((k.height, k.width), np.inf)
    idbuf = np.full((k.height, k.width), -1, dtype=np.int32)
    uv, z, obj, ids = _triangle_soup(scene, camera)
    if uv is not None:
        bands = _row_bands(k.height, max(int(workers), 1))
        if len(bands) == 1:
            _kernels.rasterize_rows(uv, z, obj, depth, idbuf, 0, k.height)
        else:
            with ThreadPoolExecutor(max_workers=len(bands)) as pool:
                list(
                    pool.map(
                        lambda b: _kernels.rasterize_rows(
                            uv, z, obj, depth, idbuf, b[0], b[1]
                        ),
                        bands,
                    )
                )
    color = _background_canvas(scene, camera)
    _composite(color, idbuf, scene)
    return OverlayFrame(color=color, mask=idbuf, depth=depth, object_ids=ids)


def _row_bands(height: int, workers: int) -> list[tuple[int, int]]:
    n = min(workers, height)
    edges = np.linspace(0, height, n + 1, dtype=int)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(n) if edges[i] < edges[i + 1]]


def _composite(color: np.ndarray, idbuf: np.ndarray, scene: Scene) -> None:
    """Blend object colors over the canvas on covered pixels only:
    out = (1 - alpha) * bg + alpha * object color, in linear 0..1, then
    quantized round-half-up.  Untouched pixels keep their exact bytes."""
    for idx, obj in enumerate(scene.objects):
        covered = idbuf == idx
        if not covered.any():
            continue
        alpha = float(obj.opacity)
        base = color[covered].astype(np.float64) / 255.0
        tint = np.asarray(obj.color, dtype=np.float64) / 255.0
        mixed = (1.0 - alpha) * base + alpha * tint
        color[covered] = np.floor(mixed * 255.0 + 0.5).clip(0, 255).astype(np.uint8)


def coverage_mask(scene: Scene, poses: dict, camera: str = "original") -> np.ndarray:
    """Boolean union silhouette of the mapped objects rendered at the given
    poses (forced visible); other objects are excluded."""
    snap = scene.snapshot()
    kept = []
    for obj in snap.objects:
        if obj.object_id in poses:
            obj.pose = poses[obj.object_id]
            obj.visible = True
            kept.append(obj)
    snap.objects = kept
    frame = rasterize(snap, camera)
    return frame.mask >= 0


def render_comparison(scene: Scene, annotated: dict, ground_truth: dict) -> np.ndarray:
    """Overlay of annotated silhouettes (lime) against reference silhouettes
    (magenta) on the background; overlap pixels blend the two colors."""
    if set(annotated) != set(ground_truth):
        raise MissingPoseError("annotated and ground-truth maps must cover the same ids")
    for object_id in annotated:
        scene.object_index(object_id)
    a = coverage_mask(scene, annotated)
    b = coverage_mask(scene, ground_truth)
    out = scene.background.copy()
    blend = np.floor(
        (np.asarray(LIME, dtype=np.float64) + np.asarray(MAGENTA)) / 2.0 + 0.5
    ).astype(np.uint8)
    out[a & ~b] = LIME
    out[b & ~a] = MAGENTA
    out[a & b] = blend
    return out


def render_difference(annotated_mask, gt_mask) -> tuple[np.ndarray, float]:
    """Symmetric-difference view of two coverage masks plus the mismatch
    ratio |A ^ B| / |A | B| (0 when both masks are empty)."""
    a = _as_coverage(annotated_mask)
    b = _as_coverage(gt_mask)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = int((a | b).sum())
    sym = int((a ^ b).sum())
    ratio = sym / union if union else 0.0
    out = np.zeros(a.shape + (3,), dtype=np.uint8)
    out[a & b] = (255, 255, 255)
    out[a & ~b] = LIME
    out[b & ~a] = MAGENTA
    return out, ratio


def _as_coverage(mask) -> np.ndarray:
    m = np.asarray(mask)
    if m.dtype == bool:
        return m
    return m >= 0


# -- PNG IO -----------------------------------------------------------------


def encode_png(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def encode_mask_png(mask: np.ndarray) -> bytes:
    """Object-index mask as 16-bit grayscale PNG storing index + 1
    (0 = empty)."""
    shifted = (np.asarray(mask, dtype=np.int32) + 1).astype(np.uint16)
    buf = io.BytesIO()
    Image.fromarray(shifted).save(buf, format="PNG")
    return buf.getvalue()


def save_frame_png(frame: OverlayFrame | np.ndarray, path) -> None:
    rgb = frame.color if isinstance(frame, OverlayFrame) else frame
    with open(path, "wb") as fh:
        fh.write(encode_png(rgb))


def save_mask_png(mask: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_mask_png(mask))


def load_png_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)
