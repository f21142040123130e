"""Numba kernel for the z-buffer triangle rasterizer.

The kernel fills depth/object-index buffers for a row range only, so row
bands can be processed by independent threads; every band walks the full
triangle list in the same global order, which makes the result identical
for any band partition (ties resolve by first-writer within the order,
plus the explicit lower-object-index rule on exact depth ties).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def rasterize_rows(tri_uv, tri_z, tri_obj, depth, idbuf, y0, y1):
    """Rasterize triangles into rows [y0, y1).

    tri_uv : (T, 3, 2) projected pixel coordinates per vertex
    tri_z  : (T, 3) camera-frame depth per vertex (all >= near plane)
    tri_obj: (T,) object index per triangle
    depth  : (H, W) float64, +inf where empty (mutated)
    idbuf  : (H, W) int32, -1 where empty (mutated)

    A pixel is covered when its center lies inside the projected triangle;
    exact-on-edge centers follow the top-left rule.  Depth interpolates
    perspective-correctly (hyperbolic in screen space).
    """
    w = depth.shape[1]
    for t in range(tri_uv.shape[0]):
        ax, ay = tri_uv[t, 0, 0], tri_uv[t, 0, 1]
        bx, by = tri_uv[t, 1, 0], tri_uv[t, 1, 1]
        cx, cy = tri_uv[t, 2, 0], tri_uv[t, 2, 1]
        za, zb, zc = tri_z[t, 0], tri_z[t, 1], tri_z[t, 2]
        area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area2 == 0.0:
            continue
        if area2 < 0.0:
            bx, cx = cx, bx
            by, cy = cy, by
            zb, zc = zc, zb
            area2 = -area2
        xlo = max(int(math.ceil(min(ax, bx, cx) - 0.5)), 0)
        xhi = min(int(math.floor(max(ax, bx, cx) - 0.5)), w - 1)
        ylo = max(int(math.ceil(min(ay, by, cy) - 0.5)), y0)
        yhi = min(int(math.floor(max(ay, by, cy) - 0.5)), y1 - 1)
        if xlo > xhi or ylo > yhi:
            continue
        # top-left tie rule per edge (y grows downward)
        tl0 = (cy - by) > 0.0 or ((cy - by) == 0.0 and (cx - bx) > 0.0)
        tl1 = (ay - cy) > 0.0 or ((ay - cy) == 0.0 and (ax - cx) > 0.0)
        tl2 = (by - ay) > 0.0 or ((by - ay) == 0.0 and (bx - ax) > 0.0)
        inv_za, inv_zb, inv_zc = 1.0 / za, 1.0 / zb, 1.0 / zc
        obj = tri_obj[t]
        for py in range(ylo, yhi + 1):
            sy = py + 0.5
            for px in range(xlo, xhi + 1):
                sx = px + 0.5
                w0 = (cx - bx) * (sy - by) - (cy - by) * (sx - bx)
                w1 = (ax - cx) * (sy - cy) - (ay - cy) * (sx - cx)
                w2 = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax)
                if (w0 < 0.0 or (w0 == 0.0 and not tl0)) or (
                    w1 < 0.0 or (w1 == 0.0 and not tl1)
                ) or (w2 < 0.0 or (w2 == 0.0 and not tl2)):
                    continue
                z = area2 / (w0 * inv_za + w1 * inv_zb + w2 * inv_zc)
                d = depth[py, px]
                if z < d or (z == d and obj < idbuf[py, px]):
                    depth[py, px] = z
                    idbuf[py, px] = obj


def warmup():
    """Force JIT compilation with a trivial call (useful before timing)."""
    uv = np.array([[[1.0, 1.0], [3.0, 1.0], [1.0, 3.0]]])
    z = np.array([[10.0, 10.0, 10.0]])
    obj = np.zeros(1, dtype=np.int32)
    depth = np.full((4, 4), np.inf)
    idbuf = np.full((4, 4), -1, dtype=np.int32)
    rasterize_rows(uv, z, obj, depth, idbuf, 0, 4)
