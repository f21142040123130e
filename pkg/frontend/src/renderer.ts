/* Client-side silhouette renderer for immediate feedback.
 *
 * Uses the exact projection of the service (u = fx x / z + cx) and fills
 * pixels whose centers fall inside projected triangles; the "verify" mode
 * overlays the server's authoritative frame on top of this for
 * pixel-ground-truth comparison. */

import { Intrinsics, Pose, applyPose, NEAR_CLIP_MM } from "./math";
import { MeshPayload } from "./protocol";

export interface IdMask {
  width: number;
  height: number;
  /** per-pixel object index into the render list, -1 where empty */
  data: Int16Array;
  depth: Float64Array;
}

export interface RenderObject {
  mesh: MeshPayload;
  pose: Pose;
  color: [number, number, number];
  opacity: number;
  visible: boolean;
}

export function emptyMask(k: Intrinsics): IdMask {
  return {
    width: k.width,
    height: k.height,
    data: new Int16Array(k.width * k.height).fill(-1),
    depth: new Float64Array(k.width * k.height).fill(Infinity),
  };
}

/** Rasterize the objects' silhouettes into an id/depth mask (nearest depth
 * wins; triangles touching the near plane are skipped client-side, the
 * server clips them properly). */
export function renderMask(objects: RenderObject[], k: Intrinsics): IdMask {
  const mask = emptyMask(k);
  objects.forEach((obj, index) => {
    if (!obj.visible) {
      return;
    }
    const cam = obj.mesh.vertices.map((v) =>
      applyPose(obj.pose, [v[0], v[1], v[2]]),
    );
    for (const tri of obj.mesh.triangles) {
      const a = cam[tri[0]];
      const b = cam[tri[1]];
      const c = cam[tri[2]];
      if (a[2] < NEAR_CLIP_MM || b[2] < NEAR_CLIP_MM || c[2] < NEAR_CLIP_MM) {
        continue;
      }
      fillTriangle(mask, k, index, a, b, c);
    }
  });
  return mask;
}

function fillTriangle(
  mask: IdMask,
  k: Intrinsics,
  index: number,
  a: number[],
  b: number[],
  c: number[],
): void {
  let ax = (k.fx * a[0]) / a[2] + k.cx;
  let ay = (k.fy * a[1]) / a[2] + k.cy;
  let bx = (k.fx * b[0]) / b[2] + k.cx;
  let by = (k.fy * b[1]) / b[2] + k.cy;
  let cx = (k.fx * c[0]) / c[2] + k.cx;
  let cy = (k.fy * c[1]) / c[2] + k.cy;
  let za = a[2];
  let zb = b[2];
  let zc = c[2];
  let area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  if (area2 === 0) {
    return;
  }
  if (area2 < 0) {
    [bx, cx] = [cx, bx];
    [by, cy] = [cy, by];
    [zb, zc] = [zc, zb];
    area2 = -area2;
  }
  const xlo = Math.max(Math.ceil(Math.min(ax, bx, cx) - 0.5), 0);
  const xhi = Math.min(Math.floor(Math.max(ax, bx, cx) - 0.5), mask.width - 1);
  const ylo = Math.max(Math.ceil(Math.min(ay, by, cy) - 0.5), 0);
  const yhi = Math.min(Math.floor(Math.max(ay, by, cy) - 0.5), mask.height - 1);
  const invZa = 1 / za;
  const invZb = 1 / zb;
  const invZc = 1 / zc;
  for (let py = ylo; py <= yhi; py++) {
    const sy = py + 0.5;
    for (let px = xlo; px <= xhi; px++) {
      const sx = px + 0.5;
      const w0 = (cx - bx) * (sy - by) - (cy - by) * (sx - bx);
      const w1 = (ax - cx) * (sy - cy) - (ay - cy) * (sx - cx);
      const w2 = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax);
      if (w0 < 0 || w1 < 0 || w2 < 0) {
        continue;
      }
      const z = area2 / (w0 * invZa + w1 * invZb + w2 * invZc);
      const at = py * mask.width + px;
      if (z < mask.depth[at] || (z === mask.depth[at] && index < mask.data[at])) {
        mask.depth[at] = z;
        mask.data[at] = index;
      }
    }
  }
}

/** Object index under a pixel, or -1 (used for click selection). */
export function pickAt(mask: IdMask, u: number, v: number): number {
  const px = Math.floor(u);
  const py = Math.floor(v);
  if (px < 0 || py < 0 || px >= mask.width || py >= mask.height) {
    return -1;
  }
  return mask.data[py * mask.width + px];
}

/** Compose the silhouettes over a background into RGBA bytes for a canvas:
 * out = (1 - alpha) * bg + alpha * color on covered pixels. */
export function composeRgba(
  mask: IdMask,
  objects: RenderObject[],
  background: Uint8ClampedArray | null,
  out?: Uint8ClampedArray,
): Uint8ClampedArray {
  const n = mask.width * mask.height;
  const rgba = out ?? new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    const idx = mask.data[i];
    let r = background ? background[4 * i] : 0;
    let g = background ? background[4 * i + 1] : 0;
    let bch = background ? background[4 * i + 2] : 0;
    if (idx >= 0) {
      const obj = objects[idx];
      const alpha = obj.opacity;
      r = Math.round((1 - alpha) * r + alpha * obj.color[0]);
      g = Math.round((1 - alpha) * g + alpha * obj.color[1]);
      bch = Math.round((1 - alpha) * bch + alpha * obj.color[2]);
    }
    rgba[4 * i] = r;
    rgba[4 * i + 1] = g;
    rgba[4 * i + 2] = bch;
    rgba[4 * i + 3] = 255;
  }
  return rgba;
}

/** True when every covered pixel of one mask lies within `band` pixels of a
 * covered pixel of the other, both ways (the verify-overlay agreement
 * check). */
export function masksAgreeWithinBand(a: IdMask, b: IdMask, band = 1): boolean {
  if (a.width !== b.width || a.height !== b.height) {
    return false;
  }
  return coveredWithin(a, b, band) && coveredWithin(b, a, band);
}

function coveredWithin(a: IdMask, b: IdMask, band: number): boolean {
  for (let y = 0; y < a.height; y++) {
    for (let x = 0; x < a.width; x++) {
      if (a.data[y * a.width + x] < 0) {
        continue;
      }
      let hit = false;
      for (let dy = -band; dy <= band && !hit; dy++) {
        for (let dx = -band; dx <= band && !hit; dx++) {
          const nx = x + dx;
          const ny = y + dy;
          if (nx >= 0 && ny >= 0 && nx < b.width && ny < b.height &&
              b.data[ny * b.width + nx] >= 0) {
            hit = true;
          }
        }
      }
      if (!hit) {
        return false;
      }
    }
  }
  return true;
}
