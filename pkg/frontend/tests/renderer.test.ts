import { describe, expect, it } from "vitest";

import { identityPose, Intrinsics } from "../src/math";
import { masksAgreeWithinBand, pickAt, renderMask, RenderObject } from "../src/renderer";

const K: Intrinsics = { fx: 80, fy: 80, cx: 32, cy: 32, width: 64, height: 64 };

function triangleObject(z: number, color: [number, number, number] = [0, 255, 0]): RenderObject {
  const pose = identityPose();
  pose.translation = [0, 0, z];
  return {
    mesh: {
      id: "tri",
      vertices: [
        [-20, -15, 0],
        [25, -12, 0],
        [0, 22, 0],
      ],
      triangles: [[0, 1, 2]],
    },
    pose,
    color,
    opacity: 1,
    visible: true,
  };
}

describe("client silhouette renderer", () => {
  it("covers pixels whose centers project inside the triangle", () => {
    const mask = renderMask([triangleObject(400)], K);
    let covered = 0;
    for (const v of mask.data) {
      if (v >= 0) covered++;
    }
    expect(covered).toBeGreaterThan(20);
    // the projected centroid is well inside
    expect(pickAt(mask, 32, 32)).toBe(0);
    // corners stay background
    expect(pickAt(mask, 1, 1)).toBe(-1);
  });

  it("resolves overlaps to the nearer object", () => {
    const near = triangleObject(300);
    const far = triangleObject(600);
    const mask = renderMask([far, near], K);
    expect(pickAt(mask, 32, 32)).toBe(1); // index of the nearer object
  });

  it("skips invisible objects", () => {
    const hidden = triangleObject(300);
    hidden.visible = false;
    const mask = renderMask([hidden], K);
    expect(mask.data.every((v) => v === -1)).toBe(true);
  });

  it("band agreement accepts small boundary differences and rejects shifts", () => {
    const a = renderMask([triangleObject(400)], K);
    const b = renderMask([triangleObject(400)], K);
    expect(masksAgreeWithinBand(a, b, 1)).toBe(true);
    const shifted = triangleObject(400);
    shifted.pose.translation = [30, 0, 400]; // ~6 px sideways
    const c = renderMask([shifted], K);
    expect(masksAgreeWithinBand(a, c, 1)).toBe(false);
  });
});
