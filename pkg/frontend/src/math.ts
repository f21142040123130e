/*
Pose math mirrored from the annotation service so optimistic client
transforms land on the server's results (within float noise).

Conventions match the service: camera frame +X right, +Y down, +Z forward;
pixels from the top-left; millimeters; poses map model points into the
original camera frame, p_cam = R p + t; pixels u = fx x / z + cx.
*/

export type Vec3 = [number, number, number];
export type Mat3 = number[]; // 9 entries, row-major

export interface Pose {
  rotation: Mat3;
  translation: Vec3;
}

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export const DEPTH_GAIN = 0.05; // depth scale per scroll notch: exp(steps * gain)
export const NEAR_CLIP_MM = 1.0;

export function identityPose(): Pose {
  return { rotation: [1, 0, 0, 0, 1, 0, 0, 0, 1], translation: [0, 0, 0] };
}

export function clonePose(p: Pose): Pose {
  return { rotation: [...p.rotation], translation: [...p.translation] };
}

export function mat3Mul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array<number>(9);
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[3 * i + j] =
        a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j] + a[3 * i + 2] * b[6 + j];
    }
  }
  return out;
}

export function mat3MulVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

export function applyPose(p: Pose, v: Vec3): Vec3 {
  const r = mat3MulVec(p.rotation, v);
  return [r[0] + p.translation[0], r[1] + p.translation[1], r[2] + p.translation[2]];
}

export function project(k: Intrinsics, pCam: Vec3): [number, number] {
  if (pCam[2] <= 0) {
    throw new Error(`point behind camera: z=${pCam[2]}`);
  }
  return [
    (k.fx * pCam[0]) / pCam[2] + k.cx,
    (k.fy * pCam[1]) / pCam[2] + k.cy,
  ];
}

export function axisAngle(axis: Vec3, angle: number): Mat3 {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  if (n < 1e-12) {
    throw new Error("degenerate rotation axis");
  }
  const [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  const t = 1 - c;
  return [
    t * x * x + c, t * x * y - s * z, t * x * z + s * y,
    t * x * y + s * z, t * y * y + c, t * y * z - s * x,
    t * x * z - s * y, t * y * z + s * x, t * z * z + c,
  ];
}

/** Arcball rotation about the model-frame pivot; same mapping as the
 * service: a full-width horizontal drag is one turn about the vertical
 * camera axis, the pivot's camera position never moves. */
export function trackballRotate(
  current: Pose,
  start: [number, number],
  end: [number, number],
  pivotModel: Vec3,
  k: Intrinsics,
): Pose {
  if (start[0] === end[0] && start[1] === end[1]) {
    return current;
  }
  const pCam = applyPose(current, pivotModel);
  if (pCam[2] <= 0) {
    throw new Error("pivot behind camera");
  }
  const omega: Vec3 = [
    (2 * Math.PI * (end[1] - start[1])) / k.height,
    (2 * Math.PI * (end[0] - start[0])) / k.width,
    0,
  ];
  const angle = Math.hypot(omega[0], omega[1], omega[2]);
  const rg = axisAngle(omega, angle);
  const rotation = mat3Mul(rg, current.rotation);
  const rt = mat3MulVec(rg, [
    current.translation[0] - pCam[0],
    current.translation[1] - pCam[1],
    current.translation[2] - pCam[2],
  ]);
  return {
    rotation,
    translation: [rt[0] + pCam[0], rt[1] + pCam[1], rt[2] + pCam[2]],
  };
}

/** Image-plane slide: a point at `depth` follows the cursor exactly. */
export function translateInView(
  current: Pose,
  start: [number, number],
  end: [number, number],
  k: Intrinsics,
  depth?: number,
): Pose {
  if (start[0] === end[0] && start[1] === end[1]) {
    return current;
  }
  const z = depth ?? current.translation[2];
  if (z <= 0) {
    throw new Error("object behind camera");
  }
  return {
    rotation: [...current.rotation],
    translation: [
      current.translation[0] + ((end[0] - start[0]) * z) / k.fx,
      current.translation[1] + ((end[1] - start[1]) * z) / k.fy,
      current.translation[2],
    ],
  };
}

/** Scroll depth: scales the pivot's depth by exp(steps * gain), keeping its
 * projection fixed. */
export function scaleDepth(
  current: Pose,
  steps: number,
  pivotCam?: Vec3,
  gain: number = DEPTH_GAIN,
): Pose {
  const p = pivotCam ?? current.translation;
  if (p[2] <= 0) {
    throw new Error("pivot behind camera");
  }
  if (steps === 0) {
    return current;
  }
  const f = Math.exp(steps * gain);
  return {
    rotation: [...current.rotation],
    translation: [
      current.translation[0] + (f - 1) * p[0],
      current.translation[1] + (f - 1) * p[1],
      current.translation[2] + (f - 1) * p[2],
    ],
  };
}

/** 4-line fixed-point matrix text, the service's clipboard format. */
export function formatPoseText(p: Pose): string {
  const m = [
    [p.rotation[0], p.rotation[1], p.rotation[2], p.translation[0]],
    [p.rotation[3], p.rotation[4], p.rotation[5], p.translation[1]],
    [p.rotation[6], p.rotation[7], p.rotation[8], p.translation[2]],
    [0, 0, 0, 1],
  ];
  return m.map((row) => row.map((v) => v.toFixed(8)).join(" ")).join("\n") + "\n";
}

export function parsePoseText(text: string): Pose {
  const values = text.trim().split(/\s+/).map(Number);
  if (values.length !== 16 || values.some((v) => !Number.isFinite(v))) {
    throw new Error("pose text must hold 16 finite values");
  }
  const bottom = values.slice(12);
  if (Math.abs(bottom[0]) > 1e-6 || Math.abs(bottom[1]) > 1e-6 ||
      Math.abs(bottom[2]) > 1e-6 || Math.abs(bottom[3] - 1) > 1e-6) {
    throw new Error("bottom row must be [0 0 0 1]");
  }
  return poseFromFlat(values);
}

/** Pose from a 16-float row-major matrix (the wire format for poses). */
export function poseFromFlat(values: number[]): Pose {
  return {
    rotation: [
      values[0], values[1], values[2],
      values[4], values[5], values[6],
      values[8], values[9], values[10],
    ],
    translation: [values[3], values[7], values[11]],
  };
}

export function poseToFlat(p: Pose): number[] {
  return [
    p.rotation[0], p.rotation[1], p.rotation[2], p.translation[0],
    p.rotation[3], p.rotation[4], p.rotation[5], p.translation[1],
    p.rotation[6], p.rotation[7], p.rotation[8], p.translation[2],
    0, 0, 0, 1,
  ];
}

export function poseMaxAbsDiff(a: Pose, b: Pose): number {
  let worst = 0;
  for (let i = 0; i < 9; i++) {
    worst = Math.max(worst, Math.abs(a.rotation[i] - b.rotation[i]));
  }
  for (let i = 0; i < 3; i++) {
    worst = Math.max(worst, Math.abs(a.translation[i] - b.translation[i]));
  }
  return worst;
}

/** Geodesic angle in degrees (for tests and nudge feedback). */
export function angularDistanceDeg(a: Mat3, b: Mat3): number {
  let frob = 0;
  for (let i = 0; i < 9; i++) {
    frob += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const at = mat3Mul(transpose(a), b);
  const trace = at[0] + at[4] + at[8];
  const halfSin = Math.sqrt(frob) / (2 * Math.SQRT2);
  const halfCos = Math.sqrt(Math.max(trace + 1, 0)) / 2;
  return (2 * Math.atan2(halfSin, halfCos) * 180) / Math.PI;
}

export function transpose(m: Mat3): Mat3 {
  return [m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]];
}
