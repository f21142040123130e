/* Orientation gizmo model: shows the scene camera's orientation via the
 * world axes drawn in the paper's colors (x red, y green, z yellow) and
 * maps face clicks to standard-view commands. */

import { Mat3, mat3MulVec, Vec3 } from "./math";

export const GIZMO_AXIS_COLORS: Record<"x" | "y" | "z", string> = {
  x: "red",
  y: "green",
  z: "yellow",
};

export type StandardViewName =
  | "front"
  | "back"
  | "left"
  | "right"
  | "top"
  | "bottom"
  | "reset-to-original";

export interface GizmoAxis {
  axis: "x" | "y" | "z";
  color: string;
  /** world axis endpoint in scene-camera coordinates; draw the 2D segment
   * (direction[0], direction[1]) and sort by direction[2] for overlap */
  direction: Vec3;
}

const WORLD_AXES: { axis: "x" | "y" | "z"; vec: Vec3 }[] = [
  { axis: "x", vec: [1, 0, 0] },
  { axis: "y", vec: [0, 1, 0] },
  { axis: "z", vec: [0, 0, 1] },
];

export function gizmoAxes(sceneCameraRotation: Mat3): GizmoAxis[] {
  return WORLD_AXES.map(({ axis, vec }) => ({
    axis,
    color: GIZMO_AXIS_COLORS[axis],
    direction: mat3MulVec(sceneCameraRotation, vec),
  }));
}

/** Standard-view command for a clicked gizmo face or button. */
export function standardViewCommand(view: StandardViewName): {
  type: "set_standard_view";
  params: { view: StandardViewName };
} {
  return { type: "set_standard_view", params: { view } };
}

export const STANDARD_VIEWS: StandardViewName[] = [
  "front",
  "back",
  "left",
  "right",
  "top",
  "bottom",
  "reset-to-original",
];
