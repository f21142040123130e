import { describe, expect, it, vi } from "vitest";

import { GestureCommand, GesturePipeline } from "../src/gestures";
import { GIZMO_AXIS_COLORS, gizmoAxes, standardViewCommand } from "../src/gizmo";
import { axisAngle, formatPoseText, identityPose, poseMaxAbsDiff, poseToFlat } from "../src/math";
import { UiSceneMirror } from "../src/mirror";
import { OutputPanel } from "../src/outputPanel";
import { PanelState } from "../src/panels";
import { SceneState } from "../src/protocol";

function serverState(revision = 0, poseFlat?: number[]): SceneState {
  return {
    session: "s",
    revision,
    user: "u",
    sample: "s0",
    trial: 0,
    cursor: 0,
    plan_length: 3,
    complete: false,
    active_object: null,
    intrinsics: { fx: 100, fy: 100, cx: 32, cy: 24, width: 64, height: 48 },
    objects: [
      {
        id: "obj",
        name: "obj",
        color: [230, 25, 75],
        opacity: 1,
        visible: true,
        mirror_x: false,
        mirror_y: false,
        spacing: [1, 1, 1],
        pose: poseFlat ?? poseToFlat(identityPose()),
      },
    ],
  };
}

describe("scene mirror", () => {
  it("never lets the revision decrease", () => {
    const mirror = new UiSceneMirror();
    expect(mirror.applyServerState(serverState(5))).toBe(true);
    expect(mirror.applyServerState(serverState(3))).toBe(false);
    expect(mirror.revision).toBe(5);
  });

  it("reconciles optimistic poses with the server answer", () => {
    const mirror = new UiSceneMirror();
    mirror.applyServerState(serverState(0));
    const optimistic = identityPose();
    optimistic.rotation = axisAngle([0, 0, 1], 0.1);
    mirror.applyOptimistic("obj", optimistic);
    expect(mirror.hasPending("obj")).toBe(true);
    const drift = mirror.acknowledge("obj", {
      revision: 1,
      type: "gesture_rotate",
      pose: formatPoseText(optimistic),
    });
    expect(drift).toBeLessThan(1e-7); // client pose equals server pose after ack
    expect(mirror.revision).toBe(1);
    expect(mirror.hasPending("obj")).toBe(false);
  });

  it("rolls back rejected gestures", () => {
    const mirror = new UiSceneMirror();
    mirror.applyServerState(serverState(0));
    const before = mirror.object("obj").pose;
    const optimistic = identityPose();
    optimistic.translation = [9, 9, 9];
    mirror.applyOptimistic("obj", optimistic);
    mirror.rollback("obj");
    expect(poseMaxAbsDiff(mirror.object("obj").pose, before)).toBe(0);
  });
});

describe("gesture pipeline", () => {
  it("coalesces moves to one command per frame and finishes exactly", () => {
    const sent: GestureCommand[] = [];
    const pipeline = new GesturePipeline((cmd) => sent.push(cmd));
    pipeline.pointerDown(0, 0);
    // 240 Hz pointer events for ~100 ms
    for (let i = 1; i <= 24; i++) {
      pipeline.pointerMove(i, 0, "rotate", i * (1000 / 240));
    }
    pipeline.pointerUp(30, 0, "rotate");
    expect(sent.length).toBeLessThanOrEqual(8); // ~6 frames + release
    // the chained segments cover the full path with no gaps
    expect(sent[0].params.start).toEqual([0, 0]);
    for (let i = 1; i < sent.length; i++) {
      expect(sent[i].params.start).toEqual(sent[i - 1].params.end);
    }
    expect(sent[sent.length - 1].params.end).toEqual([30, 0]);
  });

  it("release emits nothing when already at the last sent point", () => {
    const sent: GestureCommand[] = [];
    const pipeline = new GesturePipeline((cmd) => sent.push(cmd));
    pipeline.pointerDown(5, 5);
    pipeline.pointerMove(9, 9, "translate", 1000);
    pipeline.pointerUp(9, 9, "translate");
    expect(sent.length).toBe(1);
    expect(sent[0].type).toBe("gesture_translate");
  });

  it("ignores moves without a pointer down", () => {
    const sent: GestureCommand[] = [];
    const pipeline = new GesturePipeline((cmd) => sent.push(cmd));
    pipeline.pointerMove(1, 1, "rotate", 0);
    expect(sent).toEqual([]);
  });
});

describe("output panel", () => {
  it("copies exactly the displayed text", async () => {
    const panel = new OutputPanel();
    const pose = identityPose();
    pose.translation = [1.5, -2.25, 300];
    const shown = panel.setPose(pose);
    const writeText = vi.fn();
    const copied = await panel.copy(writeText);
    expect(writeText).toHaveBeenCalledWith(shown);
    expect(copied).toBe(shown);
  });

  it("clear empties only the visible history", () => {
    const panel = new OutputPanel();
    panel.setPose(identityPose());
    panel.setPose(identityPose());
    const serverHistory = ["entry0", "entry1"]; // stands in for the server log
    panel.clear();
    expect(panel.entries).toEqual([]);
    expect(panel.current).toBeNull();
    expect(serverHistory.length).toBe(2);
  });

  it("refuses to copy before any pose exists", async () => {
    const panel = new OutputPanel();
    await expect(panel.copy(() => undefined)).rejects.toThrow(/no pose/);
  });
});

describe("orientation gizmo", () => {
  it("uses the paper's axis colors", () => {
    expect(GIZMO_AXIS_COLORS).toEqual({ x: "red", y: "green", z: "yellow" });
  });

  it("reflects the scene camera rotation", () => {
    const identity = gizmoAxes([1, 0, 0, 0, 1, 0, 0, 0, 1]);
    expect(identity[0].direction).toEqual([1, 0, 0]);
    // a quarter turn about the vertical axis points world x along -z
    const quarter = gizmoAxes(axisAngle([0, 1, 0], Math.PI / 2));
    expect(quarter[0].direction[2]).toBeCloseTo(-1, 12);
  });

  it("face clicks issue standard-view commands", () => {
    expect(standardViewCommand("top")).toEqual({
      type: "set_standard_view",
      params: { view: "top" },
    });
    expect(standardViewCommand("reset-to-original").params.view).toBe("reset-to-original");
  });
});

describe("panel state", () => {
  it("selection validates against the mirror", () => {
    const mirror = new UiSceneMirror();
    mirror.applyServerState(serverState(0));
    const panel = new PanelState(mirror);
    panel.select("obj");
    expect(panel.selected).toBe("obj");
    expect(() => panel.select("ghost")).toThrow(/no object/);
    panel.select(null);
    expect(panel.selected).toBeNull();
  });

  it("opacity commands carry the displayed value unchanged", () => {
    const mirror = new UiSceneMirror();
    mirror.applyServerState(serverState(0));
    const panel = new PanelState(mirror);
    const cmd = panel.opacityCommand("obj", 0.35);
    expect(cmd.params.opacity).toBe(0.35);
  });

  it("camera mode switches without touching poses", () => {
    const mirror = new UiSceneMirror();
    mirror.applyServerState(serverState(0));
    const panel = new PanelState(mirror);
    const before = mirror.object("obj").pose;
    panel.setCameraMode("scene");
    panel.setCameraMode("original");
    expect(poseMaxAbsDiff(mirror.object("obj").pose, before)).toBe(0);
    expect(mirror.revision).toBe(0);
  });
});
