/* Client-side copy of the scene at a known revision, with optimistic
 * gesture poses layered on top until the server acknowledges them. */

import { Pose, clonePose, parsePoseText, poseFromFlat, poseMaxAbsDiff } from "./math";
import { CommandResult, SceneState, ServerObject } from "./protocol";

export interface MirrorObject {
  id: string;
  name: string;
  color: [number, number, number];
  opacity: number;
  visible: boolean;
  pose: Pose;
}

export class UiSceneMirror {
  revision = -1;
  sample: string | null = null;
  complete = false;
  objects = new Map<string, MirrorObject>();
  // pose at the base of an unacknowledged optimistic chain, per object
  private pendingBase = new Map<string, Pose>();

  /** Full resync from a server snapshot; stale snapshots (lower revision)
   * are ignored so the revision never decreases. */
  applyServerState(state: SceneState): boolean {
    if (state.revision < this.revision) {
      return false;
    }
    this.revision = state.revision;
    this.sample = state.sample;
    this.complete = state.complete;
    this.objects = new Map(
      state.objects.map((o: ServerObject) => [
        o.id,
        {
          id: o.id,
          name: o.name,
          color: o.color,
          opacity: o.opacity,
          visible: o.visible,
          pose: poseFromFlat(o.pose),
        },
      ]),
    );
    this.pendingBase.clear();
    return true;
  }

  object(id: string): MirrorObject {
    const obj = this.objects.get(id);
    if (!obj) {
      throw new Error(`no object ${id} in mirror`);
    }
    return obj;
  }

  /** Local pose update ahead of the server's answer; remembers the
   * pre-gesture pose for rollback on rejection. */
  applyOptimistic(id: string, pose: Pose): void {
    const obj = this.object(id);
    if (!this.pendingBase.has(id)) {
      this.pendingBase.set(id, clonePose(obj.pose));
    }
    obj.pose = pose;
  }

  /** Reconcile with the server's authoritative answer for a pose-changing
   * command. Returns the drift between the optimistic pose and the server
   * pose (should sit within float noise). */
  acknowledge(id: string, result: CommandResult): number {
    if (typeof result.pose !== "string") {
      throw new Error(`command result for ${id} carries no pose`);
    }
    const serverPose = parsePoseText(result.pose);
    const obj = this.object(id);
    const drift = poseMaxAbsDiff(obj.pose, serverPose);
    obj.pose = serverPose; // the server stays authoritative
    this.pendingBase.delete(id);
    if (result.revision > this.revision) {
      this.revision = result.revision;
    }
    return drift;
  }

  /** Server rejected the in-flight gesture: restore the pre-gesture pose. */
  rollback(id: string): void {
    const base = this.pendingBase.get(id);
    if (base) {
      this.object(id).pose = base;
      this.pendingBase.delete(id);
    }
  }

  hasPending(id: string): boolean {
    return this.pendingBase.has(id);
  }
}
