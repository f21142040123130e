/* Pointer-event pipeline: turns a drag into a chain of gesture commands.
 *
 * Intermediate segments are coalesced to at most one command per frame
 * (60 Hz); release always emits the remaining segment exactly, so the
 * composed server-side result covers the full pointer path regardless of
 * event rate. */

export type GestureMode = "rotate" | "translate";

export interface GestureCommand {
  type: "gesture_rotate" | "gesture_translate";
  params: { start: [number, number]; end: [number, number] };
}

const FRAME_MS = 1000 / 60;

export class GesturePipeline {
  private dragging = false;
  private lastSent: [number, number] | null = null;
  private lastSentAt = -Infinity;

  constructor(
    private emit: (cmd: GestureCommand) => void,
    private minIntervalMs: number = FRAME_MS,
  ) {}

  private command(mode: GestureMode, start: [number, number], end: [number, number]): GestureCommand {
    return {
      type: mode === "rotate" ? "gesture_rotate" : "gesture_translate",
      params: { start, end },
    };
  }

  pointerDown(u: number, v: number): void {
    this.dragging = true;
    this.lastSent = [u, v];
    this.lastSentAt = -Infinity;
  }

  pointerMove(u: number, v: number, mode: GestureMode, nowMs: number): void {
    if (!this.dragging || this.lastSent === null) {
      return;
    }
    if (nowMs - this.lastSentAt < this.minIntervalMs) {
      return; // coalesced; the segment stays anchored at lastSent
    }
    if (u === this.lastSent[0] && v === this.lastSent[1]) {
      return;
    }
    this.emit(this.command(mode, this.lastSent, [u, v]));
    this.lastSent = [u, v];
    this.lastSentAt = nowMs;
  }

  /** Release: emit whatever remains between the last sent point and the
   * release point, uncoalesced, so the final pose is exact. */
  pointerUp(u: number, v: number, mode: GestureMode): void {
    if (!this.dragging || this.lastSent === null) {
      return;
    }
    if (u !== this.lastSent[0] || v !== this.lastSent[1]) {
      this.emit(this.command(mode, this.lastSent, [u, v]));
    }
    this.dragging = false;
    this.lastSent = null;
  }

  cancel(): void {
    this.dragging = false;
    this.lastSent = null;
  }

  get active(): boolean {
    return this.dragging;
  }
}
