/* Browser entry point: wires the scene canvas, gesture pipeline, panels,
 * orientation gizmo, and output panel to the annotation service. */

import { GestureMode, GesturePipeline } from "./gestures";
import { gizmoAxes, standardViewCommand, STANDARD_VIEWS, StandardViewName } from "./gizmo";
import {
  Intrinsics,
  Pose,
  applyPose,
  scaleDepth,
  trackballRotate,
  translateInView,
} from "./math";
import { UiSceneMirror } from "./mirror";
import { OutputPanel } from "./outputPanel";
import { PanelState } from "./panels";
import { AnnotationClient, MeshPayload, ProtocolError } from "./protocol";
import { IdMask, RenderObject, composeRgba, pickAt, renderMask } from "./renderer";

const SERVER = (window as { POSEFORGE_SERVER?: string }).POSEFORGE_SERVER ?? "http://127.0.0.1:7646";

class App {
  client = new AnnotationClient(SERVER);
  mirror = new UiSceneMirror();
  panel = new PanelState(this.mirror);
  output = new OutputPanel();
  session = "";
  intrinsics: Intrinsics | null = null;
  meshes = new Map<string, MeshPayload>();
  background: Uint8ClampedArray | null = null;
  lastMask: IdMask | null = null;
  verifyImage: HTMLImageElement | null = null;

  canvas = document.getElementById("scene") as HTMLCanvasElement;
  gizmoCanvas = document.getElementById("gizmo") as HTMLCanvasElement;
  matrixBox = document.getElementById("matrix") as HTMLPreElement;
  historyBox = document.getElementById("history") as HTMLUListElement;
  objectList = document.getElementById("objects") as HTMLUListElement;
  status = document.getElementById("status") as HTMLSpanElement;

  gestures = new GesturePipeline((cmd) => {
    void this.sendGesture(cmd.type, cmd.params);
  });
  gestureMode: GestureMode = "rotate";

  async start(): Promise<void> {
    const state = await this.client.createSession("ui", Date.now() % 100000);
    this.session = state.session;
    this.mirror.applyServerState(state);
    this.intrinsics = state.intrinsics;
    this.canvas.width = state.intrinsics.width;
    this.canvas.height = state.intrinsics.height;
    await this.loadAssets();
    this.bindInputs();
    this.buildViewButtons();
    this.redraw();
    this.subscribeEvents();
  }

  async loadAssets(): Promise<void> {
    this.meshes.clear();
    for (const id of this.mirror.objects.keys()) {
      this.meshes.set(id, await this.client.mesh(this.session, id));
    }
    const png = await this.client.background(this.session);
    this.background = await decodeToRgba(png, this.canvas.width, this.canvas.height);
    this.rebuildObjectList();
  }

  renderObjects(): RenderObject[] {
    return [...this.mirror.objects.values()].map((o) => ({
      mesh: this.meshes.get(o.id)!,
      pose: o.pose,
      color: o.color,
      opacity: o.opacity,
      visible: o.visible,
    }));
  }

  redraw(): void {
    if (!this.intrinsics) return;
    const objects = this.renderObjects();
    this.lastMask = renderMask(objects, this.intrinsics);
    const rgba = composeRgba(this.lastMask, objects, this.background);
    const ctx = this.canvas.getContext("2d")!;
    const image = ctx.createImageData(this.canvas.width, this.canvas.height);
    image.data.set(rgba);
    ctx.putImageData(image, 0, 0);
    if (this.panel.verifyOverlay && this.verifyImage) {
      ctx.globalAlpha = 0.5;
      ctx.drawImage(this.verifyImage, 0, 0);
      ctx.globalAlpha = 1.0;
    }
    this.drawGizmo();
  }

  drawGizmo(): void {
    const ctx = this.gizmoCanvas.getContext("2d")!;
    const size = this.gizmoCanvas.width;
    ctx.clearRect(0, 0, size, size);
    const center = size / 2;
    const scale = size * 0.38;
    const axes = gizmoAxes([1, 0, 0, 0, 1, 0, 0, 0, 1]);
    for (const a of axes.sort((p, q) => p.direction[2] - q.direction[2])) {
      ctx.strokeStyle = a.color;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(center, center);
      ctx.lineTo(center + a.direction[0] * scale, center + a.direction[1] * scale);
      ctx.stroke();
    }
  }

  selectedPose(): { id: string; pose: Pose } | null {
    if (!this.panel.selected) return null;
    return { id: this.panel.selected, pose: this.mirror.object(this.panel.selected).pose };
  }

  async sendGesture(type: string, params: Record<string, unknown>): Promise<void> {
    const sel = this.selectedPose();
    if (!sel || !this.intrinsics) return;
    // optimistic local transform; the ack reconciles with the server pose
    const start = (params as { start: [number, number] }).start;
    const end = (params as { end: [number, number] }).end;
    const mesh = this.meshes.get(sel.id)!;
    const centroid = meshCentroid(mesh);
    try {
      const optimistic =
        type === "gesture_rotate"
          ? trackballRotate(sel.pose, start, end, centroid, this.intrinsics)
          : translateInView(sel.pose, start, end, this.intrinsics,
              applyPose(sel.pose, centroid)[2]);
      this.mirror.applyOptimistic(sel.id, optimistic);
      this.redraw();
      const result = await this.client.command(this.session, type, {
        ...params, object: sel.id,
      });
      this.mirror.acknowledge(sel.id, result);
      this.output.setPoseText(result.pose as string);
      this.refreshOutput();
    } catch (err) {
      this.mirror.rollback(sel.id);
      this.report(err);
    }
    this.redraw();
  }

  async sendCommand(type: string, params: Record<string, unknown> = {}): Promise<void> {
    try {
      const result = await this.client.command(this.session, type, params);
      if (typeof result.pose === "string" && typeof result.object === "string") {
        this.mirror.acknowledge(result.object, result);
        this.output.setPoseText(result.pose);
      }
      const state = await this.client.scene(this.session);
      this.mirror.applyServerState(state);
      if (type === "confirm_annotation") {
        await this.loadAssets();
        this.panel.select(null);
      }
      this.refreshOutput();
      this.redraw();
    } catch (err) {
      this.report(err);
    }
  }

  bindInputs(): void {
    this.canvas.addEventListener("pointerdown", (ev) => {
      const [u, v] = this.eventPixel(ev);
      const idx = this.lastMask ? pickAt(this.lastMask, u, v) : -1;
      if (idx < 0) {
        this.panel.select(null); // click on empty space deselects
        this.rebuildObjectList();
        return;
      }
      const id = [...this.mirror.objects.keys()][idx];
      this.panel.select(id);
      this.rebuildObjectList();
      this.gestureMode = ev.button === 2 || ev.shiftKey ? "translate" : "rotate";
      this.gestures.pointerDown(u, v);
      this.canvas.setPointerCapture(ev.pointerId);
    });
    this.canvas.addEventListener("pointermove", (ev) => {
      const [u, v] = this.eventPixel(ev);
      this.gestures.pointerMove(u, v, this.gestureMode, performance.now());
    });
    this.canvas.addEventListener("pointerup", (ev) => {
      const [u, v] = this.eventPixel(ev);
      this.gestures.pointerUp(u, v, this.gestureMode);
    });
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const sel = this.selectedPose();
      if (!sel) return;
      const steps = -Math.sign(ev.deltaY);
      const mesh = this.meshes.get(sel.id)!;
      const pivot = applyPose(sel.pose, meshCentroid(mesh));
      try {
        this.mirror.applyOptimistic(sel.id, scaleDepth(sel.pose, steps, pivot));
        this.redraw();
        void this.client
          .command(this.session, "gesture_depth", { steps, object: sel.id })
          .then((result) => {
            this.mirror.acknowledge(sel.id, result);
            this.output.setPoseText(result.pose as string);
            this.refreshOutput();
            this.redraw();
          })
          .catch((err) => {
            this.mirror.rollback(sel.id);
            this.report(err);
            this.redraw();
          });
      } catch (err) {
        this.report(err);
      }
    });
    window.addEventListener("keydown", (ev) => {
      void this.handleKey(ev);
    });
    (document.getElementById("verify") as HTMLInputElement).addEventListener(
      "change",
      (ev) => {
        this.panel.verifyOverlay = (ev.target as HTMLInputElement).checked;
        void this.refreshVerifyOverlay();
      },
    );
    (document.getElementById("copy") as HTMLButtonElement).addEventListener(
      "click",
      () => {
        void this.output.copy((t) => navigator.clipboard.writeText(t));
      },
    );
    (document.getElementById("clear") as HTMLButtonElement).addEventListener(
      "click",
      () => {
        this.output.clear();
        this.refreshOutput();
      },
    );
    (document.getElementById("confirm") as HTMLButtonElement).addEventListener(
      "click",
      () => void this.sendCommand("confirm_annotation"),
    );
    (document.getElementById("undo") as HTMLButtonElement).addEventListener(
      "click",
      () => void this.sendCommand("undo"),
    );
  }

  /** Arrows nudge 1 px in the view plane; with shift they rotate 1 degree
   * about the view axes. */
  async handleKey(ev: KeyboardEvent): Promise<void> {
    const sel = this.selectedPose();
    if (!sel || !this.intrinsics) return;
    const deltas: Record<string, [number, number]> = {
      ArrowLeft: [-1, 0],
      ArrowRight: [1, 0],
      ArrowUp: [0, -1],
      ArrowDown: [0, 1],
    };
    const delta = deltas[ev.key];
    if (!delta) return;
    ev.preventDefault();
    if (ev.shiftKey) {
      // one degree: a horizontal drag of width/360 px rotates 2*pi/360
      const drag: [number, number] = [
        (delta[0] * this.intrinsics.width) / 360,
        (delta[1] * this.intrinsics.height) / 360,
      ];
      await this.sendGesture("gesture_rotate", { start: [0, 0], end: drag });
    } else {
      await this.sendGesture("gesture_translate", { start: [0, 0], end: delta });
    }
  }

  eventPixel(ev: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [
      ((ev.clientX - rect.left) / rect.width) * this.canvas.width,
      ((ev.clientY - rect.top) / rect.height) * this.canvas.height,
    ];
  }

  buildViewButtons(): void {
    const bar = document.getElementById("views")!;
    for (const view of STANDARD_VIEWS) {
      const button = document.createElement("button");
      button.textContent = view;
      button.addEventListener("click", () => {
        void this.sendCommand(...commandTuple(standardViewCommand(view as StandardViewName)));
      });
      bar.appendChild(button);
    }
  }

  rebuildObjectList(): void {
    this.objectList.replaceChildren();
    for (const obj of this.mirror.objects.values()) {
      const item = document.createElement("li");
      item.className = obj.id === this.panel.selected ? "selected" : "";
      const swatch = document.createElement("span");
      swatch.style.background = `rgb(${obj.color.join(",")})`;
      swatch.className = "swatch";
      const label = document.createElement("span");
      label.textContent = obj.name;
      label.addEventListener("click", () => {
        this.panel.select(obj.id);
        this.rebuildObjectList();
      });
      const visible = document.createElement("input");
      visible.type = "checkbox";
      visible.checked = obj.visible;
      visible.addEventListener("change", () => {
        void this.sendCommand("set_display", { object: obj.id, visible: visible.checked });
      });
      const opacity = document.createElement("input");
      opacity.type = "range";
      opacity.min = "0";
      opacity.max = "1";
      opacity.step = "0.05";
      opacity.value = String(obj.opacity);
      opacity.addEventListener("change", () => {
        const cmd = this.panel.opacityCommand(obj.id, Number(opacity.value));
        void this.sendCommand(cmd.type, cmd.params);
      });
      item.append(swatch, label, visible, opacity);
      this.objectList.appendChild(item);
    }
  }

  refreshOutput(): void {
    this.matrixBox.textContent = this.output.current ?? "(no pose yet)";
    this.historyBox.replaceChildren(
      ...this.output.entries.slice(-12).map((text) => {
        const item = document.createElement("li");
        item.textContent = text.split("\n")[0] + " ...";
        return item;
      }),
    );
  }

  async refreshVerifyOverlay(): Promise<void> {
    if (!this.panel.verifyOverlay) {
      this.verifyImage = null;
      this.redraw();
      return;
    }
    const { png } = await this.client.frame(this.session, { camera: "original" });
    const blob = new Blob([png.slice().buffer], { type: "image/png" });
    const image = new Image();
    image.src = URL.createObjectURL(blob);
    await image.decode();
    this.verifyImage = image;
    this.redraw();
  }

  subscribeEvents(): void {
    this.client.subscribe(this.session, () => {
      if (this.panel.verifyOverlay) {
        void this.refreshVerifyOverlay();
      }
    });
  }

  report(err: unknown): void {
    const message =
      err instanceof ProtocolError ? `${err.errorType}: ${err.message}` : String(err);
    this.status.textContent = message;
  }
}

function commandTuple(cmd: { type: string; params: Record<string, unknown> }):
  [string, Record<string, unknown>] {
  return [cmd.type, cmd.params];
}

function meshCentroid(mesh: MeshPayload): [number, number, number] {
  let x = 0;
  let y = 0;
  let z = 0;
  for (const v of mesh.vertices) {
    x += v[0];
    y += v[1];
    z += v[2];
  }
  const n = mesh.vertices.length;
  return [x / n, y / n, z / n];
}

async function decodeToRgba(
  png: Uint8Array,
  width: number,
  height: number,
): Promise<Uint8ClampedArray> {
  const blob = new Blob([png.slice().buffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  return ctx.getImageData(0, 0, width, height).data;
}

window.addEventListener("DOMContentLoaded", () => {
  void new App().start();
});
