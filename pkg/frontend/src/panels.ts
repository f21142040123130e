/* Main-panel state: selection, visibility flags, opacity sliders, and the
 * scene/original camera mode toggle. */

import { UiSceneMirror } from "./mirror";

export type CameraMode = "scene" | "original";

export class PanelState {
  selected: string | null = null;
  mainPanelVisible = true;
  verifyOverlay = false;
  cameraMode: CameraMode = "original";

  constructor(private mirror: UiSceneMirror) {}

  select(id: string | null): void {
    if (id !== null) {
      this.mirror.object(id); // throws on unknown ids
    }
    this.selected = id;
  }

  /** Slider value forwarded unchanged: what is displayed is what is sent. */
  opacityCommand(id: string, value: number): {
    type: "set_display";
    params: { object: string; opacity: number };
  } {
    return { type: "set_display", params: { object: id, opacity: value } };
  }

  visibilityCommand(id: string, visible: boolean): {
    type: "set_display";
    params: { object: string; visible: boolean };
  } {
    return { type: "set_display", params: { object: id, visible } };
  }

  /** Camera toggles are pure view state; they never touch object poses. */
  setCameraMode(mode: CameraMode): void {
    this.cameraMode = mode;
  }

  toggleMainPanel(): void {
    this.mainPanelVisible = !this.mainPanelVisible;
  }
}
