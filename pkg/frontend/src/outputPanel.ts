/* Output panel state: the current pose matrix, a visible history of pose
 * texts, clipboard copy, and a local clear that never touches the server's
 * history. */

import { Pose, formatPoseText } from "./math";

export class OutputPanel {
  current: string | null = null;
  entries: string[] = [];

  /** Record a pose change; the displayed text is exactly the service's
   * clipboard format. */
  setPose(pose: Pose): string {
    this.current = formatPoseText(pose);
    this.entries.push(this.current);
    return this.current;
  }

  /** Show a server-provided pose text verbatim (e.g. from a command ack). */
  setPoseText(text: string): void {
    this.current = text;
    this.entries.push(text);
  }

  /** Put exactly the displayed text on the clipboard. */
  async copy(writeText: (text: string) => void | Promise<void>): Promise<string> {
    if (this.current === null) {
      throw new Error("no pose to copy");
    }
    await writeText(this.current);
    return this.current;
  }

  /** Clear the visible history only; the server log is untouched. */
  clear(): void {
    this.entries = [];
    this.current = null;
  }
}
