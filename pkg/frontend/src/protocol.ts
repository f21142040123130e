/* HTTP client for the annotation service; the UI talks to the server
 * through this module only. */

export interface ServerObject {
  id: string;
  name: string;
  color: [number, number, number];
  opacity: number;
  visible: boolean;
  mirror_x: boolean;
  mirror_y: boolean;
  spacing: [number, number, number];
  pose: number[]; // 16 floats, row-major
}

export interface SceneState {
  session: string;
  revision: number;
  user: string;
  sample: string | null;
  trial: number | null;
  cursor: number;
  plan_length: number;
  complete: boolean;
  active_object: string | null;
  intrinsics: {
    fx: number;
    fy: number;
    cx: number;
    cy: number;
    width: number;
    height: number;
  };
  objects: ServerObject[];
}

export interface CommandResult {
  revision: number;
  type: string;
  object?: string;
  pose?: string; // pose text for pose-changing commands
  [key: string]: unknown;
}

export interface MeshPayload {
  id: string;
  vertices: number[][];
  triangles: number[][];
}

export class ProtocolError extends Error {
  constructor(
    public status: number,
    public errorType: string,
    detail: string,
  ) {
    super(`${errorType}: ${detail}`);
  }
}

async function expectOk(response: Response): Promise<Response> {
  if (response.ok) {
    return response;
  }
  let errorType = "HttpError";
  let detail = response.statusText;
  try {
    const body = await response.json();
    errorType = body.error ?? errorType;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ProtocolError(response.status, errorType, detail);
}

export class AnnotationClient {
  constructor(private baseUrl: string) {}

  async createSession(user: string, seed: number): Promise<SceneState> {
    const response = await fetch(`${this.baseUrl}/session`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ user, seed }),
    });
    return (await expectOk(response)).json();
  }

  async command(
    session: string,
    type: string,
    params: Record<string, unknown> = {},
  ): Promise<CommandResult> {
    const response = await fetch(`${this.baseUrl}/session/${session}/command`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ command: { type, params } }),
    });
    return (await expectOk(response)).json();
  }

  /** PNG frame; pass a revision to insist on a specific state (409 on
   * mismatch surfaces as a ProtocolError). */
  async frame(
    session: string,
    opts: { camera?: "original" | "scene"; revision?: number; kind?: "color" | "mask" } = {},
  ): Promise<{ png: Uint8Array; revision: number }> {
    const params = new URLSearchParams();
    if (opts.camera) params.set("camera", opts.camera);
    if (opts.revision !== undefined) params.set("revision", String(opts.revision));
    if (opts.kind) params.set("kind", opts.kind);
    const response = await expectOk(
      await fetch(`${this.baseUrl}/session/${session}/frame?${params}`),
    );
    const revision = Number(response.headers.get("x-revision"));
    return { png: new Uint8Array(await response.arrayBuffer()), revision };
  }

  async scene(session: string): Promise<SceneState> {
    const response = await fetch(`${this.baseUrl}/session/${session}/scene`);
    return (await expectOk(response)).json();
  }

  async mesh(session: string, objectId: string): Promise<MeshPayload> {
    const response = await fetch(`${this.baseUrl}/session/${session}/mesh/${objectId}`);
    return (await expectOk(response)).json();
  }

  async history(session: string): Promise<{ timestamp: string; object: string; pose: string }[]> {
    const response = await fetch(`${this.baseUrl}/session/${session}/history`);
    return (await expectOk(response)).json().then((b) => b.history);
  }

  async log(session: string): Promise<Record<string, unknown>[]> {
    const response = await fetch(`${this.baseUrl}/session/${session}/log`);
    return (await expectOk(response)).json().then((b) => b.records);
  }

  async background(session: string): Promise<Uint8Array> {
    const response = await expectOk(
      await fetch(`${this.baseUrl}/session/${session}/background`),
    );
    return new Uint8Array(await response.arrayBuffer());
  }

  /** Server-sent revision notifications; resolves once `limit` events
   * arrived (or the stream closes). Returns an abort function. */
  subscribe(
    session: string,
    onRevision: (revision: number) => void,
    limit?: number,
  ): { done: Promise<void>; abort: () => void } {
    const controller = new AbortController();
    const params = limit !== undefined ? `?limit=${limit}` : "";
    const done = (async () => {
      const response = await expectOk(
        await fetch(`${this.baseUrl}/session/${session}/events${params}`, {
          signal: controller.signal,
        }),
      );
      const reader = response.body!.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      for (;;) {
        const { done: closed, value } = await reader.read();
        if (closed) break;
        buffer += decoder.decode(value, { stream: true });
        let cut;
        while ((cut = buffer.indexOf("\n\n")) >= 0) {
          const chunk = buffer.slice(0, cut);
          buffer = buffer.slice(cut + 2);
          const line = chunk.split("\n").find((l) => l.startsWith("data:"));
          if (line) {
            onRevision(JSON.parse(line.slice(5)).revision);
          }
        }
      }
    })().catch((err) => {
      if (!controller.signal.aborted) throw err;
    });
    return { done, abort: () => controller.abort() };
  }
}
