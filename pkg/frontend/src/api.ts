// REST client for the local diagnostic service.

export interface KernelJson {
  mu: [number, number];
  sigma: number;
  omega: number;
  theta_rad: number;
  psi_gain: number;
}

export interface ModelJson {
  version: number;
  lambda: number;
  kernels: KernelJson[];
}

export interface RenderBody {
  image?: string; // "amsler" or base64 PNG
  size?: number;
  gamma_cap?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly violations: string[] = [],
  ) {
    super(message);
  }
}

async function raise(r: Response): Promise<never> {
  let violations: string[] = [];
  let message = `${r.status} ${r.statusText}`;
  try {
    const body = await r.json();
    if (body.detail?.violations) violations = body.detail.violations;
    if (typeof body.detail === "string") message = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(r.status, message, violations);
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async createSession(): Promise<string> {
    const r = await fetch(this.url("/api/sessions"), { method: "POST" });
    if (!r.ok) await raise(r);
    return (await r.json()).id;
  }

  async getModel(sessionId: string): Promise<ModelJson> {
    const r = await fetch(this.url(`/api/sessions/${sessionId}/model`));
    if (!r.ok) await raise(r);
    return r.json();
  }

  // raw body, for byte-exact export
  async getModelBytes(sessionId: string): Promise<Uint8Array> {
    const r = await fetch(this.url(`/api/sessions/${sessionId}/model`));
    if (!r.ok) await raise(r);
    return new Uint8Array(await r.arrayBuffer());
  }

  async putModel(
    sessionId: string,
    model: ModelJson,
  ): Promise<{ ok: boolean; warnings: string[] }> {
    const r = await fetch(this.url(`/api/sessions/${sessionId}/model`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(model),
    });
    if (!r.ok) await raise(r);
    return r.json();
  }

  async renderSimulate(sessionId: string, body: RenderBody): Promise<Uint8Array> {
    return this.renderPost(`/api/sessions/${sessionId}/simulate`, body);
  }

  async renderCompensate(
    sessionId: string,
    body: RenderBody,
  ): Promise<{ bytes: Uint8Array; converged: boolean }> {
    const r = await fetch(this.url(`/api/sessions/${sessionId}/compensate`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) await raise(r);
    return {
      bytes: new Uint8Array(await r.arrayBuffer()),
      converged: r.headers.get("x-scotosim-converged") !== "false",
    };
  }

  async renderRegion(sessionId: string, lambda: number, size: number): Promise<Uint8Array> {
    const r = await fetch(
      this.url(`/api/sessions/${sessionId}/region?lambda=${lambda}&size=${size}`),
    );
    if (!r.ok) await raise(r);
    return new Uint8Array(await r.arrayBuffer());
  }

  private async renderPost(path: string, body: RenderBody): Promise<Uint8Array> {
    const r = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!r.ok) await raise(r);
    return new Uint8Array(await r.arrayBuffer());
  }
}

export function pngDataUrl(bytes: Uint8Array): string {
  let bin = "";
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    bin += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return "data:image/png;base64," + btoa(bin);
}
