// Application wiring: state, service synchronization and the control
// panel. Every edit updates the working model immediately, then a
// debounced sync PUTs it to the service and refreshes the preview;
// rejected edits roll back to the last accepted model.

import { ApiClient, ApiError, ModelJson, pngDataUrl } from "./api.js";
import { Debouncer } from "./debounce.js";
import { KernelEditor } from "./editor.js";
import {
  LAMBDA_LIMITS,
  PARAM_LIMITS,
  ParamKey,
  PreviewMode,
  UiState,
  addKernel,
  cloneModel,
  emptyModel,
  moveKernel,
  removeKernel,
  setLambda,
  setParam,
} from "./state.js";

const PARAM_STEP = 0.001;
const SYNC_DEBOUNCE_MS = 100;

export interface AppElements {
  preview: HTMLElement;
  status: HTMLElement;
  convergence: HTMLElement;
  paramBox: HTMLElement;
  params: Record<ParamKey, HTMLInputElement>;
  lambdaBox: HTMLElement;
  lambdaSlider: HTMLInputElement;
  modeButtons: Record<PreviewMode, HTMLButtonElement>;
  removeButton: HTMLButtonElement;
  exportButton: HTMLButtonElement;
  uploadInput: HTMLInputElement;
  resetImageButton: HTMLButtonElement;
}

const PARAM_LABELS: Record<ParamKey, string> = {
  sigma: "spread σ",
  omega: "luminance loss ω",
  theta_rad: "rotation θ",
  psi_gain: "radial push g",
};

// builds the whole control panel under root; index.html only carries the
// empty #app container so tests can assemble an identical DOM
export function buildDom(root: HTMLElement): AppElements {
  const doc = root.ownerDocument;
  const el = <K extends keyof HTMLElementTagNameMap>(
    tag: K,
    cls: string,
    parent: HTMLElement,
  ): HTMLElementTagNameMap[K] => {
    const node = doc.createElement(tag);
    node.className = cls;
    parent.appendChild(node);
    return node;
  };

  const layout = el("div", "layout", root);
  const left = el("div", "panel preview-panel", layout);
  const right = el("div", "panel control-panel", layout);

  const preview = el("div", "preview", left);
  const status = el("div", "status", left);
  const convergence = el("div", "convergence", left);

  const modeRow = el("div", "row mode-row", right);
  const modeButtons = {} as Record<PreviewMode, HTMLButtonElement>;
  (["simulate", "compensate", "region"] as PreviewMode[]).forEach((mode) => {
    const b = el("button", "mode-button", modeRow);
    b.textContent = mode;
    b.dataset.mode = mode;
    modeButtons[mode] = b;
  });

  const lambdaBox = el("div", "row lambda-box", right);
  el("label", "", lambdaBox).textContent = "region cutoff λ";
  const lambdaSlider = el("input", "lambda-slider", lambdaBox);
  lambdaSlider.type = "range";
  lambdaSlider.min = String(LAMBDA_LIMITS[0]);
  lambdaSlider.max = String(LAMBDA_LIMITS[1]);
  lambdaSlider.step = String(PARAM_STEP);

  const paramBox = el("div", "param-box", right);
  el("div", "hint", paramBox).textContent =
    "click the preview to add a deficit locus; drag a marker to move it";
  const params = {} as Record<ParamKey, HTMLInputElement>;
  (Object.keys(PARAM_LIMITS) as ParamKey[]).forEach((key) => {
    const row = el("div", "row param-row", paramBox);
    el("label", "", row).textContent = PARAM_LABELS[key];
    const slider = el("input", `param-${key}`, row);
    slider.type = "range";
    slider.min = String(PARAM_LIMITS[key][0]);
    slider.max = String(PARAM_LIMITS[key][1]);
    slider.step = String(PARAM_STEP);
    slider.dataset.param = key;
    params[key] = slider;
  });
  const removeButton = el("button", "remove-kernel", paramBox);
  removeButton.textContent = "remove kernel";

  const fileRow = el("div", "row file-row", right);
  const exportButton = el("button", "export-model", fileRow);
  exportButton.textContent = "export model";
  const uploadInput = el("input", "upload-image", fileRow);
  uploadInput.type = "file";
  uploadInput.accept = "image/png";
  const resetImageButton = el("button", "reset-image", fileRow);
  resetImageButton.textContent = "back to chart";

  return {
    preview,
    status,
    convergence,
    paramBox,
    params,
    lambdaBox,
    lambdaSlider,
    modeButtons,
    removeButton,
    exportButton,
    uploadInput,
    resetImageButton,
  };
}

export class App {
  state: UiState;
  model: ModelJson;
  private accepted: ModelJson;
  readonly editor: KernelEditor;
  readonly syncDebounce = new Debouncer(SYNC_DEBOUNCE_MS);
  lastPreviewBytes: Uint8Array | null = null;
  uploadedImage: string | null = null; // base64 PNG from the user
  previewSize = 512;
  private renderSeq = 0;

  constructor(
    readonly api: ApiClient,
    readonly els: AppElements,
    sessionId: string,
    initial: ModelJson,
  ) {
    this.state = {
      sessionId,
      selectedKernel: null,
      previewMode: "simulate",
      lambda: initial.lambda,
      pendingRender: false,
    };
    this.model = cloneModel(initial);
    this.accepted = cloneModel(initial);

    this.editor = new KernelEditor(els.preview, {
      onAdd: (u, v) => this.addKernelAt(u, v),
      onMove: (i, u, v) => this.applyEdit(moveKernel(this.model, i, u, v)),
      onSelect: (i) => this.selectKernel(i),
    });

    for (const [mode, button] of Object.entries(this.els.modeButtons)) {
      button.addEventListener("click", () => this.setMode(mode as PreviewMode));
    }
    this.els.lambdaSlider.value = String(this.state.lambda);
    this.els.lambdaSlider.addEventListener("input", () => {
      const value = Number(this.els.lambdaSlider.value);
      this.state.lambda = value;
      this.applyEdit(setLambda(this.model, value));
    });
    for (const [key, slider] of Object.entries(this.els.params)) {
      slider.addEventListener("input", () => {
        if (this.state.selectedKernel === null) return;
        this.applyEdit(
          setParam(this.model, this.state.selectedKernel, key as ParamKey, Number(slider.value)),
        );
      });
    }
    this.els.removeButton.addEventListener("click", () => {
      if (this.state.selectedKernel === null) return;
      const next = removeKernel(this.model, this.state.selectedKernel);
      this.state.selectedKernel = null;
      this.applyEdit(next);
      this.refreshControls();
    });
    this.els.exportButton.addEventListener("click", () => {
      void this.exportModel();
    });
    this.els.uploadInput.addEventListener("change", () => {
      const file = this.els.uploadInput.files && this.els.uploadInput.files[0];
      if (file) void this.handleUpload(file);
    });
    this.els.resetImageButton.addEventListener("click", () => {
      this.uploadedImage = null;
      void this.refreshPreview();
    });

    this.refreshControls();
  }

  static async boot(api: ApiClient, els: AppElements): Promise<App> {
    const sessionId = await api.createSession();
    const app = new App(api, els, sessionId, emptyModel());
    await app.refreshPreview();
    return app;
  }

  // all UI edit paths funnel through here
  applyEdit(next: ModelJson): void {
    this.model = next;
    this.editor.renderMarkers(this.model, this.state.selectedKernel);
    this.setStatus("");
    this.syncDebounce.schedule(() => this.sync());
  }

  addKernelAt(u: number, v: number): void {
    const next = addKernel(this.model, u, v);
    this.state.selectedKernel = next.kernels.length - 1;
    this.applyEdit(next);
    this.refreshControls();
  }

  selectKernel(index: number): void {
    this.state.selectedKernel = index;
    this.editor.renderMarkers(this.model, index);
    this.refreshControls();
  }

  setMode(mode: PreviewMode): void {
    this.state.previewMode = mode;
    this.refreshControls();
    void this.refreshPreview();
  }

  private async sync(): Promise<void> {
    const snapshot = cloneModel(this.model);
    try {
      const result = await this.api.putModel(this.state.sessionId, snapshot);
      this.accepted = snapshot;
      this.setStatus(result.warnings.length ? result.warnings.join("; ") : "");
      await this.refreshPreview();
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        // roll the rejected edit back to the last accepted model
        this.model = cloneModel(this.accepted);
        if (this.state.selectedKernel !== null && this.state.selectedKernel >= this.model.kernels.length) {
          this.state.selectedKernel = null;
        }
        this.editor.renderMarkers(this.model, this.state.selectedKernel);
        this.refreshControls();
        this.setStatus("rejected: " + (err.violations.join("; ") || err.message));
      } else {
        this.setStatus(`service error: ${err instanceof Error ? err.message : err}`);
      }
    }
  }

  async refreshPreview(): Promise<void> {
    const seq = ++this.renderSeq;
    this.state.pendingRender = true;
    try {
      let bytes: Uint8Array;
      const body = {
        image: this.uploadedImage ?? "amsler",
        size: this.previewSize,
      };
      if (this.state.previewMode === "compensate") {
        const r = await this.api.renderCompensate(this.state.sessionId, body);
        bytes = r.bytes;
        this.els.convergence.textContent = r.converged
          ? "inversion converged"
          : "inversion did not converge";
        this.els.convergence.classList.toggle("warning", !r.converged);
      } else if (this.state.previewMode === "region") {
        bytes = await this.api.renderRegion(
          this.state.sessionId,
          this.state.lambda,
          this.previewSize,
        );
        this.els.convergence.textContent = "";
      } else {
        bytes = await this.api.renderSimulate(this.state.sessionId, body);
        this.els.convergence.textContent = "";
      }
      if (seq !== this.renderSeq) return; // a newer render superseded this one
      this.lastPreviewBytes = bytes;
      this.editor.setPreview(pngDataUrl(bytes));
    } catch (err) {
      if (seq === this.renderSeq) {
        this.setStatus(`render failed: ${err instanceof Error ? err.message : err}`);
      }
    } finally {
      if (seq === this.renderSeq) this.state.pendingRender = false;
    }
  }

  // downloads the stored model verbatim; returns the bytes for tests
  async exportModel(): Promise<Uint8Array> {
    const bytes = await this.api.getModelBytes(this.state.sessionId);
    const doc = this.els.preview.ownerDocument;
    const w = doc.defaultView;
    // download UX needs a real browser; headless DOMs still get the bytes
    if (w && typeof w.URL?.createObjectURL === "function") {
      const a = doc.createElement("a");
      let bin = "";
      bytes.forEach((b) => (bin += String.fromCharCode(b)));
      a.href = "data:application/json;base64," + btoa(bin);
      a.download = "deficit-model.json";
      a.click();
    }
    return bytes;
  }

  async handleUpload(file: File): Promise<void> {
    if (file.type !== "image/png" && !file.name.toLowerCase().endsWith(".png")) {
      this.setStatus("only PNG images are supported");
      return;
    }
    const buf = new Uint8Array(await file.arrayBuffer());
    let bin = "";
    buf.forEach((b) => (bin += String.fromCharCode(b)));
    this.uploadedImage = btoa(bin);
    await this.refreshPreview();
  }

  get settled(): boolean {
    return this.syncDebounce.settled && !this.state.pendingRender;
  }

  private setStatus(text: string): void {
    this.els.status.textContent = text;
  }

  private refreshControls(): void {
    const selected = this.state.selectedKernel;
    this.els.paramBox.classList.toggle("no-selection", selected === null);
    if (selected !== null) {
      const k = this.model.kernels[selected];
      this.els.params.sigma.value = String(k.sigma);
      this.els.params.omega.value = String(k.omega);
      this.els.params.theta_rad.value = String(k.theta_rad);
      this.els.params.psi_gain.value = String(k.psi_gain);
    }
    for (const [mode, button] of Object.entries(this.els.modeButtons)) {
      button.classList.toggle("active", mode === this.state.previewMode);
    }
    this.els.lambdaBox.classList.toggle("hidden", this.state.previewMode !== "region");
  }
}
