// Kernel editor: the preview image with draggable kernel markers on top.
// Clicking empty space adds a kernel at that visual-field point; clicking
// a marker selects it; dragging a marker moves its center.

import { ModelJson } from "./api.js";

export interface EditorCallbacks {
  onAdd(u: number, v: number): void;
  onMove(index: number, u: number, v: number): void;
  onSelect(index: number): void;
}

export class KernelEditor {
  readonly image: HTMLImageElement;
  private overlay: HTMLElement;
  private dragging: number | null = null;
  private dragMoved = false;

  constructor(
    readonly container: HTMLElement,
    readonly callbacks: EditorCallbacks,
  ) {
    this.image = container.ownerDocument.createElement("img");
    this.image.className = "preview-image";
    this.image.draggable = false;
    container.appendChild(this.image);

    this.overlay = container.ownerDocument.createElement("div");
    this.overlay.className = "marker-overlay";
    container.appendChild(this.overlay);

    container.addEventListener("click", (e) => this.onClick(e as MouseEvent));
    container.addEventListener("mousedown", (e) => this.onMouseDown(e as MouseEvent));
    container.addEventListener("mousemove", (e) => this.onMouseMove(e as MouseEvent));
    container.addEventListener("mouseup", () => this.onMouseUp());
    container.addEventListener("mouseleave", () => this.onMouseUp());
  }

  // event position in visual-field coordinates
  private fieldPoint(e: MouseEvent): [number, number] {
    const rect = this.container.getBoundingClientRect();
    const w = rect.width || 1;
    const h = rect.height || 1;
    return [(e.clientX - rect.left) / w, (e.clientY - rect.top) / h];
  }

  private markerIndex(e: MouseEvent): number | null {
    const target = e.target as HTMLElement;
    if (target.dataset && target.dataset.kernel !== undefined) {
      return Number(target.dataset.kernel);
    }
    return null;
  }

  private onClick(e: MouseEvent): void {
    if (this.dragMoved) {
      this.dragMoved = false;
      return; // drag release, not an add
    }
    const marker = this.markerIndex(e);
    if (marker !== null) {
      this.callbacks.onSelect(marker);
      return;
    }
    const [u, v] = this.fieldPoint(e);
    this.callbacks.onAdd(u, v);
  }

  private onMouseDown(e: MouseEvent): void {
    const marker = this.markerIndex(e);
    if (marker !== null) {
      this.dragging = marker;
      this.dragMoved = false;
    }
  }

  private onMouseMove(e: MouseEvent): void {
    if (this.dragging === null) return;
    this.dragMoved = true;
    const [u, v] = this.fieldPoint(e);
    this.callbacks.onMove(this.dragging, u, v);
  }

  private onMouseUp(): void {
    this.dragging = null;
  }

  setPreview(dataUrl: string): void {
    this.image.src = dataUrl;
  }

  renderMarkers(model: ModelJson, selected: number | null): void {
    this.overlay.textContent = "";
    model.kernels.forEach((k, i) => {
      const dot = this.overlay.ownerDocument.createElement("div");
      dot.className = "kernel-marker" + (i === selected ? " selected" : "");
      dot.dataset.kernel = String(i);
      dot.style.left = `${k.mu[0] * 100}%`;
      dot.style.top = `${k.mu[1] * 100}%`;
      dot.title = `kernel ${i}`;
      this.overlay.appendChild(dot);
    });
  }
}
