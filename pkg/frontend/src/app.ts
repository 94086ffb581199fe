/**
 * Annotator application: case list, slice viewer, seed placement, mask review.
 *
 * All voxel-level results come from the server; this component only maps
 * clicks to voxels, composites the returned mask over the slice, and walks
 * the stage machine (seeded -> segmented -> accepted, Correct goes back).
 *
 * PNG decoding and the API client are injectable so the whole flow can run
 * under a DOM emulator against a live server in tests.
 */

import { ApiClient, ApiError, type CaseSummary, type SegmentResult } from "./api.js";
import { canvasSize, canvasToVoxel, voxelToCanvas, ZOOM_LEVELS } from "./coords.js";
import { compositeOverlay, type RgbaImage } from "./overlay.js";
import {
  applySummary,
  openCase,
  setPendingSeed,
  setSlice,
  setWindow,
  setZoom,
  toggleOverlay,
  type ViewerState,
} from "./state.js";

export type RasterDecoder = (bytes: ArrayBuffer) => Promise<RgbaImage>;

export interface AppOptions {
  api?: ApiClient;
  decode?: RasterDecoder;
  /** Case-list poll interval; 0 disables polling (tests drive refresh directly). */
  pollMs?: number;
}

/** Default decoder: browser-native PNG decode via an offscreen canvas. */
export async function browserDecode(bytes: ArrayBuffer): Promise<RgbaImage> {
  const bitmap = await createImageBitmap(new Blob([bytes], { type: "image/png" }));
  const off = document.createElement("canvas");
  off.width = bitmap.width;
  off.height = bitmap.height;
  const ctx = off.getContext("2d")!;
  ctx.drawImage(bitmap, 0, 0);
  const img = ctx.getImageData(0, 0, bitmap.width, bitmap.height);
  return { width: img.width, height: img.height, data: img.data };
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class AnnotatorApp {
  readonly api: ApiClient;
  state: ViewerState | null = null;
  cases: CaseSummary[] = [];
  lastSegment: SegmentResult | null = null;

  private root: HTMLElement;
  private decode: RasterDecoder;
  private pollMs: number;
  private pollTimer: ReturnType<typeof setInterval> | null = null;

  // native-resolution rasters, keyed by slice index for the open case
  private sliceRasters = new Map<number, RgbaImage>();
  private maskRasters = new Map<number, RgbaImage>();

  // chained tail of in-flight async work, so tests can await quiescence
  private tail: Promise<unknown> = Promise.resolve();

  private banner!: HTMLElement;
  private listEl!: HTMLElement;
  private canvas!: HTMLCanvasElement;
  private slider!: HTMLInputElement;
  private sliceLabel!: HTMLElement;
  private stageBadge!: HTMLElement;
  private seedLabel!: HTMLElement;
  private segmentBtn!: HTMLButtonElement;
  private acceptBtn!: HTMLButtonElement;
  private correctBtn!: HTMLButtonElement;
  private overlayToggle!: HTMLInputElement;
  private levelInput!: HTMLInputElement;
  private widthInput!: HTMLInputElement;
  private zoomButtons = new Map<number, HTMLButtonElement>();

  constructor(root: HTMLElement, opts: AppOptions = {}) {
    this.root = root;
    this.api = opts.api ?? new ApiClient("");
    this.decode = opts.decode ?? browserDecode;
    this.pollMs = opts.pollMs ?? 1000;
    this.buildShell();
  }

  /** Resolves when every operation queued so far has finished. */
  settled(): Promise<void> {
    return this.tail.then(() => undefined);
  }

  private track<T>(work: () => Promise<T>): Promise<T> {
    const next = this.tail.then(work, work);
    this.tail = next.catch(() => undefined); // keep the chain alive after errors
    return next;
  }

  async start(): Promise<void> {
    await this.refreshCases();
    if (this.pollMs > 0) {
      this.pollTimer = setInterval(() => void this.refreshCases(), this.pollMs);
    }
  }

  dispose(): void {
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    this.pollTimer = null;
  }

  // -- shell -----------------------------------------------------------------

  private buildShell(): void {
    this.root.textContent = "";
    this.banner = el("div", "banner hidden");

    const aside = el("aside", "sidebar");
    aside.appendChild(el("h1", "title", "ctcad annotator"));
    this.listEl = el("div", "case-list");
    aside.appendChild(this.listEl);

    const toolbar = el("div", "toolbar");

    const zoomGroup = el("span", "zoom-group");
    for (const z of ZOOM_LEVELS) {
      const btn = el("button", "zoom-btn", `${z}x`);
      btn.dataset.zoom = String(z);
      btn.addEventListener("click", () => this.setZoomLevel(z));
      this.zoomButtons.set(z, btn);
      zoomGroup.appendChild(btn);
    }
    toolbar.appendChild(zoomGroup);

    this.slider = el("input", "slice-slider");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = "0";
    this.slider.addEventListener("input", () => this.setSliceIndex(Number(this.slider.value)));
    this.sliceLabel = el("span", "slice-label", "z –");
    toolbar.appendChild(this.slider);
    toolbar.appendChild(this.sliceLabel);

    this.levelInput = el("input", "win-level");
    this.levelInput.type = "number";
    this.levelInput.value = "80";
    this.widthInput = el("input", "win-width");
    this.widthInput.type = "number";
    this.widthInput.value = "200";
    const onWindow = () =>
      this.setDisplayWindow(Number(this.levelInput.value), Number(this.widthInput.value));
    this.levelInput.addEventListener("change", onWindow);
    this.widthInput.addEventListener("change", onWindow);
    toolbar.appendChild(el("span", "win-label", "level/width"));
    toolbar.appendChild(this.levelInput);
    toolbar.appendChild(this.widthInput);

    this.overlayToggle = el("input", "overlay-toggle");
    this.overlayToggle.type = "checkbox";
    this.overlayToggle.checked = true;
    this.overlayToggle.addEventListener("change", () => this.setOverlayVisible());
    const overlayLabel = el("label", "overlay-label", "overlay");
    overlayLabel.prepend(this.overlayToggle);
    toolbar.appendChild(overlayLabel);

    this.segmentBtn = el("button", "segment-btn", "Segment");
    this.segmentBtn.addEventListener("click", () => void this.runSegment());
    this.acceptBtn = el("button", "accept-btn", "Accept");
    this.acceptBtn.addEventListener("click", () => void this.acceptCase());
    this.correctBtn = el("button", "correct-btn", "Correct");
    this.correctBtn.addEventListener("click", () => void this.correctCase());
    toolbar.appendChild(this.segmentBtn);
    toolbar.appendChild(this.acceptBtn);
    toolbar.appendChild(this.correctBtn);

    this.canvas = el("canvas", "view");
    this.canvas.addEventListener("click", (e: MouseEvent) => {
      const rect = this.canvas.getBoundingClientRect();
      void this.handleCanvasClick(e.clientX - rect.left, e.clientY - rect.top);
    });

    const status = el("div", "status-row");
    this.stageBadge = el("span", "stage-badge", "–");
    this.seedLabel = el("span", "seed-label", "no seed");
    status.appendChild(this.stageBadge);
    status.appendChild(this.seedLabel);

    const main = el("main", "viewer-pane");
    main.appendChild(toolbar);
    const frame = el("div", "canvas-frame");
    frame.appendChild(this.canvas);
    main.appendChild(frame);
    main.appendChild(status);

    this.root.appendChild(this.banner);
    this.root.appendChild(aside);
    this.root.appendChild(main);
  }

  // -- error banner ----------------------------------------------------------

  showError(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  clearError(): void {
    this.banner.textContent = "";
    this.banner.classList.add("hidden");
  }

  private reportError(err: unknown): void {
    if (err instanceof ApiError) this.showError(err.message);
    else this.showError(`server unreachable: ${String((err as Error)?.message ?? err)}`);
  }

  // -- case list -------------------------------------------------------------

  refreshCases(): Promise<void> {
    return this.track(async () => {
      let cases: CaseSummary[];
      try {
        cases = await this.api.listCases();
      } catch (err) {
        this.reportError(err);
        return;
      }
      this.clearError();
      this.cases = cases;
      this.renderCaseList();
      if (this.state) {
        const mine = cases.find((c) => c.case_id === this.state!.caseId);
        if (mine) {
          this.state = applySummary(this.state, mine);
          this.renderStatus();
        }
      }
    });
  }

  private renderCaseList(): void {
    this.listEl.textContent = "";
    if (this.cases.length === 0) {
      this.listEl.appendChild(el("div", "empty-state", "no cases in the dataset"));
      return;
    }
    for (const c of this.cases) {
      const row = el("div", "case-row");
      row.dataset.caseId = c.case_id;
      if (this.state?.caseId === c.case_id) row.classList.add("selected");
      row.appendChild(el("span", "case-id", c.case_id));
      row.appendChild(el("span", `badge badge-${c.stage}`, c.stage));
      row.addEventListener("click", () => void this.selectCase(c.case_id));
      this.listEl.appendChild(row);
    }
  }

  // -- case + slice loading ----------------------------------------------------

  selectCase(caseId: string): Promise<void> {
    return this.track(async () => {
      const summary = this.cases.find((c) => c.case_id === caseId);
      if (!summary) {
        this.showError(`unknown case ${caseId}`);
        return;
      }
      const zoom = this.state?.zoom ?? 1;
      this.state = openCase(summary, zoom);
      this.sliceRasters.clear();
      this.maskRasters.clear();
      this.lastSegment = null;
      this.slider.max = String(this.state.nSlices - 1);
      this.slider.value = String(this.state.z);
      this.renderCaseList();
      await this.loadAndRender();
    });
  }

  private async sliceRaster(z: number): Promise<RgbaImage> {
    const cached = this.sliceRasters.get(z);
    if (cached) return cached;
    const s = this.state!;
    const url = this.api.sliceUrl(s.caseId, z, s.window.level, s.window.width);
    const raster = await this.decode(await this.api.fetchPng(url));
    this.sliceRasters.set(z, raster);
    return raster;
  }

  private async maskRaster(z: number): Promise<RgbaImage | null> {
    if (this.maskRasters.has(z)) return this.maskRasters.get(z)!;
    const s = this.state!;
    const summary = this.cases.find((c) => c.case_id === s.caseId);
    if (!summary?.mask_path) return null;
    try {
      const raster = await this.decode(await this.api.fetchPng(this.api.maskUrl(s.caseId, z)));
      this.maskRasters.set(z, raster);
      return raster;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return null;
      throw err;
    }
  }

  private async loadAndRender(): Promise<void> {
    if (!this.state) return;
    try {
      const slice = await this.sliceRaster(this.state.z);
      const mask = this.state.showOverlay ? await this.maskRaster(this.state.z) : null;
      this.render(slice, mask);
      this.clearError();
    } catch (err) {
      this.reportError(err);
    }
  }

  // -- rendering ---------------------------------------------------------------

  private render(slice: RgbaImage, mask: RgbaImage | null): void {
    const s = this.state!;
    const composed = mask && s.showOverlay ? compositeOverlay(slice, mask) : slice;

    const { w, h } = canvasSize(slice.width, slice.height, s.zoom);
    this.canvas.width = w;
    this.canvas.height = h;

    const off = document.createElement("canvas");
    off.width = composed.width;
    off.height = composed.height;
    off.getContext("2d")!.putImageData(
      new ImageData(new Uint8ClampedArray(composed.data), composed.width, composed.height),
      0,
      0,
    );

    const ctx = this.canvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false; // crisp voxels at 2x
    ctx.clearRect(0, 0, w, h);
    ctx.drawImage(off, 0, 0, w, h);

    if (s.pendingSeed && s.pendingSeed.z === s.z) {
      this.drawSeedMarker(ctx, s.pendingSeed.x, s.pendingSeed.y, s.zoom);
    }

    this.renderStatus();
  }

  private drawSeedMarker(
    ctx: CanvasRenderingContext2D,
    x: number,
    y: number,
    zoom: number,
  ): void {
    const { x: cx, y: cy } = voxelToCanvas(x, y, zoom);
    ctx.strokeStyle = "#4ade80";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(cx - 6, cy);
    ctx.lineTo(cx + 6, cy);
    ctx.moveTo(cx, cy - 6);
    ctx.lineTo(cx, cy + 6);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(cx, cy, 4, 0, Math.PI * 2);
    ctx.stroke();
  }

  private renderStatus(): void {
    const s = this.state;
    if (!s) return;
    this.stageBadge.textContent = s.stage;
    this.stageBadge.className = `stage-badge badge-${s.stage}`;
    this.seedLabel.textContent = s.pendingSeed
      ? `seed z=${s.pendingSeed.z} x=${s.pendingSeed.x} y=${s.pendingSeed.y}`
      : "no seed";
    this.sliceLabel.textContent = `z ${s.z}/${s.nSlices - 1}`;
    this.segmentBtn.disabled = s.busy || !s.pendingSeed;
    this.segmentBtn.textContent = s.busy ? "segmenting…" : "Segment";
    for (const [z, btn] of this.zoomButtons) {
      btn.classList.toggle("active", z === s.zoom);
    }
  }

  // -- interactions --------------------------------------------------------------

  /** Canvas click -> voxel -> PUT seed. Clicks outside the image are ignored. */
  handleCanvasClick(cx: number, cy: number): Promise<void> {
    return this.track(async () => {
      const s = this.state;
      if (!s || s.busy) return;
      const slice = this.sliceRasters.get(s.z);
      if (!slice) return; // nothing rendered yet
      const voxel = canvasToVoxel(cx, cy, s.zoom, slice.width, slice.height);
      if (!voxel) return;
      try {
        const summary = await this.api.putSeed(s.caseId, { z: s.z, x: voxel.x, y: voxel.y });
        this.state = applySummary(setPendingSeed(s, summary.seed!), summary);
        this.upsertSummary(summary);
        this.clearError();
        await this.loadAndRender();
      } catch (err) {
        this.reportError(err);
      }
    });
  }

  runSegment(): Promise<void> {
    return this.track(async () => {
      const s = this.state;
      if (!s || s.busy || !s.pendingSeed) return;
      this.state = { ...s, busy: true };
      this.renderStatus();
      try {
        this.lastSegment = await this.api.segment(s.caseId);
        this.state = { ...this.state, busy: false, stage: this.lastSegment.stage };
        this.maskRasters.clear(); // mask changed: refetch on render
        await this.refreshCasesNow();
        this.clearError();
        await this.loadAndRender();
      } catch (err) {
        this.state = { ...this.state!, busy: false };
        this.renderStatus();
        this.reportError(err);
      }
    });
  }

  acceptCase(): Promise<void> {
    return this.track(async () => {
      const s = this.state;
      if (!s) return;
      try {
        const summary = await this.api.accept(s.caseId);
        this.state = applySummary(s, summary);
        this.upsertSummary(summary);
        this.clearError();
        this.renderCaseList();
        this.renderStatus();
      } catch (err) {
        this.reportError(err);
      }
    });
  }

  /** Correction path: throw the mask away and return to seed placement. */
  correctCase(): Promise<void> {
    return this.track(async () => {
      const s = this.state;
      if (!s) return;
      try {
        const summary = await this.api.deleteMask(s.caseId);
        this.state = applySummary(s, summary);
        this.upsertSummary(summary);
        this.maskRasters.clear();
        this.lastSegment = null;
        this.clearError();
        this.renderCaseList();
        await this.loadAndRender();
      } catch (err) {
        this.reportError(err);
      }
    });
  }

  setSliceIndex(z: number): Promise<void> {
    return this.track(async () => {
      if (!this.state) return;
      this.state = setSlice(this.state, z);
      this.slider.value = String(this.state.z);
      await this.loadAndRender();
    });
  }

  setZoomLevel(zoom: number): Promise<void> {
    return this.track(async () => {
      if (!this.state) return;
      this.state = setZoom(this.state, zoom);
      await this.loadAndRender();
    });
  }

  setDisplayWindow(level: number, width: number): Promise<void> {
    return this.track(async () => {
      if (!this.state) return;
      const next = setWindow(this.state, level, width);
      if (next === this.state) return; // invalid window rejected by state.ts
      this.state = next;
      this.sliceRasters.clear(); // windowing changes the rendered gray levels
      await this.loadAndRender();
    });
  }

  /** Show/hide the mask overlay; uses cached rasters, no refetch. */
  setOverlayVisible(): Promise<void> {
    return this.track(async () => {
      if (!this.state) return;
      if (this.overlayToggle.checked !== this.state.showOverlay) {
        this.state = toggleOverlay(this.state);
      }
      await this.loadAndRender();
    });
  }

  // -- helpers -----------------------------------------------------------------

  private upsertSummary(summary: CaseSummary): void {
    const i = this.cases.findIndex((c) => c.case_id === summary.case_id);
    if (i >= 0) this.cases[i] = summary;
    else this.cases.push(summary);
    this.renderCaseList();
  }

  private async refreshCasesNow(): Promise<void> {
    // inline variant of refreshCases without re-entering the task chain
    try {
      this.cases = await this.api.listCases();
      this.renderCaseList();
      if (this.state) {
        const mine = this.cases.find((c) => c.case_id === this.state!.caseId);
        if (mine) this.state = applySummary(this.state, mine);
      }
    } catch (err) {
      this.reportError(err);
    }
  }
}
