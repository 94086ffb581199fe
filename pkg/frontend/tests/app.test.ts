// @vitest-environment jsdom
//
// App flows against the in-memory fake server: list, seed clicks, segment,
// overlay, accept/correct, error banner. The live-server twin of these flows
// is session.test.ts.

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { AnnotatorApp } from "../src/app.js";
import { ApiClient } from "../src/api.js";
import { MASK_CONTOUR } from "../src/overlay.js";
import { allPuts, installCanvasStub, type CanvasStub } from "./helpers/canvas-stub.js";
import { fakeDecode, FakeServer } from "./helpers/fake-server.js";

let stub: CanvasStub;
let server: FakeServer;
let root: HTMLElement;
let app: AnnotatorApp;

function makeApp(): AnnotatorApp {
  return new AnnotatorApp(root, {
    api: new ApiClient("", server.fetchFn),
    decode: fakeDecode,
    pollMs: 0,
  });
}

beforeEach(() => {
  stub = installCanvasStub();
  server = new FakeServer();
  server.addCase("pos_000", 1);
  server.addCase("pos_001", 1);
  server.addCase("neg_000", 0);
  root = document.createElement("div");
  document.body.appendChild(root);
  app = makeApp();
});

afterEach(() => {
  app.dispose();
  root.remove();
  stub.restore();
});

function clickCanvas(cx: number, cy: number): Promise<void> {
  const canvas = root.querySelector("canvas.view")!;
  canvas.dispatchEvent(new MouseEvent("click", { clientX: cx, clientY: cy, bubbles: true }));
  return app.settled();
}

function button(cls: string): HTMLButtonElement {
  return root.querySelector(`button.${cls}`) as HTMLButtonElement;
}

function bannerText(): string | null {
  const b = root.querySelector(".banner")!;
  return b.classList.contains("hidden") ? null : b.textContent;
}

function hasContourPixels(img: ImageData): boolean {
  for (let i = 0; i < img.data.length; i += 4) {
    if (
      img.data[i] === MASK_CONTOUR.r &&
      img.data[i + 1] === MASK_CONTOUR.g &&
      img.data[i + 2] === MASK_CONTOUR.b
    ) {
      return true;
    }
  }
  return false;
}

async function openSeededCase(): Promise<void> {
  await app.start();
  await app.selectCase("pos_000");
  await clickCanvas(8.5, 8.5); // zoom 1 -> voxel (8, 8) at the middle slice z=2
}

describe("case list", () => {
  it("renders one row per case with a stage badge", async () => {
    await app.start();
    const rows = root.querySelectorAll(".case-row");
    expect(rows).toHaveLength(3);
    expect(rows[0].querySelector(".case-id")!.textContent).toBe("pos_000");
    expect(rows[0].querySelector(".badge")!.textContent).toBe("imported");
  });

  it("shows an empty-state message for an empty dataset", async () => {
    server.cases.clear();
    await app.start();
    expect(root.querySelector(".empty-state")!.textContent).toMatch(/no cases/);
  });

  it("reflects server-side stage changes on refresh", async () => {
    await app.start();
    server.cases.get("pos_001")!.summary.stage = "featured";
    await app.refreshCases();
    const row = root.querySelector('[data-case-id="pos_001"]')!;
    expect(row.querySelector(".badge")!.textContent).toBe("featured");
  });

  it("shows the error banner when the server is unreachable, and recovers", async () => {
    server.down = true;
    await app.start();
    expect(bannerText()).toMatch(/unreachable/);
    server.down = false;
    await app.refreshCases();
    expect(bannerText()).toBeNull();
    expect(root.querySelectorAll(".case-row")).toHaveLength(3);
  });
});

describe("viewing", () => {
  it("opens a case at its middle slice and sizes the canvas by zoom", async () => {
    await app.start();
    await app.selectCase("pos_000");
    expect(app.state!.z).toBe(2); // nz = 4
    const canvas = root.querySelector("canvas.view") as HTMLCanvasElement;
    expect([canvas.width, canvas.height]).toEqual([16, 16]); // zoom 1

    (root.querySelector('[data-zoom="2"]') as HTMLButtonElement).click();
    await app.settled();
    expect([canvas.width, canvas.height]).toEqual([32, 32]);
  });

  it("caches slice rasters per z and refetches after a window change", async () => {
    await app.start();
    await app.selectCase("pos_000");
    expect(server.requestCount(/slices/)).toBe(1);
    await app.setSliceIndex(2); // same slice: cached
    expect(server.requestCount(/slices/)).toBe(1);
    await app.setSliceIndex(3);
    expect(server.requestCount(/slices/)).toBe(2);

    await app.setDisplayWindow(60, 350);
    expect(server.requestCount(/slices/)).toBe(3);
    expect(server.requests.at(-1)).toContain("level=60");
    expect(server.requests.at(-1)).toContain("width=350");

    await app.setDisplayWindow(60, 0); // invalid width: no state change, no fetch
    expect(server.requestCount(/slices/)).toBe(3);
  });

  it("clamps slider slices into range", async () => {
    await app.start();
    await app.selectCase("pos_000");
    await app.setSliceIndex(99);
    expect(app.state!.z).toBe(3);
  });
});

describe("seed placement", () => {
  it("converts a click to a voxel and persists it", async () => {
    await app.start();
    await app.selectCase("pos_000");
    await clickCanvas(8.5, 9.5);
    expect(server.cases.get("pos_000")!.summary.seed).toEqual({ z: 2, x: 8, y: 9 });
    expect(root.querySelector(".seed-label")!.textContent).toBe("seed z=2 x=8 y=9");
    expect(app.state!.stage).toBe("seeded");
  });

  it("applies the inverse zoom transform", async () => {
    await app.start();
    await app.selectCase("pos_000");
    (root.querySelector('[data-zoom="2"]') as HTMLButtonElement).click();
    await app.settled();
    await clickCanvas(17, 11); // floor(17/2), floor(11/2)
    expect(server.cases.get("pos_000")!.summary.seed).toEqual({ z: 2, x: 8, y: 5 });
  });

  it("ignores clicks outside the image", async () => {
    await app.start();
    await app.selectCase("pos_000");
    await clickCanvas(16.5, 3); // x past the right edge at zoom 1
    expect(server.requestCount(/^PUT/)).toBe(0);
    expect(server.cases.get("pos_000")!.summary.seed).toBeNull();
  });

  it("a re-click replaces the prior seed", async () => {
    await app.start();
    await app.selectCase("pos_000");
    await clickCanvas(4.5, 4.5);
    await clickCanvas(10.5, 12.5);
    expect(server.cases.get("pos_000")!.summary.seed).toEqual({ z: 2, x: 10, y: 12 });
    expect(server.requestCount(/^PUT/)).toBe(2);
  });
});

describe("segment / accept / correct", () => {
  it("disables Segment until a seed exists", async () => {
    await app.start();
    await app.selectCase("pos_000");
    expect(button("segment-btn").disabled).toBe(true);
    await clickCanvas(8.5, 8.5);
    expect(button("segment-btn").disabled).toBe(false);
  });

  it("runs the happy path: segment -> overlay -> accept", async () => {
    await openSeededCase();
    button("segment-btn").click();
    await app.settled();

    expect(app.state!.stage).toBe("segmented");
    expect(app.state!.busy).toBe(false);
    expect(bannerText()).toBeNull();
    expect(root.querySelector(".stage-badge")!.textContent).toBe("segmented");
    // the composited frame put to the offscreen canvas carries the contour
    expect(allPuts(stub).some(hasContourPixels)).toBe(true);

    button("accept-btn").click();
    await app.settled();
    expect(app.state!.stage).toBe("accepted");
    expect(server.cases.get("pos_000")!.summary.stage).toBe("accepted");
  });

  it("surfaces a segmentation failure verbatim and clears busy", async () => {
    await openSeededCase();
    server.failSegment = true;
    button("segment-btn").click();
    await app.settled();
    expect(bannerText()).toBe("segmentation failed: seed region has no growable contrast");
    expect(app.state!.stage).toBe("seeded");
    expect(app.state!.busy).toBe(false);
  });

  it("accept without a mask shows the server's 409 message", async () => {
    await openSeededCase();
    button("accept-btn").click();
    await app.settled();
    expect(bannerText()).toBe("case pos_000 has no segmentation to accept");
  });

  it("toggles the overlay from cache without refetching the mask", async () => {
    await openSeededCase();
    button("segment-btn").click();
    await app.settled();
    expect(server.requestCount(/mask/)).toBe(1);

    const toggle = root.querySelector(".overlay-toggle") as HTMLInputElement;
    toggle.checked = false;
    toggle.dispatchEvent(new Event("change"));
    await app.settled();
    expect(app.state!.showOverlay).toBe(false);
    const lastOff = allPuts(stub).at(-1)!;
    expect(hasContourPixels(lastOff)).toBe(false); // plain slice again

    toggle.checked = true;
    toggle.dispatchEvent(new Event("change"));
    await app.settled();
    expect(hasContourPixels(allPuts(stub).at(-1)!)).toBe(true);
    expect(server.requestCount(/mask/)).toBe(1); // still the single fetch
  });

  it("correct deletes the mask and returns to seeding", async () => {
    await openSeededCase();
    button("segment-btn").click();
    await app.settled();
    button("correct-btn").click();
    await app.settled();

    expect(app.state!.stage).toBe("seeded");
    expect(server.cases.get("pos_000")!.maskBits).toBeNull();
    expect(hasContourPixels(allPuts(stub).at(-1)!)).toBe(false);
    // seed survives, so segment can run again immediately
    expect(button("segment-btn").disabled).toBe(false);
  });
});
