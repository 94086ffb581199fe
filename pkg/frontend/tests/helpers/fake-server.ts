/**
 * In-memory stand-in for the annotation API, for unit-testing app flows
 * without a Python process. Mirrors the real server's routes, status codes,
 * stage machine, and {"error": message} payloads.
 *
 * "PNG" payloads use a trivial FAKE raster codec paired with fakeDecode —
 * the unit tests care about flow and compositing, not PNG bytes (the live
 * session test covers real PNGs).
 */

import type { CaseSummary, FetchFn, Seed } from "../../src/api.js";
import type { RgbaImage } from "../../src/overlay.js";

export function encodeFakeRaster(width: number, height: number, gray: Uint8Array): ArrayBuffer {
  if (gray.length !== width * height) throw new Error("gray size mismatch");
  const out = new Uint8Array(8 + gray.length);
  out[0] = 0x46; // F
  out[1] = 0x41; // A
  out[2] = 0x4b; // K
  out[3] = 0x45; // E
  new DataView(out.buffer).setUint16(4, width);
  new DataView(out.buffer).setUint16(6, height);
  out.set(gray, 8);
  return out.buffer;
}

export async function fakeDecode(bytes: ArrayBuffer): Promise<RgbaImage> {
  const u8 = new Uint8Array(bytes);
  if (String.fromCharCode(u8[0], u8[1], u8[2], u8[3]) !== "FAKE") {
    throw new Error("not a FAKE raster");
  }
  const view = new DataView(bytes);
  const width = view.getUint16(4);
  const height = view.getUint16(6);
  const data = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i++) {
    data[i * 4] = data[i * 4 + 1] = data[i * 4 + 2] = u8[8 + i];
    data[i * 4 + 3] = 255;
  }
  return { width, height, data };
}

interface FakeCase {
  summary: CaseSummary;
  maskBits: Uint8Array | null; // one slice's worth; all z serve the same disc
}

export class FakeServer {
  nx = 16;
  ny = 16;
  nz = 4;
  cases = new Map<string, FakeCase>();
  requests: string[] = [];
  /** When true, POST segment answers 422 like a GrowthError. */
  failSegment = false;
  /** When true, every request rejects like an unreachable host. */
  down = false;

  addCase(caseId: string, label = 1): void {
    this.cases.set(caseId, {
      summary: {
        case_id: caseId,
        label,
        n_slices: this.nz,
        stage: "imported",
        seed: null,
        mask_path: null,
      },
      maskBits: null,
    });
  }

  private sliceGray(): Uint8Array {
    // diagonal ramp; content is irrelevant, stability is
    const g = new Uint8Array(this.nx * this.ny);
    for (let y = 0; y < this.ny; y++) {
      for (let x = 0; x < this.nx; x++) g[y * this.nx + x] = (x * 8 + y * 4) & 0xff;
    }
    return g;
  }

  private discMask(): Uint8Array {
    const g = new Uint8Array(this.nx * this.ny);
    const cx = this.nx / 2;
    const cy = this.ny / 2;
    for (let y = 0; y < this.ny; y++) {
      for (let x = 0; x < this.nx; x++) {
        const d = (x - cx + 0.5) ** 2 + (y - cy + 0.5) ** 2;
        if (d < 16) g[y * this.nx + x] = 255;
      }
    }
    return g;
  }

  private json(status: number, payload: unknown): Response {
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, message: string): Response {
    return this.json(status, { error: message });
  }

  private png(bytes: ArrayBuffer): Response {
    return new Response(bytes, { status: 200, headers: { "Content-Type": "image/png" } });
  }

  fetchFn: FetchFn = async (url, init) => {
    if (this.down) throw new TypeError("fetch failed");
    const method = init?.method ?? "GET";
    const u = new URL(url, "http://fake");
    this.requests.push(`${method} ${u.pathname}${u.search}`);

    if (u.pathname === "/api/cases" && method === "GET") {
      return this.json(200, [...this.cases.values()].map((c) => c.summary));
    }

    let m = u.pathname.match(/^\/api\/cases\/([^/]+)\/slices\/(\d+)$/);
    if (m && method === "GET") {
      const c = this.cases.get(m[1]);
      if (!c) return this.error(404, `unknown case '${m[1]}'`);
      const z = Number(m[2]);
      if (z < 0 || z >= this.nz) return this.error(404, `slice ${z} outside volume`);
      return this.png(encodeFakeRaster(this.nx, this.ny, this.sliceGray()));
    }

    m = u.pathname.match(/^\/api\/cases\/([^/]+)\/seed$/);
    if (m && method === "PUT") {
      const c = this.cases.get(m[1]);
      if (!c) return this.error(404, `unknown case '${m[1]}'`);
      const body = JSON.parse(String(init?.body ?? "{}")) as Partial<Seed>;
      const { z, x, y } = body;
      if (![z, x, y].every((v) => Number.isInteger(v))) {
        return this.error(400, "seed body must carry integer z, x, y");
      }
      if (z! < 0 || z! >= this.nz || x! < 0 || x! >= this.nx || y! < 0 || y! >= this.ny) {
        return this.error(400, `seed outside volume dims`);
      }
      c.summary.seed = { z: z!, x: x!, y: y! };
      if (c.summary.stage === "imported") c.summary.stage = "seeded";
      return this.json(200, c.summary);
    }

    m = u.pathname.match(/^\/api\/cases\/([^/]+)\/segment$/);
    if (m && method === "POST") {
      const c = this.cases.get(m[1]);
      if (!c) return this.error(404, `unknown case '${m[1]}'`);
      if (!c.summary.seed) return this.error(409, `case ${m[1]} has no seed`);
      if (this.failSegment) {
        return this.error(422, "segmentation failed: seed region has no growable contrast");
      }
      c.maskBits = this.discMask();
      c.summary.stage = "segmented";
      c.summary.mask_path = `masks/${m[1]}.ptv`;
      const per_slice: Record<string, unknown> = {};
      for (let z = 0; z < this.nz; z++) per_slice[String(z)] = { area_px: 49, trace: "propagated" };
      return this.json(200, {
        case_id: m[1],
        stage: "segmented",
        mask_path: c.summary.mask_path,
        seed_used: [c.summary.seed.z, c.summary.seed.y, c.summary.seed.x],
        per_slice,
      });
    }

    m = u.pathname.match(/^\/api\/cases\/([^/]+)\/mask\/(\d+)$/);
    if (m && method === "GET") {
      const c = this.cases.get(m[1]);
      if (!c) return this.error(404, `unknown case '${m[1]}'`);
      if (!c.maskBits) return this.error(404, `case ${m[1]} has no mask`);
      const z = Number(m[2]);
      if (z < 0 || z >= this.nz) return this.error(404, `slice ${z} outside mask`);
      return this.png(encodeFakeRaster(this.nx, this.ny, c.maskBits));
    }

    m = u.pathname.match(/^\/api\/cases\/([^/]+)\/accept$/);
    if (m && method === "POST") {
      const c = this.cases.get(m[1]);
      if (!c) return this.error(404, `unknown case '${m[1]}'`);
      if (!c.summary.mask_path || !["segmented", "accepted"].includes(c.summary.stage)) {
        return this.error(409, `case ${m[1]} has no segmentation to accept`);
      }
      c.summary.stage = "accepted";
      return this.json(200, c.summary);
    }

    m = u.pathname.match(/^\/api\/cases\/([^/]+)\/mask$/);
    if (m && method === "DELETE") {
      const c = this.cases.get(m[1]);
      if (!c) return this.error(404, `unknown case '${m[1]}'`);
      if (!c.maskBits) return this.error(404, `case ${m[1]} has no mask`);
      c.maskBits = null;
      c.summary.mask_path = null;
      c.summary.stage = "seeded";
      return this.json(200, c.summary);
    }

    return this.error(404, `no route for ${method} ${u.pathname}`);
  };

  requestCount(pattern: RegExp): number {
    return this.requests.filter((r) => pattern.test(r)).length;
  }
}
