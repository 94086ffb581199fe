/**
 * Typed client for the ctcad annotation API.
 *
 * Every error response carries {"error": message}; ApiError surfaces that
 * message verbatim so the UI can show exactly what the server said.
 */

export interface Seed {
  z: number;
  x: number;
  y: number;
}

export interface CaseSummary {
  case_id: string;
  label: number | null;
  n_slices: number | null;
  stage: string;
  seed: Seed | null;
  mask_path: string | null;
}

export interface SliceTrace {
  area_px: number;
  trace: unknown; // full layer table on the seed slice, "propagated" elsewhere
}

export interface SegmentResult {
  case_id: string;
  stage: string;
  mask_path: string;
  seed_used: [number, number, number];
  per_slice: Record<string, SliceTrace>;
}

export class ApiError extends Error {
  status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

async function asError(res: Response): Promise<ApiError> {
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body: keep the status line
  }
  return new ApiError(res.status, message);
}

export class ApiClient {
  baseUrl: string;
  private fetchFn: FetchFn;

  constructor(baseUrl = "", fetchFn?: FetchFn) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    // bind: browsers reject fetch called with a bare function reference
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) throw await asError(res);
    return (await res.json()) as T;
  }

  listCases(): Promise<CaseSummary[]> {
    return this.json<CaseSummary[]>("/api/cases");
  }

  sliceUrl(caseId: string, z: number, level?: number, width?: number): string {
    const params = new URLSearchParams();
    if (level !== undefined) params.set("level", String(level));
    if (width !== undefined) params.set("width", String(width));
    const qs = params.toString();
    return `${this.baseUrl}/api/cases/${caseId}/slices/${z}${qs ? "?" + qs : ""}`;
  }

  maskUrl(caseId: string, z: number): string {
    return `${this.baseUrl}/api/cases/${caseId}/mask/${z}`;
  }

  /** Fetch a PNG endpoint as raw bytes (slice or mask). */
  async fetchPng(url: string): Promise<ArrayBuffer> {
    const res = await this.fetchFn(url);
    if (!res.ok) throw await asError(res);
    return res.arrayBuffer();
  }

  putSeed(caseId: string, seed: Seed): Promise<CaseSummary> {
    return this.json<CaseSummary>(`/api/cases/${caseId}/seed`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(seed),
    });
  }

  segment(caseId: string): Promise<SegmentResult> {
    return this.json<SegmentResult>(`/api/cases/${caseId}/segment`, { method: "POST" });
  }

  accept(caseId: string): Promise<CaseSummary> {
    return this.json<CaseSummary>(`/api/cases/${caseId}/accept`, { method: "POST" });
  }

  deleteMask(caseId: string): Promise<CaseSummary> {
    return this.json<CaseSummary>(`/api/cases/${caseId}/mask`, { method: "DELETE" });
  }
}
