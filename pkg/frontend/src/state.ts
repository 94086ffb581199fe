// Viewer state and its transitions, kept pure so the invariants are testable
// without a DOM: z stays within [0, n_slices), window width stays positive,
// a new pending seed replaces the old one.

import type { CaseSummary, Seed } from "./api.js";

export interface DisplayWindow {
  level: number;
  width: number;
}

export interface ViewerState {
  caseId: string;
  nSlices: number;
  z: number;
  window: DisplayWindow;
  zoom: number;
  showOverlay: boolean;
  pendingSeed: Seed | null;
  stage: string;
  busy: boolean; // one in-flight segmentation at a time
}

export const DEFAULT_WINDOW: DisplayWindow = { level: 80, width: 200 };

export function openCase(summary: CaseSummary, zoom = 1): ViewerState {
  const nSlices = summary.n_slices ?? 1;
  return {
    caseId: summary.case_id,
    nSlices,
    // start at the stored seed's slice when there is one, else the middle
    z: summary.seed ? clampZ(summary.seed.z, nSlices) : Math.floor(nSlices / 2),
    window: { ...DEFAULT_WINDOW },
    zoom,
    showOverlay: true,
    pendingSeed: summary.seed,
    stage: summary.stage,
    busy: false,
  };
}

function clampZ(z: number, nSlices: number): number {
  return Math.min(Math.max(Math.trunc(z), 0), nSlices - 1);
}

export function setSlice(s: ViewerState, z: number): ViewerState {
  return { ...s, z: clampZ(z, s.nSlices) };
}

export function setWindow(s: ViewerState, level: number, width: number): ViewerState {
  if (!Number.isFinite(level) || !Number.isFinite(width) || width <= 0) return s;
  return { ...s, window: { level, width } };
}

export function setZoom(s: ViewerState, zoom: number): ViewerState {
  if (zoom <= 0) return s;
  return { ...s, zoom };
}

export function setPendingSeed(s: ViewerState, seed: Seed): ViewerState {
  return { ...s, pendingSeed: seed };
}

export function toggleOverlay(s: ViewerState): ViewerState {
  return { ...s, showOverlay: !s.showOverlay };
}

export function applySummary(s: ViewerState, summary: CaseSummary): ViewerState {
  if (summary.case_id !== s.caseId) return s;
  return {
    ...s,
    stage: summary.stage,
    pendingSeed: summary.seed ?? s.pendingSeed,
    nSlices: summary.n_slices ?? s.nSlices,
  };
}
