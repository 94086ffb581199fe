/**
 * Canvas <-> voxel coordinate mapping.
 *
 * The view canvas is the slice scaled by an integer-or-half zoom factor with
 * no letterboxing, so the mapping is a pure scale: canvas pixel c covers
 * voxels [c/zoom, (c+1)/zoom). floor() picks the voxel under the cursor.
 */

export interface Point {
  x: number;
  y: number;
}

/** Voxel under a canvas position, or null when the click falls outside the image. */
export function canvasToVoxel(
  cx: number,
  cy: number,
  zoom: number,
  nx: number,
  ny: number,
): Point | null {
  if (zoom <= 0) throw new Error(`zoom must be positive, got ${zoom}`);
  const x = Math.floor(cx / zoom);
  const y = Math.floor(cy / zoom);
  if (x < 0 || y < 0 || x >= nx || y >= ny) return null;
  return { x, y };
}

/** Canvas position of a voxel's center (marker placement). */
export function voxelToCanvas(x: number, y: number, zoom: number): Point {
  return { x: (x + 0.5) * zoom, y: (y + 0.5) * zoom };
}

/** Canvas size for a slice of nx x ny voxels at the given zoom. */
export function canvasSize(nx: number, ny: number, zoom: number): { w: number; h: number } {
  return { w: Math.round(nx * zoom), h: Math.round(ny * zoom) };
}

export const ZOOM_LEVELS = [0.5, 1, 2] as const;
