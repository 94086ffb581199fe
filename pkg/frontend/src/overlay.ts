/**
 * Mask overlay compositing on raw RGBA buffers.
 *
 * Kept free of canvas types: the browser feeds it ImageData contents, tests
 * feed it decoded PNG bytes. Rendering is a translucent fill plus a one-pixel
 * contour so the lesion boundary stays visible over the fill.
 */

export interface RgbaImage {
  width: number;
  height: number;
  data: Uint8ClampedArray;
}

export interface Rgba {
  r: number;
  g: number;
  b: number;
  a: number; // 0..1
}

export const MASK_FILL: Rgba = { r: 255, g: 80, b: 40, a: 0.25 };
export const MASK_CONTOUR: Rgba = { r: 255, g: 220, b: 0, a: 1.0 };

/** Mask PNGs are 0/255 grayscale; anything above half counts as inside. */
export function maskBits(img: RgbaImage): Uint8Array {
  const n = img.width * img.height;
  const bits = new Uint8Array(n);
  for (let i = 0; i < n; i++) {
    bits[i] = img.data[i * 4] > 127 ? 1 : 0;
  }
  return bits;
}

/** On-pixels with an off 4-neighbor (or on the image border): the 1-px rim. */
export function contourBits(bits: Uint8Array, width: number, height: number): Uint8Array {
  const out = new Uint8Array(bits.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const i = y * width + x;
      if (!bits[i]) continue;
      const edge =
        x === 0 || x === width - 1 || y === 0 || y === height - 1 ||
        !bits[i - 1] || !bits[i + 1] || !bits[i - width] || !bits[i + width];
      if (edge) out[i] = 1;
    }
  }
  return out;
}

function blend(dst: Uint8ClampedArray, i: number, c: Rgba): void {
  dst[i] = c.r * c.a + dst[i] * (1 - c.a);
  dst[i + 1] = c.g * c.a + dst[i + 1] * (1 - c.a);
  dst[i + 2] = c.b * c.a + dst[i + 2] * (1 - c.a);
  dst[i + 3] = 255;
}

/**
 * Slice + mask -> composited RGBA. The mask must match the slice's size;
 * interior gets `fill` blended in, the rim gets `contour`.
 */
export function compositeOverlay(
  slice: RgbaImage,
  mask: RgbaImage,
  fill: Rgba = MASK_FILL,
  contour: Rgba = MASK_CONTOUR,
): RgbaImage {
  if (mask.width !== slice.width || mask.height !== slice.height) {
    throw new Error(
      `mask ${mask.width}x${mask.height} does not match slice ${slice.width}x${slice.height}`,
    );
  }
  const bits = maskBits(mask);
  const rim = contourBits(bits, slice.width, slice.height);
  const data = new Uint8ClampedArray(slice.data);
  for (let i = 0; i < bits.length; i++) {
    if (rim[i]) blend(data, i * 4, contour);
    else if (bits[i]) blend(data, i * 4, fill);
  }
  return { width: slice.width, height: slice.height, data };
}

/** Count of inside-pixels; the session test uses it to confirm a non-empty render. */
export function maskArea(mask: RgbaImage): number {
  const bits = maskBits(mask);
  let n = 0;
  for (let i = 0; i < bits.length; i++) n += bits[i];
  return n;
}
