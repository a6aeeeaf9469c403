// Pure pixel-buffer renderers: (data, geometry, opacity) -> RGBA. No state,
// no DOM; canvases blit the returned buffers.

const PALETTE: [number, number, number][] = [
  [0, 0, 0], // background: transparent, color unused
  [230, 60, 60],
  [60, 140, 230],
  [60, 200, 120],
  [230, 190, 50],
  [180, 90, 220],
  [240, 130, 40],
];

export function objectColor(objectId: number): [number, number, number] {
  return PALETTE[((objectId - 1) % (PALETTE.length - 1)) + 1];
}

/** Mask labels -> RGBA overlay; background pixels stay fully transparent. */
export function renderMaskOverlay(
  mask: Int32Array,
  width: number,
  height: number,
  opacity: number,
): Uint8ClampedArray<ArrayBuffer> {
  if (mask.length !== width * height) {
    throw new Error(`mask length ${mask.length} != ${width}x${height}`);
  }
  const alpha = Math.round(Math.min(Math.max(opacity, 0), 1) * 255);
  const out = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < mask.length; i++) {
    const label = mask[i];
    if (label <= 0) continue;
    const [r, g, b] = objectColor(label);
    out[i * 4] = r;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = b;
    out[i * 4 + 3] = alpha;
  }
  return out;
}

/**
 * Reliability heat overlay: low values glow red (inspect here), high values
 * fade out. Grid values are nearest-neighbor upscaled to the frame.
 */
export function renderReliabilityHeat(
  values: number[][],
  frameWidth: number,
  frameHeight: number,
  opacity: number,
): Uint8ClampedArray<ArrayBuffer> {
  const gridH = values.length;
  const gridW = values[0]?.length ?? 0;
  if (gridH === 0 || gridW === 0) throw new Error("empty reliability grid");
  const out = new Uint8ClampedArray(frameWidth * frameHeight * 4);
  const maxAlpha = Math.min(Math.max(opacity, 0), 1) * 255;
  for (let y = 0; y < frameHeight; y++) {
    const gy = Math.min(Math.floor((y * gridH) / frameHeight), gridH - 1);
    for (let x = 0; x < frameWidth; x++) {
      const gx = Math.min(Math.floor((x * gridW) / frameWidth), gridW - 1);
      const v = Math.min(Math.max(values[gy][gx], 0), 1);
      const i = (y * frameWidth + x) * 4;
      out[i] = 255;
      out[i + 1] = Math.round(120 * v);
      out[i + 2] = 60;
      out[i + 3] = Math.round((1 - v) * maxAlpha);
    }
  }
  return out;
}
