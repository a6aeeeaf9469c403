import type { RleMask } from "./types.js";

/** Decode a row-major run-length mask into a flat label array. */
export function decodeRle(mask: RleMask): Int32Array {
  const total = mask.height * mask.width;
  const out = new Int32Array(total);
  let pos = 0;
  for (const [value, count] of mask.runs) {
    if (count < 1) throw new Error(`invalid run length ${count}`);
    out.fill(value, pos, pos + count);
    pos += count;
  }
  if (pos !== total) {
    throw new Error(`RLE covers ${pos} pixels, mask has ${total}`);
  }
  return out;
}
