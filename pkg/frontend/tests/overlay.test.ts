import { describe, expect, it } from "vitest";

import { decodeRle } from "../src/rle.js";
import { objectColor, renderMaskOverlay, renderReliabilityHeat } from "../src/overlay.js";

describe("decodeRle", () => {
  it("expands runs in raster order", () => {
    const mask = decodeRle({ height: 2, width: 3, runs: [[0, 2], [1, 3], [2, 1]] });
    expect([...mask]).toEqual([0, 0, 1, 1, 1, 2]);
  });

  it("rejects coverage mismatches", () => {
    expect(() => decodeRle({ height: 2, width: 2, runs: [[0, 3]] })).toThrow();
  });
});

describe("renderMaskOverlay", () => {
  it("is pure: identical inputs give identical buffers", () => {
    const mask = Int32Array.from([0, 1, 2, 0]);
    const a = renderMaskOverlay(mask, 2, 2, 0.5);
    const b = renderMaskOverlay(mask, 2, 2, 0.5);
    expect([...a]).toEqual([...b]);
  });

  it("matches the pinned buffer for a tiny fixture", () => {
    const mask = Int32Array.from([0, 1]);
    const buffer = renderMaskOverlay(mask, 2, 1, 1.0);
    const [r, g, b] = objectColor(1);
    expect([...buffer]).toEqual([0, 0, 0, 0, r, g, b, 255]);
  });

  it("background stays fully transparent at any opacity", () => {
    const buffer = renderMaskOverlay(Int32Array.from([0, 0]), 2, 1, 0.8);
    expect([...buffer]).toEqual([0, 0, 0, 0, 0, 0, 0, 0]);
  });

  it("scales alpha with opacity", () => {
    const mask = Int32Array.from([1]);
    expect(renderMaskOverlay(mask, 1, 1, 0.5)[3]).toBe(128);
    expect(renderMaskOverlay(mask, 1, 1, 0)[3]).toBe(0);
  });
});

describe("renderReliabilityHeat", () => {
  it("is pure and highlights low-reliability cells", () => {
    const values = [
      [0.0, 1.0],
      [1.0, 1.0],
    ];
    const a = renderReliabilityHeat(values, 4, 4, 1.0);
    const b = renderReliabilityHeat(values, 4, 4, 1.0);
    expect([...a]).toEqual([...b]);
    // top-left cell (value 0) is fully visible, bottom-right invisible
    expect(a[3]).toBe(255);
    expect(a[(4 * 4 - 1) * 4 + 3]).toBe(0);
  });
});
