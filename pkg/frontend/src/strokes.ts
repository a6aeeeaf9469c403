import type { Mark } from "./types.js";

export interface StrokePoint {
  x: number; // column, native frame pixels
  y: number; // row
}

export interface Stroke {
  points: StrokePoint[];
  objectId: number; // 0 = background
}

/**
 * Turn strokes into submission marks: one mark per sampled point, rounded to
 * the pixel grid and clamped to the frame. The point count is preserved so
 * the server sees exactly what the user drew.
 */
export function rasterizeStrokes(
  strokes: Stroke[],
  frameWidth: number,
  frameHeight: number,
): Mark[] {
  const marks: Mark[] = [];
  for (const stroke of strokes) {
    for (const point of stroke.points) {
      const col = Math.min(Math.max(Math.round(point.x), 0), frameWidth - 1);
      const row = Math.min(Math.max(Math.round(point.y), 0), frameHeight - 1);
      marks.push({ row, col, object_id: stroke.objectId });
    }
  }
  return marks;
}

/** Remove pending stroke points within `radius` of any erase point. */
export function erasePoints(
  strokes: Stroke[],
  erasePath: StrokePoint[],
  radius: number,
): Stroke[] {
  const r2 = radius * radius;
  const kept: Stroke[] = [];
  for (const stroke of strokes) {
    const points = stroke.points.filter(
      (p) => !erasePath.some((e) => (p.x - e.x) ** 2 + (p.y - e.y) ** 2 <= r2),
    );
    if (points.length > 0) {
      kept.push({ points, objectId: stroke.objectId });
    }
  }
  return kept;
}
