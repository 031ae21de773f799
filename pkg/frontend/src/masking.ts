/**
 * Privacy masking as pure pixel-buffer operations.
 *
 * Eye and mouth landmark polygons are filled with opaque strips and the
 * remaining feature groups (nose, eyebrows, face edge) are traced as
 * contour lines. Everything operates on a plain RGBA buffer so the same
 * code path serves the live canvas preview, the uploaded frames, and the
 * unit tests — masking happens before any pixel leaves the device.
 */

import { pointInPolygon } from "./geometry.js";
import type { LandmarkSet, Point, RgbaFrame } from "./types.js";

/** Landmark groups hidden behind opaque fills. */
export const MASKED_REGIONS = ["left_eye", "right_eye", "mouth"] as const;

/** Landmark groups traced as outlines only. */
export const CONTOUR_REGIONS = [
  "nose",
  "left_eyebrow",
  "right_eyebrow",
  "face_edge",
] as const;

export interface Rgba {
  r: number;
  g: number;
  b: number;
  a: number;
}

export const MASK_FILL: Rgba = { r: 0, g: 0, b: 0, a: 255 };
export const CONTOUR_STROKE: Rgba = { r: 255, g: 255, b: 255, a: 255 };

function putPixel(frame: RgbaFrame, x: number, y: number, color: Rgba): void {
  if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) {
    return;
  }
  const offset = 4 * (y * frame.width + x);
  frame.data[offset] = color.r;
  frame.data[offset + 1] = color.g;
  frame.data[offset + 2] = color.b;
  frame.data[offset + 3] = color.a;
}

/**
 * Boundary-inclusive polygon fill: a pixel is painted when its lattice
 * point or its center lies inside the polygon (edges count as inside), so
 * the opaque cover is never smaller than the landmark region. Work is
 * confined to the polygon's bounding box, which for facial features is a
 * small fraction of the frame.
 */
export function fillPolygon(frame: RgbaFrame, polygon: Point[], color: Rgba): void {
  if (polygon.length < 3) {
    return;
  }
  const xs = polygon.map((p) => p[0]);
  const ys = polygon.map((p) => p[1]);
  const xMin = Math.max(0, Math.floor(Math.min(...xs)));
  const xMax = Math.min(frame.width - 1, Math.ceil(Math.max(...xs)));
  const yMin = Math.max(0, Math.floor(Math.min(...ys)));
  const yMax = Math.min(frame.height - 1, Math.ceil(Math.max(...ys)));
  for (let y = yMin; y <= yMax; y += 1) {
    for (let x = xMin; x <= xMax; x += 1) {
      if (
        pointInPolygon(x, y, polygon) ||
        pointInPolygon(x + 0.5, y + 0.5, polygon)
      ) {
        putPixel(frame, x, y, color);
      }
    }
  }
}

/** Bresenham line between two landmark points. */
export function drawLine(frame: RgbaFrame, from: Point, to: Point, color: Rgba): void {
  let x0 = Math.round(from[0]);
  let y0 = Math.round(from[1]);
  const x1 = Math.round(to[0]);
  const y1 = Math.round(to[1]);
  const dx = Math.abs(x1 - x0);
  const dy = -Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1;
  const sy = y0 < y1 ? 1 : -1;
  let err = dx + dy;
  for (;;) {
    putPixel(frame, x0, y0, color);
    if (x0 === x1 && y0 === y1) {
      break;
    }
    const doubled = 2 * err;
    if (doubled >= dy) {
      err += dy;
      x0 += sx;
    }
    if (doubled <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

export function drawPolyline(frame: RgbaFrame, points: Point[], color: Rgba): void {
  for (let i = 0; i + 1 < points.length; i += 1) {
    drawLine(frame, points[i], points[i + 1], color);
  }
}

/**
 * Apply privacy masking in place: opaque fills over eyes and mouth,
 * contour lines over the remaining feature groups.
 */
export function applyMask(frame: RgbaFrame, landmarks: LandmarkSet): void {
  for (const region of MASKED_REGIONS) {
    const polygon = landmarks[region];
    if (polygon && polygon.length >= 3) {
      fillPolygon(frame, polygon, MASK_FILL);
    }
  }
  for (const region of CONTOUR_REGIONS) {
    const points = landmarks[region];
    if (points && points.length >= 2) {
      drawPolyline(frame, points, CONTOUR_STROKE);
    }
  }
}

/** True when the pixel exactly matches a color at full opacity. */
export function pixelMatches(frame: RgbaFrame, x: number, y: number, color: Rgba): boolean {
  const offset = 4 * (y * frame.width + x);
  return (
    frame.data[offset] === color.r &&
    frame.data[offset + 1] === color.g &&
    frame.data[offset + 2] === color.b &&
    frame.data[offset + 3] === color.a
  );
}
