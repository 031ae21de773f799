/** Pure box/point helpers shared by the guidance logic and the overlay. */

import type { Box, Point } from "./types.js";

export function center(box: Box): Point {
  return [box.x + box.w / 2, box.y + box.h / 2];
}

/** Euclidean distance between the centers of two boxes, in pixels. */
export function displacementPx(a: Box, b: Box): number {
  const [ax, ay] = center(a);
  const [bx, by] = center(b);
  return Math.hypot(bx - ax, by - ay);
}

/** Fraction of the frame covered by the face box. */
export function areaRatio(box: Box, frameWidth: number, frameHeight: number): number {
  const frameArea = frameWidth * frameHeight;
  if (frameArea <= 0) {
    return 0;
  }
  return (box.w * box.h) / frameArea;
}

export function boxAsTuple(box: Box): [number, number, number, number] {
  return [box.x, box.y, box.w, box.h];
}

/** Point-in-polygon by ray casting; boundary points count as inside. */
export function pointInPolygon(x: number, y: number, polygon: Point[]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i, i += 1) {
    const [xi, yi] = polygon[i];
    const [xj, yj] = polygon[j];
    if (onSegment(x, y, xi, yi, xj, yj)) {
      return true;
    }
    const crosses = yi > y !== yj > y;
    if (crosses && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

function onSegment(
  px: number,
  py: number,
  ax: number,
  ay: number,
  bx: number,
  by: number,
): boolean {
  const cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  if (Math.abs(cross) > 1e-9) {
    return false;
  }
  const dot = (px - ax) * (px - bx) + (py - ay) * (py - by);
  return dot <= 1e-9;
}
