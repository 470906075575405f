/** Client-side layout preview geometry.
 *
 * These rules mirror the server's canvas composition pixel-for-pixel at
 * canvas resolution: letterbox fit inside the box (aspect preserved,
 * centered) and the 1024 px bounds rule. Keep in sync with the golden
 * fixture exported by the backend.
 */

import type { LayoutBox } from "./types";

export const CANVAS_PX = 1024;
export const FLOOR_LINE_PX = 768;

/** Python-compatible rounding (half to even), needed for pixel parity. */
export function pyRound(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff > 0.5) return floor + 1;
  if (diff < 0.5) return floor;
  return floor % 2 === 0 ? floor : floor + 1;
}

export interface PlacementRect {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** Letterbox-fit target rect of a cutout inside its layout box. */
export function placementRect(box: LayoutBox, cutoutW: number, cutoutH: number): PlacementRect {
  const scale = Math.min(box.width_px / cutoutW, box.height_px / cutoutH);
  const width = Math.min(box.width_px, Math.max(1, pyRound(cutoutW * scale)));
  const height = Math.min(box.height_px, Math.max(1, pyRound(cutoutH * scale)));
  const x = box.left_px + Math.floor((box.width_px - width) / 2);
  const y = box.top_px + Math.floor((box.height_px - height) / 2);
  return { x, y, width, height };
}

/** Same bounds rule the server's layout validator applies. */
export function boundsViolation(box: LayoutBox): string | null {
  if (box.width_px < 1 || box.height_px < 1) {
    return "width and height must be at least 1px";
  }
  if (box.left_px < 0 || box.top_px < 0) {
    return "left and top must not be negative";
  }
  if (box.left_px + box.width_px > CANVAS_PX) {
    return `left + width = ${box.left_px + box.width_px}px exceeds ${CANVAS_PX}px`;
  }
  if (box.top_px + box.height_px > CANVAS_PX) {
    return `top + height = ${box.top_px + box.height_px}px exceeds ${CANVAS_PX}px`;
  }
  return null;
}

/** Draw order: descending layer then index, so layer 0 lands on top. */
export function drawOrder(boxes: LayoutBox[]): number[] {
  return boxes
    .map((box, index) => ({ box, index }))
    .sort((a, b) => b.box.layer - a.box.layer || a.index - b.index)
    .map((entry) => entry.index);
}

/** Preview geometry at a display scale (e.g. a 512 px wide preview pane). */
export function scaledRect(rect: PlacementRect, displayPx: number): PlacementRect {
  const k = displayPx / CANVAS_PX;
  return {
    x: rect.x * k,
    y: rect.y * k,
    width: rect.width * k,
    height: rect.height * k,
  };
}
