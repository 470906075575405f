import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  CANVAS_PX,
  FLOOR_LINE_PX,
  boundsViolation,
  drawOrder,
  placementRect,
  pyRound,
  scaledRect,
} from "../src/layoutPreview";
import type { LayoutBox } from "../src/types";

const here = dirname(fileURLToPath(import.meta.url));

interface GoldenCase {
  box: LayoutBox;
  cutout: { width: number; height: number };
  expected: { x: number; y: number; width: number; height: number };
}

const golden: GoldenCase[] = JSON.parse(
  readFileSync(join(here, "fixtures", "golden_layouts.json"), "utf-8"),
);

describe("placementRect", () => {
  it("matches the server compose rules on all golden layouts", () => {
    expect(golden.length).toBe(10);
    for (const testCase of golden) {
      const rect = placementRect(testCase.box, testCase.cutout.width, testCase.cutout.height);
      expect(rect).toEqual(testCase.expected);
    }
  });

  it("never stretches the cutout beyond its box", () => {
    const box: LayoutBox = { label: "x", width_px: 100, height_px: 50, left_px: 0, top_px: 0, layer: 0 };
    const rect = placementRect(box, 300, 300);
    expect(rect.width).toBeLessThanOrEqual(100);
    expect(rect.height).toBeLessThanOrEqual(50);
    expect(rect.width).toBe(rect.height); // square cutout stays square
  });

  it("centers the letterboxed rect", () => {
    const box: LayoutBox = { label: "x", width_px: 200, height_px: 100, left_px: 50, top_px: 30, layer: 0 };
    const rect = placementRect(box, 50, 100); // tall cutout in a wide box
    expect(rect.height).toBe(100);
    expect(rect.width).toBe(50);
    expect(rect.x).toBe(50 + Math.floor((200 - 50) / 2));
    expect(rect.y).toBe(30);
  });
});

describe("pyRound", () => {
  it("rounds half to even like the server", () => {
    expect(pyRound(1.5)).toBe(2);
    expect(pyRound(2.5)).toBe(2);
    expect(pyRound(3.5)).toBe(4);
    expect(pyRound(2.4)).toBe(2);
    expect(pyRound(2.6)).toBe(3);
  });
});

describe("boundsViolation", () => {
  const base: LayoutBox = { label: "a", width_px: 100, height_px: 100, left_px: 0, top_px: 668, layer: 0 };

  it("accepts boxes inside the canvas", () => {
    expect(boundsViolation(base)).toBeNull();
    expect(boundsViolation({ ...base, left_px: 924 })).toBeNull();
  });

  it("applies the same 1024px un-exceedable rule as the server validator", () => {
    expect(boundsViolation({ ...base, left_px: 925 })).toContain("left + width");
    expect(boundsViolation({ ...base, top_px: 925 })).toContain("top + height");
    expect(boundsViolation({ ...base, left_px: -1 })).toContain("negative");
    expect(boundsViolation({ ...base, width_px: 0 })).toContain("at least 1px");
  });
});

describe("drawOrder", () => {
  it("puts layer 0 last so it occludes layer 1", () => {
    const boxes: LayoutBox[] = [
      { label: "front", width_px: 10, height_px: 10, left_px: 0, top_px: 0, layer: 0 },
      { label: "back", width_px: 10, height_px: 10, left_px: 5, top_px: 0, layer: 1 },
    ];
    expect(drawOrder(boxes)).toEqual([1, 0]);
  });

  it("breaks layer ties by index", () => {
    const boxes: LayoutBox[] = [
      { label: "a", width_px: 10, height_px: 10, left_px: 0, top_px: 0, layer: 0 },
      { label: "b", width_px: 10, height_px: 10, left_px: 5, top_px: 0, layer: 0 },
    ];
    expect(drawOrder(boxes)).toEqual([0, 1]);
  });
});

describe("constants and scaling", () => {
  it("mirrors the server canvas geometry", () => {
    expect(CANVAS_PX).toBe(1024);
    expect(FLOOR_LINE_PX).toBe(768);
  });

  it("scales placement rects proportionally for the preview pane", () => {
    const rect = { x: 512, y: 256, width: 128, height: 64 };
    expect(scaledRect(rect, 512)).toEqual({ x: 256, y: 128, width: 64, height: 32 });
  });
});
