import { describe, expect, it } from "vitest";

import {
  draftToPayload,
  hasEdits,
  initialState,
  percentToStrength,
  selectGeneration,
  setDraft,
  strengthToPercent,
  updateDraftBox,
} from "../src/state";
import type { LayoutBox } from "../src/types";

describe("slider mapping", () => {
  it("maps 0% to no structural constraint and 100% to full strength", () => {
    expect(percentToStrength(0)).toBe(0.0);
    expect(percentToStrength(100)).toBe(1.0);
  });

  it("uses 1% granularity and clamps to [0, 100]", () => {
    expect(percentToStrength(20)).toBeCloseTo(0.2, 10);
    expect(percentToStrength(20.4)).toBeCloseTo(0.2, 10);
    expect(percentToStrength(-5)).toBe(0.0);
    expect(percentToStrength(250)).toBe(1.0);
  });

  it("round-trips strengths", () => {
    for (let percent = 0; percent <= 100; percent++) {
      expect(strengthToPercent(percentToStrength(percent))).toBe(percent);
    }
  });
});

describe("draft overrides", () => {
  it("clears drafts when switching generations", () => {
    let state = initialState();
    state = selectGeneration(state, "gen-1");
    state = setDraft(state, { background_prompt: "warmer light" });
    expect(hasEdits(state.draft)).toBe(true);

    state = selectGeneration(state, "gen-2");
    expect(state.selectedGenerationId).toBe("gen-2");
    expect(state.draft).toEqual({});
  });

  it("keeps drafts when re-selecting the same generation", () => {
    let state = selectGeneration(initialState(), "gen-1");
    state = setDraft(state, { layout_prompt: "x" });
    state = selectGeneration(state, "gen-1");
    expect(state.draft).toEqual({ layout_prompt: "x" });
  });

  it("clamps the staged strength percent into [0, 100]", () => {
    let state = setDraft(initialState(), { control_strength_percent: 180 });
    expect(state.draft.control_strength_percent).toBe(100);
    state = setDraft(state, { control_strength_percent: -4 });
    expect(state.draft.control_strength_percent).toBe(0);
  });
});

describe("draftToPayload", () => {
  const boxes: LayoutBox[] = [
    { label: "sofa", width_px: 400, height_px: 300, left_px: 100, top_px: 468, layer: 1 },
    { label: "lamp", width_px: 120, height_px: 360, left_px: 700, top_px: 408, layer: 0 },
  ];

  it("serializes only the staged fields", () => {
    expect(draftToPayload({})).toEqual({});
    expect(draftToPayload({ background_prompt: "beach house" })).toEqual({
      background_prompt: "beach house",
    });
  });

  it("maps percent to control_strength and boxes to layout_spec", () => {
    const payload = draftToPayload({
      control_strength_percent: 35,
      layout_boxes: boxes,
      remove_white_bg: false,
    });
    expect(payload.control_strength).toBeCloseTo(0.35, 10);
    expect(payload.layout_spec).toEqual({ boxes });
    expect(payload.remove_white_bg).toBe(false);
  });

  it("edits a single box without touching the other", () => {
    let state = selectGeneration(initialState(), "g");
    state = updateDraftBox(state, boxes, 1, { left_px: 650 });
    const staged = state.draft.layout_boxes!;
    expect(staged[1].left_px).toBe(650);
    expect(staged[0]).toEqual(boxes[0]);
    expect(boxes[1].left_px).toBe(700); // source list untouched
  });
});
