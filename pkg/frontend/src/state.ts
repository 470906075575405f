/** Studio session state and its pure update helpers. */

import type { DraftOverrides, LayoutBox, RegeneratePayload, RoomType } from "./types";

export interface StudioState {
  room: RoomType;
  style: string;
  categoryA: string;
  categoryB: string;
  count: number;
  seed: number;
  activeBatchId: string | null;
  batchStatus: "idle" | "queued" | "running" | "done";
  galleryPage: number;
  selectedGenerationId: string | null;
  draft: DraftOverrides;
  banner: string | null;
}

export function initialState(): StudioState {
  return {
    room: "living_room",
    style: "Modern",
    categoryA: "",
    categoryB: "",
    count: 8,
    seed: 0,
    activeBatchId: null,
    batchStatus: "idle",
    galleryPage: 0,
    selectedGenerationId: null,
    draft: {},
    banner: null,
  };
}

/** Slider percent (0..100, 1% granularity) <-> control strength (0..1). */
export function percentToStrength(percent: number): number {
  const clamped = Math.min(100, Math.max(0, Math.round(percent)));
  return clamped / 100;
}

export function strengthToPercent(strength: number): number {
  return Math.min(100, Math.max(0, Math.round(strength * 100)));
}

/** Selecting another generation always discards staged edits. */
export function selectGeneration(state: StudioState, generationId: string | null): StudioState {
  if (generationId === state.selectedGenerationId) {
    return state;
  }
  return { ...state, selectedGenerationId: generationId, draft: {} };
}

export function setDraft(state: StudioState, patch: DraftOverrides): StudioState {
  const draft = { ...state.draft, ...patch };
  if (draft.control_strength_percent !== undefined) {
    draft.control_strength_percent = Math.min(
      100,
      Math.max(0, Math.round(draft.control_strength_percent)),
    );
  }
  return { ...state, draft };
}

export function updateDraftBox(
  state: StudioState,
  boxes: LayoutBox[],
  boxIndex: number,
  patch: Partial<LayoutBox>,
): StudioState {
  const current = state.draft.layout_boxes ?? boxes.map((b) => ({ ...b }));
  const next = current.map((box, i) => (i === boxIndex ? { ...box, ...patch } : box));
  return setDraft(state, { layout_boxes: next });
}

/** Staged edits -> the regenerate-override payload the API expects. */
export function draftToPayload(draft: DraftOverrides): RegeneratePayload {
  const payload: RegeneratePayload = {};
  if (draft.layout_boxes !== undefined) {
    payload.layout_spec = { boxes: draft.layout_boxes };
  }
  if (draft.layout_prompt !== undefined) {
    payload.layout_prompt = draft.layout_prompt;
  }
  if (draft.background_prompt !== undefined) {
    payload.background_prompt = draft.background_prompt;
  }
  if (draft.control_strength_percent !== undefined) {
    payload.control_strength = percentToStrength(draft.control_strength_percent);
  }
  if (draft.remove_white_bg !== undefined) {
    payload.remove_white_bg = draft.remove_white_bg;
  }
  return payload;
}

export function hasEdits(draft: DraftOverrides): boolean {
  return Object.keys(draft).length > 0;
}
