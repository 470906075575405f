/** Shared wire types mirroring the orchestrator API's JSON schemas. */

export type RoomType = "living_room" | "bedroom" | "kitchen" | "bathroom";

export interface BatchSpec {
  room_type: RoomType;
  style: string;
  category_a: string;
  category_b: string;
  count: number;
  seed: number;
  ablations: string[];
  threshold_deg: number;
  control_strength: number;
}

export interface CategoryInfo {
  name: string;
  samples: string[];
}

export interface LayoutBox {
  label: string;
  width_px: number;
  height_px: number;
  left_px: number;
  top_px: number;
  layer: number;
}

export interface GenerationStatus {
  state: "ok" | "failed";
  stage: string;
  reason: string;
}

export interface GenerationRecord {
  id: string;
  batch_id: string;
  index: number;
  parent_id: string | null;
  status: GenerationStatus;
  categories: [string, string];
  brief: {
    desc_a: string;
    desc_b: string;
    layout_prompt: string;
    photo_description: string;
    theme: string;
    room_type: RoomType;
  } | null;
  layout: { boxes: LayoutBox[]; canvas_px: number; floor_line_px: number } | null;
  prompts: { layout_user?: string; background?: string; negative?: string };
  control_strength: number;
  remove_white_bg: boolean;
  artifacts: { canvas?: string; alpha?: string; mask?: string; ad?: string };
}

export interface BatchState {
  batch_id: string;
  status: "queued" | "running" | "done";
  record_ids: string[];
  error: string;
  spec?: BatchSpec;
}

export interface GalleryGroup {
  categories: [string, string];
  generation_ids: string[];
}

/** Per-generation edits staged in the editor before a regenerate call. */
export interface DraftOverrides {
  layout_boxes?: LayoutBox[];
  layout_prompt?: string;
  background_prompt?: string;
  control_strength_percent?: number;
  remove_white_bg?: boolean;
}

export interface RegeneratePayload {
  layout_spec?: { boxes: LayoutBox[] };
  layout_prompt?: string;
  background_prompt?: string;
  control_strength?: number;
  remove_white_bg?: boolean;
  seed?: number;
}
