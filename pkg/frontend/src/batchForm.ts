/** Left-panel batch form: validation and BatchSpec serialization. */

import type { BatchSpec } from "./types";
import type { StudioState } from "./state";

export function canGenerate(state: StudioState): boolean {
  return (
    state.categoryA.trim().length > 0 &&
    state.categoryB.trim().length > 0 &&
    state.count >= 1 &&
    state.style.trim().length > 0
  );
}

export function toBatchSpec(
  state: StudioState,
  options?: { thresholdDeg?: number; controlStrength?: number; ablations?: string[] },
): BatchSpec {
  return {
    room_type: state.room,
    style: state.style,
    category_a: state.categoryA,
    category_b: state.categoryB,
    count: state.count,
    seed: state.seed,
    ablations: options?.ablations ?? [],
    threshold_deg: options?.thresholdDeg ?? 15.0,
    control_strength: options?.controlStrength ?? 0.2,
  };
}
