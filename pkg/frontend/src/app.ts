/** Three-panel studio shell: batch configuration on the left, category
 * selection and the per-generation editor in the center, gallery on the
 * right. Pure logic lives in the sibling modules; this file only wires DOM. */

import { StudioApi, ApiError } from "./api";
import { canGenerate, toBatchSpec } from "./batchForm";
import { carousels, pageOf, thumbnails } from "./gallery";
import {
  CANVAS_PX,
  FLOOR_LINE_PX,
  boundsViolation,
  drawOrder,
  placementRect,
  scaledRect,
} from "./layoutPreview";
import {
  draftToPayload,
  hasEdits,
  initialState,
  selectGeneration,
  setDraft,
  updateDraftBox,
  type StudioState,
} from "./state";
import type { GenerationRecord, LayoutBox, RoomType } from "./types";

const PAGE_SIZE = 12;
const POLL_INTERVAL_MS = 2000;
const PREVIEW_PX = 512;

const api = new StudioApi("");
let state: StudioState = initialState();
let records: GenerationRecord[] = [];
let selected: GenerationRecord | null = null;
let view: "gallery" | "final" = "gallery";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setState(next: StudioState) {
  state = next;
  render();
}

function banner(message: string | null) {
  setState({ ...state, banner: message });
}

async function guard<T>(work: () => Promise<T>): Promise<T | undefined> {
  try {
    return await work();
  } catch (error) {
    banner(error instanceof ApiError ? error.detail : String(error));
    return undefined;
  }
}

// ---------------------------------------------------------------------------
// left panel

async function refreshRoomDependentInputs() {
  const data = await guard(() => api.roomCategories(state.room));
  const options = (data?.categories ?? []).map((c) => c.name);
  for (const selectId of ["category-a", "category-b"]) {
    const select = el<HTMLSelectElement>(selectId);
    const previous = select.value;
    select.innerHTML = '<option value="">choose…</option>';
    for (const name of options) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
    if (options.includes(previous)) select.value = previous;
  }
}

async function generateBatch() {
  if (!canGenerate(state)) return;
  const spec = toBatchSpec(state);
  const created = await guard(() => api.createBatch(spec));
  if (!created) return;
  setState({ ...state, activeBatchId: created.batch_id, batchStatus: "queued" });
  void guard(() => api.runBatch(created.batch_id));
  pollBatch(created.batch_id);
}

function pollBatch(batchId: string) {
  const tick = async () => {
    if (state.activeBatchId !== batchId) return;
    const status = await guard(() => api.batchStatus(batchId));
    if (!status) return;
    setState({ ...state, batchStatus: status.status === "done" ? "done" : "running" });
    if (status.status === "done") {
      records = [];
      for (const id of status.record_ids) {
        const record = await guard(() => api.generation(id));
        if (record) records.push(record);
      }
      if (status.error) banner(status.error);
      render();
      return;
    }
    setTimeout(tick, POLL_INTERVAL_MS);
  };
  setTimeout(tick, POLL_INTERVAL_MS);
}

// ---------------------------------------------------------------------------
// central panel: editor

function effectiveBoxes(): LayoutBox[] | null {
  if (!selected?.layout) return null;
  return state.draft.layout_boxes ?? selected.layout.boxes;
}

function renderPreview() {
  const canvas = el<HTMLCanvasElement>("layout-preview");
  const ctx = canvas.getContext("2d");
  const boxes = effectiveBoxes();
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const k = PREVIEW_PX / CANVAS_PX;
  ctx.strokeStyle = "#b5b5b5";
  ctx.setLineDash([6, 4]);
  ctx.beginPath();
  ctx.moveTo(0, FLOOR_LINE_PX * k);
  ctx.lineTo(canvas.width, FLOOR_LINE_PX * k);
  ctx.stroke();
  ctx.setLineDash([]);
  if (!boxes) return;
  const colors = ["#c33", "#283"];
  // drawOrder is back-to-front: layer 0 paints last and reads as frontmost
  for (const index of drawOrder(boxes)) {
    const box = boxes[index];
    const rect = scaledRect(placementRect(box, box.width_px, box.height_px), PREVIEW_PX);
    ctx.strokeStyle = colors[index % colors.length];
    ctx.lineWidth = 2;
    ctx.strokeRect(box.left_px * k, box.top_px * k, box.width_px * k, box.height_px * k);
    ctx.fillStyle = colors[index % colors.length] + "33";
    ctx.fillRect(rect.x, rect.y, rect.width, rect.height);
    ctx.fillStyle = "#222";
    ctx.font = "11px sans-serif";
    ctx.fillText(box.label, box.left_px * k + 3, box.top_px * k + 12);
  }
  const problems = boxes.map(boundsViolation).filter((v): v is string => v !== null);
  el("layout-errors").textContent = problems.join("; ");
}

function renderEditor() {
  const pane = el("editor");
  pane.style.display = selected ? "block" : "none";
  if (!selected) return;
  el<HTMLImageElement>("detail-image").src = `${api.generationImageUrl(selected.id)}?v=${selected.id}`;
  el<HTMLTextAreaElement>("layout-prompt").value =
    state.draft.layout_prompt ?? selected.brief?.layout_prompt ?? "";
  el<HTMLTextAreaElement>("background-prompt").value =
    state.draft.background_prompt ?? selected.prompts.background ?? "";
  const percent =
    state.draft.control_strength_percent ?? Math.round(selected.control_strength * 100);
  el<HTMLInputElement>("strength-slider").value = String(percent);
  el("strength-value").textContent = `${percent}%`;
  el<HTMLInputElement>("remove-white").checked =
    state.draft.remove_white_bg ?? selected.remove_white_bg;

  const boxes = effectiveBoxes() ?? [];
  const form = el("box-inputs");
  form.innerHTML = "";
  boxes.forEach((box, index) => {
    const row = document.createElement("div");
    row.className = "box-row";
    row.append(`${box.label}: `);
    for (const field of ["left_px", "top_px", "width_px", "height_px"] as const) {
      const input = document.createElement("input");
      input.type = "number";
      input.value = String(box[field]);
      input.title = field;
      input.addEventListener("change", () => {
        setState(updateDraftBox(state, boxes, index, { [field]: Number(input.value) }));
      });
      row.appendChild(input);
    }
    form.appendChild(row);
  });
  renderPreview();
}

async function regenerateCurrent() {
  if (!selected) return;
  const payload = draftToPayload(state.draft);
  const record = await guard(() => api.regenerate(selected!.id, payload));
  if (!record) return;
  records = [record, ...records];
  selected = record;
  setState(selectGeneration({ ...state }, record.id));
}

async function addToCollection(all: boolean) {
  const name = el<HTMLInputElement>("collection-name").value || "default";
  if (all && state.activeBatchId) {
    await guard(() => api.addBatchToCollection(name, state.activeBatchId!));
  } else if (selected) {
    await guard(() => api.addToCollection(name, [selected!.id]));
  }
}

// ---------------------------------------------------------------------------
// right panel

function renderGallery() {
  const grid = el("gallery-grid");
  grid.innerHTML = "";
  const page = pageOf(thumbnails(records), state.galleryPage, PAGE_SIZE);
  for (const thumb of page) {
    const tile = document.createElement("div");
    tile.className = "tile";
    if (thumb.ok) {
      const img = document.createElement("img");
      img.src = api.generationImageUrl(thumb.generationId);
      img.alt = thumb.generationId;
      tile.appendChild(img);
    } else {
      tile.classList.add("failed");
      tile.textContent = `${thumb.badge} ${thumb.generationId}`;
    }
    tile.addEventListener("click", async () => {
      const record = records.find((r) => r.id === thumb.generationId) ?? null;
      selected = record;
      setState(selectGeneration(state, record?.id ?? null));
    });
    grid.appendChild(tile);
  }
}

async function renderFinalGallery() {
  const container = el("final-gallery");
  container.innerHTML = "";
  const data = await guard(() => api.finalGallery(state.room));
  for (const carousel of carousels(data?.groups ?? [])) {
    const section = document.createElement("section");
    const title = document.createElement("h3");
    title.textContent = `${carousel.title} (${carousel.generationIds.length})`;
    section.appendChild(title);
    const strip = document.createElement("div");
    strip.className = "carousel";
    for (const id of carousel.generationIds) {
      const img = document.createElement("img");
      img.src = api.generationImageUrl(id);
      img.alt = id;
      strip.appendChild(img);
    }
    section.appendChild(strip);
    container.appendChild(section);
  }
}

// ---------------------------------------------------------------------------
// top-level render & wiring

function render() {
  el("banner").textContent = state.banner ?? "";
  el("banner").style.display = state.banner ? "block" : "none";
  el("batch-status").textContent =
    state.batchStatus === "idle" ? "" : `batch ${state.activeBatchId ?? ""}: ${state.batchStatus}`;
  el<HTMLButtonElement>("generate").disabled = !canGenerate(state);
  el<HTMLButtonElement>("regenerate").disabled = !selected || !hasEdits(state.draft);
  el("gallery-view").style.display = view === "gallery" ? "block" : "none";
  el("final-view").style.display = view === "final" ? "block" : "none";
  renderGallery();
  renderEditor();
}

export async function boot() {
  const styles = await guard(() => api.styles());
  const styleSelect = el<HTMLSelectElement>("style");
  for (const style of styles?.styles ?? []) {
    const option = document.createElement("option");
    option.value = style;
    option.textContent = style;
    styleSelect.appendChild(option);
  }
  const rooms = await guard(() => api.rooms());
  const roomSelect = el<HTMLSelectElement>("room");
  for (const room of rooms?.rooms ?? []) {
    const option = document.createElement("option");
    option.value = room;
    option.textContent = room.replace("_", " ");
    roomSelect.appendChild(option);
  }

  roomSelect.addEventListener("change", async () => {
    setState({ ...state, room: roomSelect.value as RoomType });
    await refreshRoomDependentInputs();
  });
  styleSelect.addEventListener("change", () => setState({ ...state, style: styleSelect.value }));
  el<HTMLSelectElement>("category-a").addEventListener("change", (e) =>
    setState({ ...state, categoryA: (e.target as HTMLSelectElement).value }),
  );
  el<HTMLSelectElement>("category-b").addEventListener("change", (e) =>
    setState({ ...state, categoryB: (e.target as HTMLSelectElement).value }),
  );
  el<HTMLInputElement>("count").addEventListener("change", (e) =>
    setState({ ...state, count: Number((e.target as HTMLInputElement).value) }),
  );
  el<HTMLButtonElement>("generate").addEventListener("click", () => void generateBatch());
  el<HTMLButtonElement>("regenerate").addEventListener("click", () => void regenerateCurrent());
  el<HTMLButtonElement>("add-collection").addEventListener("click", () => void addToCollection(false));
  el<HTMLButtonElement>("add-all-collection").addEventListener("click", () => void addToCollection(true));
  el<HTMLInputElement>("strength-slider").addEventListener("input", (e) => {
    const percent = Number((e.target as HTMLInputElement).value);
    setState(setDraft(state, { control_strength_percent: percent }));
  });
  el<HTMLTextAreaElement>("layout-prompt").addEventListener("change", (e) =>
    setState(setDraft(state, { layout_prompt: (e.target as HTMLTextAreaElement).value })),
  );
  el<HTMLTextAreaElement>("background-prompt").addEventListener("change", (e) =>
    setState(setDraft(state, { background_prompt: (e.target as HTMLTextAreaElement).value })),
  );
  el<HTMLInputElement>("remove-white").addEventListener("change", (e) =>
    setState(setDraft(state, { remove_white_bg: (e.target as HTMLInputElement).checked })),
  );
  el<HTMLButtonElement>("tab-gallery").addEventListener("click", () => {
    view = "gallery";
    render();
  });
  el<HTMLButtonElement>("tab-final").addEventListener("click", () => {
    view = "final";
    void renderFinalGallery();
    render();
  });
  el("banner").addEventListener("click", () => banner(null));

  await refreshRoomDependentInputs();
  render();
}

if (typeof document !== "undefined" && document.getElementById("studio")) {
  void boot();
}
