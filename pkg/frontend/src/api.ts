/** Typed client for the orchestrator HTTP API. Every studio mutation goes
 * through exactly one of these documented endpoints. */

import type {
  BatchSpec,
  BatchState,
  CategoryInfo,
  GalleryGroup,
  GenerationRecord,
  RegeneratePayload,
  RoomType,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`API ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = body.detail ?? detail;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class StudioApi {
  constructor(private base: string = "") {}

  rooms(): Promise<{ rooms: RoomType[] }> {
    return request(`${this.base}/rooms`);
  }

  styles(): Promise<{ styles: string[] }> {
    return request(`${this.base}/styles`);
  }

  roomCategories(room: RoomType): Promise<{ categories: CategoryInfo[] }> {
    return request(`${this.base}/rooms/${room}/categories`);
  }

  createBatch(spec: BatchSpec): Promise<{ batch_id: string; status: string }> {
    return request(`${this.base}/batches`, { method: "POST", body: JSON.stringify(spec) });
  }

  runBatch(batchId: string): Promise<{ batch_id: string; status: string; record_ids: string[] }> {
    return request(`${this.base}/batches/${batchId}/run`, { method: "POST" });
  }

  batchStatus(batchId: string): Promise<BatchState> {
    return request(`${this.base}/batches/${batchId}`);
  }

  generation(id: string): Promise<GenerationRecord> {
    return request(`${this.base}/generations/${id}`);
  }

  generationImageUrl(id: string): string {
    return `${this.base}/generations/${id}/image`;
  }

  generationCanvasUrl(id: string): string {
    return `${this.base}/generations/${id}/canvas`;
  }

  regenerate(id: string, payload: RegeneratePayload): Promise<GenerationRecord> {
    return request(`${this.base}/generations/${id}/regenerate`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  finalGallery(room: RoomType): Promise<{ groups: GalleryGroup[] }> {
    return request(`${this.base}/rooms/${room}/final-gallery`);
  }

  addToCollection(name: string, ids: string[]): Promise<{ name: string; entries: string[] }> {
    return request(`${this.base}/collections/${encodeURIComponent(name)}/entries`, {
      method: "POST",
      body: JSON.stringify({ ids }),
    });
  }

  addBatchToCollection(name: string, batchId: string): Promise<{ name: string; entries: string[] }> {
    return request(`${this.base}/collections/${encodeURIComponent(name)}/entries`, {
      method: "POST",
      body: JSON.stringify({ batch_id: batchId }),
    });
  }

  collection(name: string): Promise<{ name: string; entries: string[] }> {
    return request(`${this.base}/collections/${encodeURIComponent(name)}`);
  }
}
