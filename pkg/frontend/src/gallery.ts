/** Right-panel gallery helpers: thumbnails, paging, final-gallery carousels. */

import type { GalleryGroup, GenerationRecord } from "./types";

export interface Thumbnail {
  generationId: string;
  ok: boolean;
  badge: string; // "" for ok records, otherwise "failed(<stage>)"
}

export function thumbnails(records: GenerationRecord[]): Thumbnail[] {
  return records.map((record) => ({
    generationId: record.id,
    ok: record.status.state === "ok",
    badge: record.status.state === "ok" ? "" : `failed(${record.status.stage})`,
  }));
}

export function pageOf<T>(items: T[], page: number, pageSize: number): T[] {
  const start = page * pageSize;
  return items.slice(start, start + pageSize);
}

export function pageCount(total: number, pageSize: number): number {
  return Math.max(1, Math.ceil(total / pageSize));
}

export interface Carousel {
  title: string;
  generationIds: string[];
  position: number;
}

/** One carousel per category pair, mirroring the final-gallery grouping. */
export function carousels(groups: GalleryGroup[]): Carousel[] {
  return groups.map((group) => ({
    title: `${group.categories[0]} + ${group.categories[1]}`,
    generationIds: group.generation_ids,
    position: 0,
  }));
}

export function stepCarousel(carousel: Carousel, delta: number): Carousel {
  const n = carousel.generationIds.length;
  if (n === 0) {
    return carousel;
  }
  return { ...carousel, position: ((carousel.position + delta) % n + n) % n };
}
