"""Catalog ingestion: normalize noisy marketplace product records, index
images and category nodes, and answer category/product queries."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import UnknownCategory
from .imaging import MIN_IMAGE_SIDE, load_rgb
from .rooms import RoomType, VALID_ROOM_NAMES

logger = logging.getLogger(__name__)

DEFAULT_LOCALE_PREFERENCE = ["en_US", "en_IN", "en_*"]
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".webp", ".bmp")


@dataclass
class ProductRecord:
    item_id: str
    title: str
    titles: list[tuple[str, str]] = field(default_factory=list)
    bullet_points: list[tuple[str, str]] = field(default_factory=list)
    keywords: list[tuple[str, str]] = field(default_factory=list)
    product_type: str = ""
    node_paths: list[str] = field(default_factory=list)
    main_image_id: str = ""
    other_image_ids: list[str] = field(default_factory=list)
    item_weight: Optional[tuple[float, str]] = None
    raw: dict = field(default_factory=dict)

    def categories(self) -> list[str]:
        """Normalized category names: last node-path segment of each node,
        falling back to the product type."""
        names = []
        for path in self.node_paths:
            segment = path.rstrip("/").rsplit("/", 1)[-1]
            name = normalize_category(segment)
            if name and name not in names:
                names.append(name)
        if not names and self.product_type:
            names.append(normalize_category(self.product_type))
        return names

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "title": self.title,
            "titles": [list(t) for t in self.titles],
            "bullet_points": [list(t) for t in self.bullet_points],
            "keywords": [list(t) for t in self.keywords],
            "product_type": self.product_type,
            "node_paths": self.node_paths,
            "main_image_id": self.main_image_id,
            "other_image_ids": self.other_image_ids,
            "item_weight": list(self.item_weight) if self.item_weight else None,
            "raw": self.raw,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProductRecord":
        return cls(
            item_id=data["item_id"],
            title=data["title"],
            titles=[tuple(t) for t in data.get("titles", [])],
            bullet_points=[tuple(t) for t in data.get("bullet_points", [])],
            keywords=[tuple(t) for t in data.get("keywords", [])],
            product_type=data.get("product_type", ""),
            node_paths=list(data.get("node_paths", [])),
            main_image_id=data.get("main_image_id", ""),
            other_image_ids=list(data.get("other_image_ids", [])),
            item_weight=tuple(data["item_weight"]) if data.get("item_weight") else None,
            raw=data.get("raw", {}),
        )


@dataclass
class ProductImages:
    main: str
    others: list[str] = field(default_factory=list)


@dataclass
class Catalog:
    records: dict[str, ProductRecord] = field(default_factory=dict)
    category_index: dict[str, list[str]] = field(default_factory=dict)
    image_index: dict[str, str] = field(default_factory=dict)
    skip_diagnostics: list[str] = field(default_factory=list)

    def category_items(self, name: str) -> list[str]:
        key = normalize_category(name)
        if key not in self.category_index:
            raise UnknownCategory(f"category {name!r} not found in catalog")
        return self.category_index[key]

    def has_category(self, name: str) -> bool:
        return normalize_category(name) in self.category_index

    def product_images(self, item_id: str) -> ProductImages:
        record = self.records[item_id]
        main = self.image_index.get(record.main_image_id, "")
        others = [self.image_index[i] for i in record.other_image_ids if i in self.image_index]
        return ProductImages(main=main, others=others)

    def load_main_image(self, item_id: str):
        return load_rgb(self.product_images(item_id).main, min_side=MIN_IMAGE_SIDE)

    def save(self, path: str | Path) -> None:
        """One JSON-lines file of records plus a sidecar image index."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as f:
            for item_id in self.records:
                f.write(json.dumps(self.records[item_id].to_dict(), sort_keys=True))
                f.write("\n")
        sidecar = {
            "image_index": dict(sorted(self.image_index.items())),
            "skip_diagnostics": self.skip_diagnostics,
        }
        sidecar_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True), "utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Catalog":
        path = Path(path)
        catalog = cls()
        with path.open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    record = ProductRecord.from_dict(json.loads(line))
                    catalog.records[record.item_id] = record
        side = sidecar_path(path)
        if side.exists():
            data = json.loads(side.read_text("utf-8"))
            catalog.image_index = data.get("image_index", {})
            catalog.skip_diagnostics = data.get("skip_diagnostics", [])
        catalog._rebuild_category_index()
        return catalog

    def _rebuild_category_index(self) -> None:
        index: dict[str, list[str]] = {}
        for item_id, record in self.records.items():
            for name in record.categories():
                index.setdefault(name, []).append(item_id)
        self.category_index = {name: sorted(ids) for name, ids in sorted(index.items())}


def sidecar_path(records_path: Path) -> Path:
    return records_path.with_name(records_path.name + ".images.json")


def normalize_category(name: str) -> str:
    return name.strip().casefold()


def select_text(entries: list[tuple[str, str]], locale_preference: list[str]) -> str:
    """First entry whose language tag matches the preference order; a trailing
    '*' in a preference matches any tag with that prefix. Falls back to the
    first entry."""
    for pref in locale_preference:
        for tag, text in entries:
            if pref.endswith("*"):
                if tag.startswith(pref[:-1]) and text:
                    return text
            elif tag == pref and text:
                return text
    for _, text in entries:
        if text:
            return text
    return ""


def build_image_index(images_dir: str | Path) -> dict[str, str]:
    index: dict[str, str] = {}
    for entry in sorted(Path(images_dir).iterdir()):
        if entry.suffix.lower() in IMAGE_EXTENSIONS:
            index[entry.stem] = str(entry)
    return index


def _tagged_list(value) -> list[tuple[str, str]]:
    out = []
    for entry in value or []:
        if isinstance(entry, dict):
            out.append((str(entry.get("language_tag", "")), str(entry.get("value", ""))))
    return out


def _first_value(value) -> str:
    if isinstance(value, list):
        for entry in value:
            if isinstance(entry, dict) and entry.get("value"):
                return str(entry["value"])
        return ""
    return str(value or "")


def ingest_catalog(
    record_stream: Iterable,
    locale_preference: Optional[list[str]] = None,
    image_index: Optional[dict[str, str]] = None,
) -> Catalog:
    """Build a Catalog from raw marketplace JSON documents.

    Documents may be JSON strings or already-parsed dicts. Records missing a
    decodable title or a main image id are skipped with a diagnostic; a
    malformed document never aborts the whole ingest. Duplicate item_ids keep
    the first occurrence.
    """
    prefs = locale_preference or DEFAULT_LOCALE_PREFERENCE
    if not prefs:
        raise ValueError("locale_preference must be non-empty")
    catalog = Catalog(image_index=dict(image_index or {}))
    for position, doc in enumerate(record_stream):
        try:
            data = json.loads(doc) if isinstance(doc, (str, bytes)) else doc
            if not isinstance(data, dict):
                raise ValueError("document is not a JSON object")
        except (json.JSONDecodeError, ValueError) as exc:
            catalog.skip_diagnostics.append(f"record {position}: malformed document ({exc})")
            continue

        item_id = str(data.get("item_id") or "")
        if not item_id:
            catalog.skip_diagnostics.append(f"record {position}: missing item_id")
            continue
        if item_id in catalog.records:
            catalog.skip_diagnostics.append(
                f"record {position}: duplicate item_id {item_id} (kept first occurrence)"
            )
            continue

        titles = _tagged_list(data.get("item_name"))
        title = select_text(titles, prefs)
        if not title:
            catalog.skip_diagnostics.append(f"record {position}: {item_id} has no decodable title")
            continue
        main_image_id = str(data.get("main_image_id") or "")
        if not main_image_id:
            catalog.skip_diagnostics.append(f"record {position}: {item_id} has no main_image_id")
            continue
        if image_index is not None and main_image_id not in catalog.image_index:
            catalog.skip_diagnostics.append(
                f"record {position}: {item_id} main image {main_image_id} not in image index"
            )
            continue

        weight = None
        for entry in data.get("item_weight") or []:
            if isinstance(entry, dict) and "value" in entry:
                weight = (float(entry["value"]), str(entry.get("unit", "")))
                break

        catalog.records[item_id] = ProductRecord(
            item_id=item_id,
            title=title,
            titles=titles,
            bullet_points=_tagged_list(data.get("bullet_point")),
            keywords=_tagged_list(data.get("item_keywords")),
            product_type=_first_value(data.get("product_type")),
            node_paths=[
                str(n.get("node_name", ""))
                for n in data.get("node") or []
                if isinstance(n, dict) and n.get("node_name")
            ],
            main_image_id=main_image_id,
            other_image_ids=[str(i) for i in data.get("other_image_id") or []],
            item_weight=weight,
            raw=data,
        )

    catalog._rebuild_category_index()
    if catalog.skip_diagnostics:
        logger.info("ingest skipped %d records", len(catalog.skip_diagnostics))
    return catalog


def list_room_categories(
    catalog: Catalog,
    room_type: RoomType | str,
    profiles: dict,
    sample_k: int = 6,
) -> list[tuple[str, list[str]]]:
    """Categories containing at least one product profiled for `room_type`,
    each with up to `sample_k` sample item ids in sorted order."""
    if not isinstance(room_type, RoomType):
        try:
            room_type = RoomType(room_type)
        except ValueError:
            raise ValueError(
                f"unknown room type {room_type!r}; valid values: {', '.join(VALID_ROOM_NAMES)}"
            ) from None
    out = []
    for name, item_ids in catalog.category_index.items():
        members = sorted(
            i for i in item_ids if i in profiles and profiles[i].room_type == room_type
        )
        if members:
            out.append((name, members[:sample_k]))
    return out
