"""Disk persistence: content-addressed artifacts, an append-only record log,
batch state, and named collections."""

from __future__ import annotations

import hashlib
import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import UnknownBatch, UnknownGeneration
from ..imaging import from_png_bytes, mask_from_png_bytes, mask_to_png_bytes, to_png_bytes
from .records import GenerationRecord


class ArtifactStore:
    """hash -> file store. Identical bytes are stored once; writes go through
    a temp file so concurrent writers of the same content stay consistent."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.root / digest[:2] / digest[2:]

    def put_bytes(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self._path(digest)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(f".{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return digest

    def get_bytes(self, digest: str) -> bytes:
        path = self._path(digest)
        if not path.exists():
            raise KeyError(f"artifact {digest} not in store")
        return path.read_bytes()

    def __contains__(self, digest: str) -> bool:
        return self._path(digest).exists()

    def put_image(self, arr: np.ndarray) -> str:
        return self.put_bytes(to_png_bytes(arr))

    def put_mask(self, mask: np.ndarray) -> str:
        return self.put_bytes(mask_to_png_bytes(mask))

    def load_image(self, digest: str) -> np.ndarray:
        return from_png_bytes(self.get_bytes(digest))

    def load_mask(self, digest: str) -> np.ndarray:
        return mask_from_png_bytes(self.get_bytes(digest))


class RecordLog:
    """Append-only JSON-lines log of generation records, deduped by id with
    the first occurrence winning (records are immutable once written)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: dict[str, GenerationRecord] = {}
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    record = GenerationRecord.from_dict(json.loads(line))
                    self._records.setdefault(record.id, record)

    def append(self, record: GenerationRecord) -> None:
        with self._lock:
            if record.id in self._records:
                return
            self._records[record.id] = record
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as f:
                f.write(json.dumps(record.to_dict(), sort_keys=True))
                f.write("\n")

    def get(self, record_id: str) -> GenerationRecord:
        record = self._records.get(record_id)
        if record is None:
            raise UnknownGeneration(f"generation {record_id!r} not found")
        return record

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._records

    def all(self) -> list[GenerationRecord]:
        return list(self._records.values())


class BatchStore:
    """Batch state (spec, status, record ids) in one JSON file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._batches: dict[str, dict] = {}
        if self.path.exists():
            self._batches = json.loads(self.path.read_text("utf-8"))

    def create(self, batch_id: str, spec_dict: dict) -> dict:
        with self._lock:
            existing = self._batches.get(batch_id)
            if existing is not None:
                return existing
            batch = {
                "batch_id": batch_id,
                "spec": spec_dict,
                "status": "queued",
                "record_ids": [],
                "error": "",
            }
            self._batches[batch_id] = batch
            self._save()
            return batch

    def get(self, batch_id: str) -> dict:
        batch = self._batches.get(batch_id)
        if batch is None:
            raise UnknownBatch(f"batch {batch_id!r} not found")
        return batch

    def update(self, batch_id: str, **fields) -> dict:
        with self._lock:
            batch = self.get(batch_id)
            batch.update(fields)
            self._save()
            return batch

    def _save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self._batches, indent=2, sort_keys=True), "utf-8")


class CollectionStore:
    """Named collections of generation ids with set semantics, persisted on
    every mutation through a single-writer lock."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._collections: dict[str, dict] = {}
        if self.path.exists():
            self._collections = json.loads(self.path.read_text("utf-8"))

    def add(self, name: str, generation_ids: list[str]) -> dict:
        with self._lock:
            now = datetime.now(timezone.utc).isoformat()
            collection = self._collections.setdefault(
                name, {"name": name, "entries": [], "created_at": now, "updated_at": now}
            )
            for generation_id in generation_ids:
                if generation_id not in collection["entries"]:
                    collection["entries"].append(generation_id)
            collection["updated_at"] = now
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(
                json.dumps(self._collections, indent=2, sort_keys=True), "utf-8"
            )
            return collection

    def get(self, name: str) -> Optional[dict]:
        return self._collections.get(name)
