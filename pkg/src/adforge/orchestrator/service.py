"""Studio service: one object owning the catalog, stores, gateway, pipeline,
and evaluation runner. The HTTP API and the CLI are thin shells over this."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..catalog import Catalog, list_room_categories
from ..errors import InvalidSpec, UnknownGeneration
from ..evaluation import (
    AblationTable,
    EvalDimension,
    EvalScore,
    ScorerRegistry,
    aggregate,
    config_label,
    judge_ad,
)
from ..gateway import GatewayConfig, build_gateway
from ..pairing import ProfileStore, TiltCache
from ..rooms import RoomType
from .pipeline import PipelineContext, PipelineSettings, rebuild_record, run_batch_generations
from .records import BatchSpec, DEFAULT_STYLES, GenerationRecord
from .store import ArtifactStore, BatchStore, CollectionStore, RecordLog

logger = logging.getLogger(__name__)


def _expand_env(value):
    if isinstance(value, str):
        return os.path.expandvars(value)
    if isinstance(value, dict):
        return {k: _expand_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_expand_env(v) for v in value]
    return value


@dataclass
class ServiceConfig:
    data_dir: Path = Path("adforge_data")
    catalog_path: Optional[Path] = None
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    settings: PipelineSettings = field(default_factory=PipelineSettings)
    styles: list[str] = field(default_factory=lambda: list(DEFAULT_STYLES))

    @classmethod
    def from_dict(cls, data: dict) -> "ServiceConfig":
        data = _expand_env(data)
        return cls(
            data_dir=Path(data.get("data_dir", "adforge_data")),
            catalog_path=Path(data["catalog"]) if data.get("catalog") else None,
            gateway=GatewayConfig.from_dict(data.get("backends", {})),
            settings=PipelineSettings.from_dict(data.get("settings", {})),
            styles=list(data.get("styles", DEFAULT_STYLES)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


class StudioService:
    def __init__(self, config: ServiceConfig, catalog: Optional[Catalog] = None):
        self.config = config
        config.data_dir.mkdir(parents=True, exist_ok=True)
        if catalog is not None:
            self.catalog = catalog
        elif config.catalog_path and Path(config.catalog_path).exists():
            self.catalog = Catalog.load(config.catalog_path)
        else:
            self.catalog = Catalog()
        self.gateway = build_gateway(config.gateway)
        self.profiles = ProfileStore(config.data_dir / "profiles.json")
        self.tilts = TiltCache(config.data_dir / "tilts.json")
        self.artifacts = ArtifactStore(config.data_dir / "artifacts")
        self.records = RecordLog(config.data_dir / "records.jsonl")
        self.batches = BatchStore(config.data_dir / "batches.json")
        self.collections = CollectionStore(config.data_dir / "collections.json")
        self.scores_path = config.data_dir / "scores.jsonl"
        self.scorers = ScorerRegistry()

    @property
    def ctx(self) -> PipelineContext:
        return PipelineContext(
            catalog=self.catalog,
            gateway=self.gateway,
            profiles=self.profiles,
            tilts=self.tilts,
            artifacts=self.artifacts,
            settings=self.config.settings,
            scorers=self.scorers,
        )

    # -- profiling ---------------------------------------------------------

    def profile_all(self) -> int:
        """Profile every catalog product against its own category."""
        from .pipeline import ensure_category_profiles

        for category in self.catalog.category_index:
            ensure_category_profiles(self.ctx, category)
        return len(self.profiles)

    def list_categories(self, room_type: RoomType) -> list[tuple[str, list[str]]]:
        return list_room_categories(self.catalog, room_type, self.profiles.as_dict())

    # -- batches -----------------------------------------------------------

    def create_batch(self, spec: BatchSpec) -> str:
        spec.validate()
        if not spec.has("A1"):
            # raises UnknownCategory on a missing category
            self.catalog.category_items(spec.category_a)
            self.catalog.category_items(spec.category_b)
        batch_id = spec.batch_id()
        self.batches.create(batch_id, spec.to_dict())
        return batch_id

    def run_batch(self, batch_id: str) -> list[GenerationRecord]:
        batch = self.batches.get(batch_id)
        if batch["status"] == "done":
            return [self.records.get(rid) for rid in batch["record_ids"]]
        spec = BatchSpec.from_dict(batch["spec"])
        self.batches.update(batch_id, status="running")
        records = run_batch_generations(self.ctx, spec, batch_id)
        for record in records:
            self.records.append(record)
        failed = [r for r in records if not r.status.ok]
        error = ""
        if failed and len(failed) == len(records):
            error = failed[0].status.reason
        self.batches.update(
            batch_id,
            status="done",
            record_ids=[r.id for r in records],
            error=error,
        )
        return records

    def get_batch(self, batch_id: str) -> dict:
        return self.batches.get(batch_id)

    # -- records -----------------------------------------------------------

    def get_record(self, generation_id: str) -> GenerationRecord:
        return self.records.get(generation_id)

    def artifact_bytes(self, generation_id: str, kind: str) -> bytes:
        record = self.records.get(generation_id)
        if kind == "image":
            kind = "ad"
        digest = record.artifacts.get(kind)
        if not digest:
            raise UnknownGeneration(f"generation {generation_id} has no {kind!r} artifact")
        return self.artifacts.get_bytes(digest)

    def regenerate(self, generation_id: str, overrides: dict) -> GenerationRecord:
        base = self.records.get(generation_id)
        record = rebuild_record(self.ctx, base, overrides, as_child=True)
        self.records.append(record)
        return record

    def replay(self, generation_id: str) -> GenerationRecord:
        """Recompute a record's artifacts from its stored inputs (provenance
        check; nothing is persisted)."""
        return rebuild_record(self.ctx, self.records.get(generation_id), {}, as_child=False)

    def final_gallery(self, room_type: RoomType) -> list[tuple[tuple[str, str], list[str]]]:
        ordered = self.records.all()
        groups: dict[tuple[str, str], list[str]] = {}
        for record in reversed(ordered):  # log order: later entries are newer
            if not record.status.ok or record.pair.room_type != room_type:
                continue
            groups.setdefault(record.category_pair(), []).append(record.id)
        return sorted(groups.items())

    # -- collections -------------------------------------------------------

    def collection_add(self, name: str, generation_ids: list[str]) -> dict:
        for generation_id in generation_ids:
            if generation_id not in self.records:
                raise UnknownGeneration(f"generation {generation_id!r} not found")
        return self.collections.add(name, generation_ids)

    def collection_add_all(self, name: str, batch_id: str) -> dict:
        batch = self.batches.get(batch_id)
        return self.collections.add(name, list(batch["record_ids"]))

    def collection_get(self, name: str) -> dict:
        collection = self.collections.get(name)
        if collection is None:
            raise UnknownGeneration(f"collection {name!r} not found")
        return collection

    # -- evaluation --------------------------------------------------------

    def judge_record(
        self,
        generation_id: str,
        dimension: EvalDimension,
        judge_model: str = "default",
        som: bool = False,
    ) -> EvalScore:
        record = self.records.get(generation_id)
        if not record.status.ok:
            raise InvalidSpec(f"cannot judge failed generation {generation_id}")
        ad = self.artifacts.load_image(record.artifacts["ad"])
        product_a = self.catalog.load_main_image(record.pair.item_a)
        product_b = self.catalog.load_main_image(record.pair.item_b)
        boxes = (record.layout.boxes[0], record.layout.boxes[1]) if record.layout else None
        score = judge_ad(
            self.gateway,
            ad,
            product_a,
            product_b,
            record.prompts.get("background", ""),
            dimension,
            judge_model=judge_model,
            som=som,
            boxes=boxes,
            generation_id=generation_id,
        )
        self._append_score(score, config_label(record.ablations))
        return score

    def _append_score(self, score: EvalScore, config: str) -> None:
        with self.scores_path.open("a", encoding="utf-8") as f:
            f.write(json.dumps({**score.to_dict(), "config": config}, sort_keys=True))
            f.write("\n")

    def load_scores(self) -> list[tuple[EvalScore, str]]:
        entries = []
        if self.scores_path.exists():
            with self.scores_path.open("r", encoding="utf-8") as f:
                for line in f:
                    line = line.strip()
                    if line:
                        data = json.loads(line)
                        entries.append((EvalScore.from_dict(data), data.get("config", "Ours")))
        return entries

    def aggregate_table(self, dimension: EvalDimension) -> AblationTable:
        return aggregate(self.load_scores(), dimension)
