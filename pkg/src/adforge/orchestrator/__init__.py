"""Batch orchestration: provenance records, disk stores, the generation
pipeline, the studio service, and its HTTP API."""

from .api import create_app
from .pipeline import (
    PipelineContext,
    PipelineSettings,
    a3_layout,
    plan_pairs,
    product_label,
    rebuild_record,
    run_batch_generations,
    run_generation,
)
from .records import (
    ABLATIONS,
    BatchSpec,
    DEFAULT_STYLES,
    GenerationRecord,
    GenerationStatus,
    canonical_hash,
    derive_seed,
    generation_identity,
)
from .service import ServiceConfig, StudioService
from .store import ArtifactStore, BatchStore, CollectionStore, RecordLog

__all__ = [
    "ABLATIONS",
    "ArtifactStore",
    "BatchSpec",
    "BatchStore",
    "CollectionStore",
    "DEFAULT_STYLES",
    "GenerationRecord",
    "GenerationStatus",
    "PipelineContext",
    "PipelineSettings",
    "RecordLog",
    "ServiceConfig",
    "StudioService",
    "a3_layout",
    "canonical_hash",
    "create_app",
    "derive_seed",
    "generation_identity",
    "plan_pairs",
    "product_label",
    "rebuild_record",
    "run_batch_generations",
    "run_generation",
]
