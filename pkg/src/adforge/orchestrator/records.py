"""Batch specs and generation provenance records."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from ..background import PreservationReport
from ..errors import InvalidSpec
from ..layout import LayoutSpec, SceneBrief
from ..pairing import PairCandidate
from ..rooms import RoomType

ABLATIONS = ("A1", "A2", "A3", "A4")
DEFAULT_STYLES = ["Modern", "Coastal", "Bohemian", "Festive"]


def canonical_hash(payload) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()


def derive_seed(*parts) -> int:
    """Stable 63-bit sub-seed from arbitrary string/int parts."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big") >> 1


@dataclass
class BatchSpec:
    room_type: RoomType
    style: str
    category_a: str
    category_b: str
    count: int
    seed: int = 0
    ablations: frozenset[str] = frozenset()
    threshold_deg: float = 15.0
    control_strength: float = 0.2

    def validate(self) -> None:
        if self.count < 1:
            raise InvalidSpec("count must be >= 1")
        bad = set(self.ablations) - set(ABLATIONS)
        if bad:
            raise InvalidSpec(f"unknown ablations {sorted(bad)}; valid: {ABLATIONS}")
        if not self.style:
            raise InvalidSpec("style must be non-empty")
        if not 0.0 <= self.control_strength <= 1.0:
            raise InvalidSpec("control_strength must be within [0, 1]")

    def has(self, ablation: str) -> bool:
        return ablation in self.ablations

    def batch_id(self) -> str:
        return canonical_hash(self.to_dict())[:16]

    def to_dict(self) -> dict:
        return {
            "room_type": self.room_type.value,
            "style": self.style,
            "category_a": self.category_a,
            "category_b": self.category_b,
            "count": self.count,
            "seed": self.seed,
            "ablations": sorted(self.ablations),
            "threshold_deg": self.threshold_deg,
            "control_strength": self.control_strength,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BatchSpec":
        try:
            room = RoomType(str(data["room_type"]))
        except (KeyError, ValueError):
            raise InvalidSpec(f"invalid room_type {data.get('room_type')!r}") from None
        missing = [k for k in ("style", "category_a", "category_b", "count") if k not in data]
        if missing:
            raise InvalidSpec(f"missing batch spec fields: {missing}")
        spec = cls(
            room_type=room,
            style=str(data["style"]),
            category_a=str(data["category_a"]),
            category_b=str(data["category_b"]),
            count=int(data["count"]),
            seed=int(data.get("seed", 0)),
            ablations=frozenset(data.get("ablations", [])),
            threshold_deg=float(data.get("threshold_deg", 15.0)),
            control_strength=float(data.get("control_strength", 0.2)),
        )
        spec.validate()
        return spec


@dataclass
class GenerationStatus:
    state: str  # "ok" | "failed"
    stage: str = ""
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.state == "ok"

    def to_dict(self) -> dict:
        return {"state": self.state, "stage": self.stage, "reason": self.reason}

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationStatus":
        return cls(
            state=data.get("state", "failed"),
            stage=data.get("stage", ""),
            reason=data.get("reason", ""),
        )


@dataclass
class GenerationRecord:
    """Full provenance of one ad generation."""

    id: str
    batch_id: str
    index: int
    pair: PairCandidate
    categories: tuple[str, str]
    status: GenerationStatus
    parent_id: Optional[str] = None
    brief: Optional[SceneBrief] = None
    layout: Optional[LayoutSpec] = None
    layout_raw: str = ""
    layout_attempts: int = 0
    validation: dict = field(default_factory=dict)
    prompts: dict = field(default_factory=dict)  # layout_user, background, negative
    seeds: dict = field(default_factory=dict)  # generation, inpaint
    control_strength: float = 0.2
    remove_white_bg: bool = True
    ablations: list[str] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)  # canvas, alpha, mask, ad -> store hash
    preservation: Optional[PreservationReport] = None
    scalar_scores: dict = field(default_factory=dict)
    scorer_errors: dict = field(default_factory=dict)
    created_at: str = ""

    def __post_init__(self):
        if not self.created_at:
            self.created_at = datetime.now(timezone.utc).isoformat()

    def category_pair(self) -> tuple[str, str]:
        return tuple(sorted(self.categories))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "batch_id": self.batch_id,
            "index": self.index,
            "parent_id": self.parent_id,
            "pair": self.pair.to_dict(),
            "categories": list(self.categories),
            "status": self.status.to_dict(),
            "brief": self.brief.to_dict() if self.brief else None,
            "layout": self.layout.to_dict() if self.layout else None,
            "layout_raw": self.layout_raw,
            "layout_attempts": self.layout_attempts,
            "validation": self.validation,
            "prompts": self.prompts,
            "seeds": self.seeds,
            "control_strength": self.control_strength,
            "remove_white_bg": self.remove_white_bg,
            "ablations": self.ablations,
            "artifacts": self.artifacts,
            "preservation": self.preservation.to_dict() if self.preservation else None,
            "scalar_scores": self.scalar_scores,
            "scorer_errors": self.scorer_errors,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationRecord":
        preservation = None
        if data.get("preservation"):
            preservation = PreservationReport(
                changed_fraction=float(data["preservation"]["changed_fraction"]),
                max_channel_delta=int(data["preservation"]["max_channel_delta"]),
            )
        return cls(
            id=data["id"],
            batch_id=data["batch_id"],
            index=int(data["index"]),
            parent_id=data.get("parent_id"),
            pair=PairCandidate.from_dict(data["pair"]),
            categories=tuple(data["categories"]),
            status=GenerationStatus.from_dict(data["status"]),
            brief=SceneBrief.from_dict(data["brief"]) if data.get("brief") else None,
            layout=LayoutSpec.from_dict(data["layout"]) if data.get("layout") else None,
            layout_raw=data.get("layout_raw", ""),
            layout_attempts=int(data.get("layout_attempts", 0)),
            validation=data.get("validation", {}),
            prompts=data.get("prompts", {}),
            seeds=data.get("seeds", {}),
            control_strength=float(data.get("control_strength", 0.2)),
            remove_white_bg=bool(data.get("remove_white_bg", True)),
            ablations=list(data.get("ablations", [])),
            artifacts=data.get("artifacts", {}),
            preservation=preservation,
            scalar_scores=data.get("scalar_scores", {}),
            scorer_errors=data.get("scorer_errors", {}),
            created_at=data.get("created_at", ""),
        )


def generation_identity(
    batch_id: str,
    index: int,
    parent_id: Optional[str],
    pair: PairCandidate,
    ablations,
    remove_white_bg: bool,
    brief: Optional[SceneBrief],
    layout: Optional[LayoutSpec],
    prompts: dict,
    seeds: dict,
    control_strength: float,
) -> str:
    """Content hash over every generation input; artifacts and timestamps are
    derived data and stay out of the identity."""
    payload = {
        "batch_id": batch_id,
        "index": index,
        "parent_id": parent_id,
        "pair": pair.to_dict(),
        "ablations": sorted(ablations),
        "remove_white_bg": remove_white_bg,
        "brief": brief.to_dict() if brief else None,
        "layout": layout.to_dict() if layout else None,
        "prompts": prompts,
        "seeds": seeds,
        "control_strength": control_strength,
    }
    return canonical_hash(payload)[:16]
