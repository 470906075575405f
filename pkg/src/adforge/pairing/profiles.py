"""VLM product profiling: short description, dimensions, room type."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .. import prompts
from ..catalog import ProductRecord
from ..errors import ProfileRejected, UnparseableModelOutput
from ..gateway import ChatVisionRequest, parse_json_answer, require_keys
from ..rooms import RoomType, parse_room_type

MAX_DIM_CM = 1000.0
_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")


@dataclass
class ProductProfile:
    item_id: str
    category_match: bool
    short_description: str
    dims_cm: Optional[tuple[float, float, float]]
    room_type: RoomType

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "category_match": self.category_match,
            "short_description": self.short_description,
            "dims_cm": list(self.dims_cm) if self.dims_cm else None,
            "room_type": self.room_type.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProductProfile":
        dims = data.get("dims_cm")
        return cls(
            item_id=data["item_id"],
            category_match=bool(data.get("category_match", True)),
            short_description=data["short_description"],
            dims_cm=tuple(float(v) for v in dims) if dims else None,
            room_type=RoomType(data["room_type"]),
        )


def parse_dims_cm(text: str) -> Optional[tuple[float, float, float]]:
    """Tolerant "L x W x H in cm" extraction; anything unusable is absent."""
    numbers = [float(n) for n in _NUMBER_RE.findall(str(text))]
    if len(numbers) < 3:
        return None
    dims = tuple(numbers[:3])
    if any(not 0.0 < d < MAX_DIM_CM for d in dims):
        return None
    return dims


def truncate_words(text: str, limit: int) -> str:
    words = str(text).split()
    return " ".join(words[:limit])


def profile_product(
    gateway,
    record: ProductRecord,
    image: np.ndarray,
    category: str,
    model_id: str = "default",
) -> ProductProfile:
    """Ask the vision model the four profile questions about one product."""
    if not category:
        raise ValueError("category must be non-empty")
    prompt = prompts.fill(
        prompts.load(prompts.PRODUCT_PROFILE),
        {"title": record.title, "category": category},
    )
    raw = gateway.chat_vision(
        ChatVisionRequest(user_text=prompt, images=[image], model_id=model_id)
    )
    answers = require_keys(parse_json_answer(raw), ["1", "2", "3", "4"], raw)
    verdict = str(answers["1"]).strip().lower()
    if not verdict.startswith("yes"):
        raise ProfileRejected(
            f"{record.item_id}: image does not match category {category!r} "
            f"(model answered {answers['1']!r})"
        )
    try:
        room = parse_room_type(str(answers["4"]))
    except ValueError as exc:
        raise UnparseableModelOutput(str(exc), raw=raw) from exc
    return ProductProfile(
        item_id=record.item_id,
        category_match=True,
        short_description=truncate_words(answers["2"], 3),
        dims_cm=parse_dims_cm(answers["3"]),
        room_type=room,
    )


class ProfileStore:
    """item_id -> ProductProfile map persisted as a JSON sidecar file."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self._profiles: dict[str, ProductProfile] = {}
        if self.path and self.path.exists():
            data = json.loads(self.path.read_text("utf-8"))
            self._profiles = {k: ProductProfile.from_dict(v) for k, v in data.items()}

    def get(self, item_id: str) -> Optional[ProductProfile]:
        return self._profiles.get(item_id)

    def put(self, profile: ProductProfile) -> None:
        self._profiles[profile.item_id] = profile
        self.save()

    def as_dict(self) -> dict[str, ProductProfile]:
        return dict(self._profiles)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._profiles

    def __len__(self) -> int:
        return len(self._profiles)

    def save(self) -> None:
        if not self.path:
            return
        payload = {k: v.to_dict() for k, v in sorted(self._profiles.items())}
        self.path.write_text(json.dumps(payload, indent=2, sort_keys=True), "utf-8")
