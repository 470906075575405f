"""Room- and viewpoint-filtered product pair sampling."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from ..catalog import Catalog
from ..errors import NoCompatiblePairs, TooFewFloorPixels, DegenerateGeometry, InvalidImage
from ..rooms import RoomType
from .geometry import RansacParams, TiltCache, TiltEstimate, estimate_product_tilt, viewpoint_compatible
from .profiles import ProductProfile

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD_DEG = 15.0


@dataclass
class PairCandidate:
    item_a: str  # lexically smaller id
    item_b: str
    angle_diff_deg: float
    compatible: bool
    room_type: RoomType

    def key(self) -> tuple[str, str]:
        return (self.item_a, self.item_b)

    def to_dict(self) -> dict:
        return {
            "item_a": self.item_a,
            "item_b": self.item_b,
            "angle_diff_deg": self.angle_diff_deg,
            "compatible": self.compatible,
            "room_type": self.room_type.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PairCandidate":
        return cls(
            item_a=data["item_a"],
            item_b=data["item_b"],
            angle_diff_deg=float(data["angle_diff_deg"]),
            compatible=bool(data["compatible"]),
            room_type=RoomType(data["room_type"]),
        )


@dataclass
class PairReject:
    item_a: str
    item_b: str
    reason: str  # room_mismatch | tilt_unavailable | viewpoint
    detail: str = ""


@dataclass
class PairingResult:
    pairs: list[PairCandidate] = field(default_factory=list)
    rejects: list[PairReject] = field(default_factory=list)


def pair_candidates(
    catalog: Catalog,
    profiles: dict[str, ProductProfile],
    gateway,
    room_type: RoomType,
    category_a: str,
    category_b: str,
    threshold_deg: float = DEFAULT_THRESHOLD_DEG,
    count: Optional[int] = None,
    seed: int = 0,
    tilt_cache: Optional[TiltCache] = None,
    ransac: Optional[RansacParams] = None,
) -> PairingResult:
    """Sample cross-category pairs that satisfy the same-room check and the
    viewpoint compatibility filter.

    Returns up to `count` compatible pairs (all of them when count is None)
    plus a report of every rejected candidate with its reason. Tilt is
    computed once per product and cached.
    """
    items_a = [i for i in catalog.category_items(category_a) if i in profiles]
    items_b = [i for i in catalog.category_items(category_b) if i in profiles]
    in_room_a = [i for i in items_a if profiles[i].room_type == room_type]
    in_room_b = [i for i in items_b if profiles[i].room_type == room_type]
    if not in_room_a or not in_room_b:
        empty = category_a if not in_room_a else category_b
        raise NoCompatiblePairs(
            f"category {empty!r} has no products profiled for {room_type.value}"
        )

    candidates = sorted(
        {(min(a, b), max(a, b)) for a in items_a for b in items_b if a != b}
    )
    random.Random(seed).shuffle(candidates)

    tilt_cache = tilt_cache if tilt_cache is not None else TiltCache()
    tilt_failures: dict[str, str] = {}

    def tilt_of(item_id: str) -> Optional[TiltEstimate]:
        if item_id in tilt_failures:
            return None
        cached = tilt_cache.get(item_id)
        if cached is not None:
            return cached
        try:
            estimate = estimate_product_tilt(
                gateway, catalog.load_main_image(item_id), ransac=ransac
            )
        except (TooFewFloorPixels, DegenerateGeometry, InvalidImage) as exc:
            tilt_failures[item_id] = f"{type(exc).__name__}: {exc}"
            return None
        tilt_cache.put(item_id, estimate)
        return estimate

    result = PairingResult()
    for a, b in candidates:
        if count is not None and len(result.pairs) >= count:
            break
        if profiles[a].room_type != room_type or profiles[b].room_type != room_type:
            result.rejects.append(
                PairReject(
                    a,
                    b,
                    "room_mismatch",
                    f"{profiles[a].room_type.value} / {profiles[b].room_type.value}, "
                    f"requested {room_type.value}",
                )
            )
            continue
        tilt_a, tilt_b = tilt_of(a), tilt_of(b)
        if tilt_a is None or tilt_b is None:
            failed = a if tilt_a is None else b
            result.rejects.append(
                PairReject(a, b, "tilt_unavailable", tilt_failures.get(failed, failed))
            )
            continue
        compatible, angle = viewpoint_compatible(tilt_a, tilt_b, threshold_deg)
        if not compatible:
            result.rejects.append(
                PairReject(a, b, "viewpoint", f"angle diff {angle:.2f} deg > {threshold_deg} deg")
            )
            continue
        result.pairs.append(
            PairCandidate(
                item_a=a,
                item_b=b,
                angle_diff_deg=angle,
                compatible=True,
                room_type=room_type,
            )
        )

    if not result.pairs:
        raise NoCompatiblePairs(
            f"all {len(candidates)} candidate pairs for "
            f"({category_a}, {category_b}) in {room_type.value} were rejected",
            rejects=result.rejects,
        )
    logger.info(
        "pairing %s x %s: %d compatible, %d rejected",
        category_a,
        category_b,
        len(result.pairs),
        len(result.rejects),
    )
    return result
