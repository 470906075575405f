"""The four household room types every product is profiled into."""

from __future__ import annotations

from enum import Enum


class RoomType(str, Enum):
    living_room = "living_room"
    bedroom = "bedroom"
    kitchen = "kitchen"
    bathroom = "bathroom"


VALID_ROOM_NAMES = [r.value for r in RoomType]


def parse_room_type(text: str) -> RoomType:
    """Normalize free text ("Living room", "living_room") to a RoomType.

    Raises ValueError listing the four valid values on anything else.
    """
    normalized = text.strip().lower().replace(" ", "_").replace("-", "_")
    for room in RoomType:
        if normalized == room.value:
            return room
    # model answers sometimes come back as a sentence; accept an embedded match
    flat = text.strip().lower()
    for room in RoomType:
        if room.value.replace("_", " ") in flat or room.value in flat:
            return room
    raise ValueError(
        f"unknown room type {text!r}; valid values: {', '.join(VALID_ROOM_NAMES)}"
    )
