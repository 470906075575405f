"""Raster helpers: loading, PNG round-trips, hashing.

All pipeline stages pass images around as numpy uint8 arrays, (H, W, 3) for
RGB and (H, W) for alpha/masks. PIL is used only at the edges (decode,
encode, resize).
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidImage

MIN_IMAGE_SIDE = 64


def load_rgb(path: str | Path, min_side: int = 0) -> np.ndarray:
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise InvalidImage(f"cannot decode image {path}: {exc}") from exc
    if min_side and min(arr.shape[0], arr.shape[1]) < min_side:
        raise InvalidImage(
            f"image {path} is {arr.shape[1]}x{arr.shape[0]}, below minimum side {min_side}"
        )
    return arr


def to_png_bytes(arr: np.ndarray) -> bytes:
    if arr.dtype != np.uint8:
        raise ValueError("expected uint8 array")
    mode = "L" if arr.ndim == 2 else "RGB" if arr.shape[2] == 3 else "RGBA"
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def from_png_bytes(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        if im.mode in ("L", "1"):
            return np.asarray(im.convert("L"))
        if im.mode == "RGBA":
            return np.asarray(im)
        return np.asarray(im.convert("RGB"))


def mask_to_png_bytes(mask: np.ndarray) -> bytes:
    return to_png_bytes((mask.astype(np.uint8)) * 255)


def mask_from_png_bytes(data: bytes) -> np.ndarray:
    arr = from_png_bytes(data)
    if arr.ndim == 3:
        arr = arr[..., 0]
    return arr > 127


def image_digest(arr: np.ndarray) -> str:
    """Content hash of the raw pixel data (not the PNG container)."""
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()
