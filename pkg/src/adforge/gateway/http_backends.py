"""HTTP client implementations of the four model capabilities.

Wire format is JSON bodies with base64-encoded PNG images throughout; the
inpainting endpoint takes the canvas, the mask, and the control list in one
request. Transport failures retry with exponential backoff and surface as
BackendUnavailable once attempts are exhausted.
"""

from __future__ import annotations

import base64
import os
import time

import httpx
import numpy as np

from ..errors import BackendProtocolViolation, BackendUnavailable
from ..imaging import from_png_bytes, mask_to_png_bytes, to_png_bytes
from .types import (
    BackendConfig,
    CANVAS_SIZE,
    ChatVisionRequest,
    DepthMap,
    InpaintRequest,
    SegmentationMask,
)


def resolve_secret(auth: str | None) -> str | None:
    if auth is None:
        return None
    if auth.startswith("env:"):
        name = auth[4:]
        value = os.environ.get(name)
        if value is None:
            raise BackendUnavailable(f"auth env var {name} is not set")
        return value
    return auth


def _b64_png(arr: np.ndarray) -> str:
    return base64.b64encode(to_png_bytes(arr)).decode("ascii")


def _png_b64(data: str) -> np.ndarray:
    return from_png_bytes(base64.b64decode(data))


class _HttpBackend:
    def __init__(self, config: BackendConfig, client: httpx.Client | None = None):
        self.config = config
        headers = {}
        token = resolve_secret(config.auth)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._client = client or httpx.Client(timeout=config.timeout_s, headers=headers)

    def _post(self, payload: dict) -> dict:
        retry = self.config.retry
        last_error: Exception | None = None
        for attempt in range(retry.max_attempts):
            try:
                response = self._client.post(self.config.endpoint, json=payload)
                if response.status_code >= 500:
                    raise BackendUnavailable(
                        f"{self.config.endpoint} answered {response.status_code}"
                    )
                if response.status_code >= 400:
                    raise BackendProtocolViolation(
                        f"{self.config.endpoint} rejected the request: "
                        f"{response.status_code} {response.text[:200]}"
                    )
                return response.json()
            except (httpx.TransportError, BackendUnavailable) as exc:
                last_error = exc
                if attempt + 1 < retry.max_attempts:
                    time.sleep(retry.delay(attempt))
        raise BackendUnavailable(
            f"{self.config.endpoint} unreachable after {retry.max_attempts} attempts: {last_error}"
        )


class HttpChatBackend(_HttpBackend):
    def complete(self, req: ChatVisionRequest) -> str:
        payload = {
            "model_id": req.model_id,
            "system_prompt": req.system_prompt,
            "user_text": req.user_text,
            "temperature": req.temperature,
            "images": [_b64_png(img) for img in req.images],
        }
        body = self._post(payload)
        if "text" not in body:
            raise BackendProtocolViolation("chat response lacks a 'text' field")
        return str(body["text"])


class HttpDepthBackend(_HttpBackend):
    def estimate(self, image: np.ndarray) -> DepthMap:
        h, w = image.shape[:2]
        body = self._post({"image": _b64_png(image)})
        try:
            rw, rh = int(body["width"]), int(body["height"])
            depth = np.frombuffer(
                base64.b64decode(body["depth_b64"]), dtype="<f4"
            ).reshape(rh, rw)
            valid = np.frombuffer(
                base64.b64decode(body["valid_b64"]), dtype=np.uint8
            ).reshape(rh, rw).astype(bool)
        except (KeyError, ValueError) as exc:
            raise BackendProtocolViolation(f"malformed depth response: {exc}") from exc
        if (rw, rh) != (w, h):
            raise BackendProtocolViolation(
                f"depth map is {rw}x{rh}, source image is {w}x{h}"
            )
        return DepthMap(width=w, height=h, values=depth.copy(), valid_mask=valid)


class HttpSegmentationBackend(_HttpBackend):
    def segment(self, image: np.ndarray, query: str) -> SegmentationMask:
        h, w = image.shape[:2]
        body = self._post({"image": _b64_png(image), "query": query})
        try:
            mask = _png_b64(body["mask"])
        except (KeyError, ValueError) as exc:
            raise BackendProtocolViolation(f"malformed segmentation response: {exc}") from exc
        if mask.ndim == 3:
            mask = mask[..., 0]
        if mask.shape != (h, w):
            raise BackendProtocolViolation(
                f"mask is {mask.shape[1]}x{mask.shape[0]}, source image is {w}x{h}"
            )
        return SegmentationMask(width=w, height=h, foreground=mask > 127)


class HttpInpaintBackend(_HttpBackend):
    def inpaint(self, req: InpaintRequest) -> np.ndarray:
        payload = {
            "canvas": _b64_png(req.canvas),
            "mask": base64.b64encode(mask_to_png_bytes(req.inpaint_mask)).decode("ascii"),
            "prompt": req.prompt,
            "negative_prompt": req.negative_prompt,
            "controls": [{"type": c, "strength": s} for c, s in req.controls],
            "seed": req.seed,
            "steps": req.steps,
        }
        body = self._post(payload)
        try:
            image = _png_b64(body["image"])
        except (KeyError, ValueError) as exc:
            raise BackendProtocolViolation(f"malformed inpaint response: {exc}") from exc
        if image.shape != (CANVAS_SIZE, CANVAS_SIZE, 3):
            raise BackendProtocolViolation(
                f"inpaint response has shape {image.shape}, expected "
                f"({CANVAS_SIZE}, {CANVAS_SIZE}, 3)"
            )
        return image
