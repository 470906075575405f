"""Gateway facade: request validation plus per-capability backend dispatch."""

from __future__ import annotations

import numpy as np

from .http_backends import (
    HttpChatBackend,
    HttpDepthBackend,
    HttpInpaintBackend,
    HttpSegmentationBackend,
)
from .mock import (
    MockChatBackend,
    MockDepthBackend,
    MockInpaintBackend,
    MockSegmentationBackend,
)
from .types import (
    BackendConfig,
    CANVAS_SIZE,
    CONTROL_TYPES,
    ChatVisionRequest,
    DepthMap,
    GatewayConfig,
    InpaintRequest,
    MAX_CHAT_IMAGES,
    SegmentationMask,
)


class ModelGateway:
    """Uniform access to chat-vision, depth, segmentation, and inpainting."""

    def __init__(self, chat, depth, segmentation, inpaint):
        self.chat = chat
        self.depth = depth
        self.segmentation = segmentation
        self.inpaint_backend = inpaint

    def chat_vision(self, req: ChatVisionRequest) -> str:
        if not req.user_text:
            raise ValueError("chat request user_text must be non-empty")
        if len(req.images) > MAX_CHAT_IMAGES:
            raise ValueError(f"chat request carries {len(req.images)} images, max {MAX_CHAT_IMAGES}")
        if not 0.0 <= req.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")
        return self.chat.complete(req)

    def estimate_depth(self, image: np.ndarray) -> DepthMap:
        return self.depth.estimate(image)

    def segment(self, image: np.ndarray, query: str) -> SegmentationMask:
        return self.segmentation.segment(image, query)

    def inpaint_raw(self, req: InpaintRequest) -> np.ndarray:
        """Backend output with dimensions validated but the mask NOT enforced.

        Callers that need a preservation audit of the backend itself use this;
        everyone else should call inpaint().
        """
        _validate_inpaint_request(req)
        return self.inpaint_backend.inpaint(req)

    def inpaint(self, req: InpaintRequest) -> np.ndarray:
        """Inpaint with the mask enforced: mask-false pixels are copied back
        from the canvas regardless of what the backend returned."""
        return enforce_mask(req, self.inpaint_raw(req))


def enforce_mask(req: InpaintRequest, image: np.ndarray) -> np.ndarray:
    out = image.copy()
    protected = ~req.inpaint_mask
    out[protected] = req.canvas[protected]
    return out


def _validate_inpaint_request(req: InpaintRequest) -> None:
    if req.canvas.shape != (CANVAS_SIZE, CANVAS_SIZE, 3) or req.canvas.dtype != np.uint8:
        raise ValueError(f"canvas must be uint8 ({CANVAS_SIZE}, {CANVAS_SIZE}, 3)")
    if req.inpaint_mask.shape != req.canvas.shape[:2]:
        raise ValueError("mask dimensions must equal canvas dimensions")
    if not req.prompt:
        raise ValueError("inpaint prompt must be non-empty")
    if req.steps < 1:
        raise ValueError("steps must be positive")
    for control, strength in req.controls:
        if control not in CONTROL_TYPES:
            raise ValueError(f"unknown control type {control!r}")
        if not 0.0 <= strength <= 1.0:
            raise ValueError(f"control strength {strength} outside [0, 1]")


def _build_backend(config: BackendConfig, http_cls, mock_cls):
    if config.kind == "http":
        return http_cls(config)
    return mock_cls(**config.options)


def build_gateway(config: GatewayConfig | None = None) -> ModelGateway:
    config = config or GatewayConfig()
    return ModelGateway(
        chat=_build_backend(config.chat, HttpChatBackend, MockChatBackend),
        depth=_build_backend(config.depth, HttpDepthBackend, MockDepthBackend),
        segmentation=_build_backend(
            config.segmentation, HttpSegmentationBackend, MockSegmentationBackend
        ),
        inpaint=_build_backend(config.inpaint, HttpInpaintBackend, MockInpaintBackend),
    )
