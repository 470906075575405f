"""Pluggable access to the external model capabilities (chat-vision, metric
depth, segmentation, inpainting) with HTTP and seeded mock implementations."""

from .core import ModelGateway, build_gateway, enforce_mask
from .mock import (
    ChatRule,
    MockChatBackend,
    MockDepthBackend,
    MockInpaintBackend,
    MockSegmentationBackend,
    plane_normal,
    standard_chat_rules,
    synthetic_plane_depth,
)
from .parsing import parse_json_answer, require_keys
from .types import (
    BackendConfig,
    CANVAS_SIZE,
    ChatVisionRequest,
    DepthMap,
    GatewayConfig,
    InpaintRequest,
    RetryPolicy,
    SegmentationMask,
)

__all__ = [
    "BackendConfig",
    "CANVAS_SIZE",
    "ChatRule",
    "ChatVisionRequest",
    "DepthMap",
    "GatewayConfig",
    "InpaintRequest",
    "MockChatBackend",
    "MockDepthBackend",
    "MockInpaintBackend",
    "MockSegmentationBackend",
    "ModelGateway",
    "RetryPolicy",
    "SegmentationMask",
    "build_gateway",
    "enforce_mask",
    "parse_json_answer",
    "plane_normal",
    "require_keys",
    "standard_chat_rules",
    "synthetic_plane_depth",
]
