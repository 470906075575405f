"""Request/response types for the four model capabilities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CANVAS_SIZE = 1024
CONTROL_TYPES = ("depth", "canny")
MAX_CHAT_IMAGES = 4


@dataclass
class ChatVisionRequest:
    user_text: str
    images: list[np.ndarray] = field(default_factory=list)
    system_prompt: Optional[str] = None
    model_id: str = "default"
    temperature: float = 0.0


@dataclass
class DepthMap:
    width: int
    height: int
    values: np.ndarray  # (H, W) float32, metric meters
    valid_mask: np.ndarray  # (H, W) bool


@dataclass
class SegmentationMask:
    width: int
    height: int
    foreground: np.ndarray  # (H, W) bool


@dataclass
class InpaintRequest:
    canvas: np.ndarray  # (1024, 1024, 3) uint8
    inpaint_mask: np.ndarray  # (1024, 1024) bool, True = may repaint
    prompt: str
    negative_prompt: str = ""
    controls: list[tuple[str, float]] = field(default_factory=list)
    seed: int = 0
    steps: int = 30


@dataclass
class RetryPolicy:
    max_attempts: int = 3
    backoff_base_s: float = 0.5
    backoff_factor: float = 2.0

    def delay(self, attempt: int) -> float:
        return self.backoff_base_s * (self.backoff_factor**attempt)


@dataclass
class BackendConfig:
    kind: str = "mock"  # "http" | "mock"
    endpoint: Optional[str] = None
    auth: Optional[str] = None  # literal token or "env:VAR_NAME"
    timeout_s: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("http", "mock"):
            raise ValueError(f"backend kind must be http or mock, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http backend requires an endpoint")

    @classmethod
    def from_dict(cls, data: dict) -> "BackendConfig":
        retry = data.get("retry", {})
        return cls(
            kind=data.get("kind", "mock"),
            endpoint=data.get("endpoint"),
            auth=data.get("auth"),
            timeout_s=float(data.get("timeout_s", 60.0)),
            retry=RetryPolicy(
                max_attempts=int(retry.get("max_attempts", 3)),
                backoff_base_s=float(retry.get("backoff_base_s", 0.5)),
                backoff_factor=float(retry.get("backoff_factor", 2.0)),
            ),
            options=dict(data.get("options", {})),
        )


@dataclass
class GatewayConfig:
    chat: BackendConfig = field(default_factory=BackendConfig)
    depth: BackendConfig = field(default_factory=BackendConfig)
    segmentation: BackendConfig = field(default_factory=BackendConfig)
    inpaint: BackendConfig = field(default_factory=BackendConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "GatewayConfig":
        return cls(
            chat=BackendConfig.from_dict(data.get("chat", {})),
            depth=BackendConfig.from_dict(data.get("depth", {})),
            segmentation=BackendConfig.from_dict(data.get("segmentation", {})),
            inpaint=BackendConfig.from_dict(data.get("inpaint", {})),
        )
