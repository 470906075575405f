"""Background stage: prompt assembly, inpaint mask construction, dispatch
with structural control, and product-preservation enforcement."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.ndimage import maximum_filter

from . import prompts
from .gateway import CANVAS_SIZE, InpaintRequest
from .layout import SceneBrief

logger = logging.getLogger(__name__)

DEFAULT_PROTECT_MARGIN_PX = 4
DEFAULT_CONTROL_STRENGTH = 0.2
DEFAULT_INPAINT_STEPS = 30


@dataclass
class BackgroundRequest:
    canvas: np.ndarray  # (1024, 1024, 3) uint8 from the layout stage
    foreground_alpha: np.ndarray  # (1024, 1024) uint8
    prompt: str
    negative_prompt: str = prompts.DEFAULT_NEGATIVE_PROMPT
    control_strength: float = DEFAULT_CONTROL_STRENGTH
    seed: int = 0
    protect_margin_px: int = DEFAULT_PROTECT_MARGIN_PX
    steps: int = DEFAULT_INPAINT_STEPS


@dataclass
class PreservationReport:
    """How faithfully the raw backend output preserved protected pixels."""

    changed_fraction: float
    max_channel_delta: int

    @property
    def passed(self) -> bool:
        return self.changed_fraction == 0.0

    def to_dict(self) -> dict:
        return {
            "changed_fraction": self.changed_fraction,
            "max_channel_delta": self.max_channel_delta,
            "pass": self.passed,
        }


def build_background_prompt(
    brief: SceneBrief,
    user_edit: Optional[str] = None,
    negative_terms: Optional[list[str]] = None,
) -> tuple[str, str]:
    """(prompt, negative_prompt) for inpainting. The theme keyword is
    guaranteed present, appended as a style suffix when missing."""
    prompt = user_edit if user_edit else brief.photo_description
    if brief.theme and brief.theme.lower() not in prompt.lower():
        prompt = f"{prompt}, {brief.theme} style"
    negative = ", ".join(negative_terms) if negative_terms else prompts.DEFAULT_NEGATIVE_PROMPT
    return prompt, negative


def make_inpaint_mask(foreground_alpha: np.ndarray, protect_margin_px: int) -> np.ndarray:
    """Repaintable-region mask: everything except the placed products dilated
    by a square margin. True = the model may repaint."""
    if foreground_alpha.shape != (CANVAS_SIZE, CANVAS_SIZE):
        raise ValueError(f"foreground alpha must be {CANVAS_SIZE}x{CANVAS_SIZE}")
    if protect_margin_px < 0:
        raise ValueError("protect_margin_px must be >= 0")
    protected = foreground_alpha > 0
    if protect_margin_px:
        size = 2 * protect_margin_px + 1
        protected = maximum_filter(protected, size=size, mode="constant", cval=False)
    return ~protected


def controls_for_strength(strength: float) -> list[tuple[str, float]]:
    """Depth and edge control at the same strength; 0 disables both."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("control_strength must be within [0, 1]")
    if strength == 0.0:
        return []
    return [("depth", strength), ("canny", strength)]


def apply_ablation_a4(req: InpaintRequest) -> InpaintRequest:
    """Structural-control ablation: force the control list empty, leaving
    every other field untouched. Idempotent."""
    return dataclasses.replace(req, controls=[])


def generate_background(
    gateway,
    req: BackgroundRequest,
    inpaint_transform: Optional[Callable[[InpaintRequest], InpaintRequest]] = None,
) -> tuple[np.ndarray, PreservationReport, np.ndarray]:
    """Inpaint the background around the protected products.

    Returns (ad image, preservation report, inpaint mask). The report audits
    the raw backend output; the returned image has protected pixels copied
    back from the canvas, so its own preservation is exact by construction.
    `inpaint_transform` hooks ablations in between request build and dispatch.
    """
    if not req.prompt:
        raise ValueError("background prompt must be non-empty")
    mask = make_inpaint_mask(req.foreground_alpha, req.protect_margin_px)
    inpaint_req = InpaintRequest(
        canvas=req.canvas,
        inpaint_mask=mask,
        prompt=req.prompt,
        negative_prompt=req.negative_prompt,
        controls=controls_for_strength(req.control_strength),
        seed=req.seed,
        steps=req.steps,
    )
    if inpaint_transform is not None:
        inpaint_req = inpaint_transform(inpaint_req)
    raw = gateway.inpaint_raw(inpaint_req)

    protected = ~mask
    report = audit_preservation(req.canvas, raw, protected)
    if not report.passed:
        logger.warning(
            "backend repainted %.4f%% of protected pixels (max channel delta %d); enforcing",
            100 * report.changed_fraction,
            report.max_channel_delta,
        )
    ad = raw.copy()
    ad[protected] = req.canvas[protected]
    return ad, report, mask


def audit_preservation(
    canvas: np.ndarray, output: np.ndarray, protected: np.ndarray
) -> PreservationReport:
    total = int(protected.sum())
    if total == 0:
        return PreservationReport(changed_fraction=0.0, max_channel_delta=0)
    deltas = np.abs(
        output[protected].astype(np.int16) - canvas[protected].astype(np.int16)
    )
    changed = int((deltas.max(axis=1) > 0).sum())
    return PreservationReport(
        changed_fraction=changed / total,
        max_channel_delta=int(deltas.max()) if changed else 0,
    )
