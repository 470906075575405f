"""Layout stage: scene brief generation, the CSS-like layout grammar, layout
validation with a retry/clamp policy, product cutouts, and canvas composition.

The canvas is fixed at 1024x1024 with the floor line 768 px from the top.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from PIL import Image

from . import prompts
from .errors import EmptyForeground, LayoutParseError
from .gateway import ChatVisionRequest, parse_json_answer, require_keys
from .pairing.profiles import ProductProfile, truncate_words
from .rooms import RoomType

logger = logging.getLogger(__name__)

CANVAS_PX = 1024
FLOOR_LINE_PX = 768
FLOOR_BAND_PX = 160  # how far above the floor line a bottom edge may sit
ASPECT_TOLERANCE = 0.10
RELATIVE_SCALE_TOLERANCE = 0.40
LAYOUT_PROMPT_WORD_LIMIT = 30
PHOTO_DESCRIPTION_WORD_LIMIT = 40


@dataclass
class SceneBrief:
    desc_a: str
    desc_b: str
    layout_prompt: str
    photo_description: str
    theme: str
    room_type: RoomType

    def to_dict(self) -> dict:
        return {
            "desc_a": self.desc_a,
            "desc_b": self.desc_b,
            "layout_prompt": self.layout_prompt,
            "photo_description": self.photo_description,
            "theme": self.theme,
            "room_type": self.room_type.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneBrief":
        return cls(
            desc_a=data["desc_a"],
            desc_b=data["desc_b"],
            layout_prompt=data["layout_prompt"],
            photo_description=data["photo_description"],
            theme=data["theme"],
            room_type=RoomType(data["room_type"]),
        )


@dataclass
class LayoutBox:
    label: str
    width_px: int
    height_px: int
    left_px: int
    top_px: int
    layer: int

    @property
    def right_px(self) -> int:
        return self.left_px + self.width_px

    @property
    def bottom_px(self) -> int:
        return self.top_px + self.height_px

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "left_px": self.left_px,
            "top_px": self.top_px,
            "layer": self.layer,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutBox":
        return cls(
            label=data["label"],
            width_px=int(data["width_px"]),
            height_px=int(data["height_px"]),
            left_px=int(data["left_px"]),
            top_px=int(data["top_px"]),
            layer=int(data["layer"]),
        )


@dataclass
class LayoutSpec:
    boxes: list[LayoutBox]
    canvas_px: int = CANVAS_PX
    floor_line_px: int = FLOOR_LINE_PX

    def __post_init__(self):
        if len(self.boxes) != 2:
            raise ValueError(f"layout holds exactly 2 boxes, got {len(self.boxes)}")
        if self.boxes[0].label == self.boxes[1].label:
            raise ValueError("layout box labels must be distinct")

    def to_dict(self) -> dict:
        return {
            "boxes": [b.to_dict() for b in self.boxes],
            "canvas_px": self.canvas_px,
            "floor_line_px": self.floor_line_px,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutSpec":
        return cls(
            boxes=[LayoutBox.from_dict(b) for b in data["boxes"]],
            canvas_px=int(data.get("canvas_px", CANVAS_PX)),
            floor_line_px=int(data.get("floor_line_px", FLOOR_LINE_PX)),
        )


@dataclass
class Cutout:
    rgba: np.ndarray  # (H, W, 4) uint8
    source_item: str
    bbox_tight: tuple[int, int, int, int]  # left, top, width, height

    @property
    def aspect(self) -> float:
        return self.bbox_tight[2] / self.bbox_tight[3]


# ---------------------------------------------------------------------------
# Scene brief


def describe_scene(
    gateway,
    images: tuple[np.ndarray, np.ndarray],
    room_type: RoomType,
    theme: str,
    model_id: str = "default",
) -> SceneBrief:
    """Ask the vision model for product descriptions, a layout prompt, and an
    overall photo description. Over-limit texts are truncated, not rejected."""
    if not theme:
        raise ValueError("theme must be non-empty")
    prompt = prompts.fill(
        prompts.load(prompts.SCENE_BRIEF),
        {"room type": room_type.value.replace("_", " "), "generation style": theme},
    )
    raw = gateway.chat_vision(
        ChatVisionRequest(user_text=prompt, images=list(images), model_id=model_id)
    )
    answers = require_keys(parse_json_answer(raw), ["1", "2", "3", "4"], raw)
    layout_prompt = str(answers["3"])
    if len(layout_prompt.split()) > LAYOUT_PROMPT_WORD_LIMIT:
        logger.warning(
            "layout prompt has %d words, truncating to %d",
            len(layout_prompt.split()),
            LAYOUT_PROMPT_WORD_LIMIT,
        )
        layout_prompt = truncate_words(layout_prompt, LAYOUT_PROMPT_WORD_LIMIT)
    photo = str(answers["4"])
    if len(photo.split()) > PHOTO_DESCRIPTION_WORD_LIMIT:
        logger.warning(
            "photo description has %d words, truncating to %d",
            len(photo.split()),
            PHOTO_DESCRIPTION_WORD_LIMIT,
        )
        photo = truncate_words(photo, PHOTO_DESCRIPTION_WORD_LIMIT)
    return SceneBrief(
        desc_a=truncate_words(answers["1"], 3),
        desc_b=truncate_words(answers["2"], 3),
        layout_prompt=layout_prompt,
        photo_description=photo,
        theme=theme,
        room_type=room_type,
    )


# ---------------------------------------------------------------------------
# Layout text generation


def build_layout_prompts(
    brief: SceneBrief,
    aspect_a: float,
    aspect_b: float,
    labels: Optional[tuple[str, str]] = None,
) -> tuple[str, str]:
    """(system, user) prompt pair for the layout model. Aspect ratios are the
    width/height of the tight cutout bounding boxes, formatted to 3 decimals."""
    if aspect_a <= 0 or aspect_b <= 0:
        raise ValueError("aspect ratios must be positive")
    label_a, label_b = labels if labels else (brief.desc_a, brief.desc_b)
    system = prompts.load(prompts.LAYOUT_SYSTEM)
    user = prompts.fill(
        prompts.load(prompts.LAYOUT_USER),
        {
            "product-1": label_a,
            "product-2": label_b,
            "aspect-ratio-1": f"{aspect_a:.3f}",
            "aspect-ratio-2": f"{aspect_b:.3f}",
            "layout-prompt": brief.layout_prompt,
        },
    )
    return system, user


def generate_layout_text(
    gateway,
    brief: SceneBrief,
    aspect_a: float,
    aspect_b: float,
    images: tuple[np.ndarray, np.ndarray],
    labels: Optional[tuple[str, str]] = None,
    extra_user_text: str = "",
    model_id: str = "default",
) -> str:
    """Raw layout text from the model; parsing is the caller's concern."""
    system, user = build_layout_prompts(brief, aspect_a, aspect_b, labels)
    if extra_user_text:
        user = user + "\n" + extra_user_text
    return gateway.chat_vision(
        ChatVisionRequest(
            user_text=user, system_prompt=system, images=list(images), model_id=model_id
        )
    )


# ---------------------------------------------------------------------------
# Layout grammar

_LINE_RE = re.compile(r"^\s*(?P<label>[^{}]+?)\s*\{(?P<body>[^{}]*)\}\s*$")
_VALUE_RE = re.compile(r"^[+-]?\d+$")
LAYOUT_KEYS = ("width", "height", "left", "top", "layer")


def parse_layout(raw: str, expected_labels: tuple[str, str]) -> LayoutSpec:
    """Parse the model's CSS-like layout lines.

    Grammar per line: `<label> '{' (key ':' int 'px'? ';')* '}'`, whitespace
    tolerant, keys case-insensitive. Exactly two parseable lines are required
    and are matched to `expected_labels` by order. Out-of-bounds values are
    NOT parse errors; they belong to validate_layout.
    """
    parsed = []
    for line in raw.splitlines():
        m = _LINE_RE.match(line)
        if not m:
            continue
        parsed.append((m.group("label").strip(), _parse_body(m.group("body"), line)))
    if len(parsed) != 2:
        raise LayoutParseError(f"expected exactly 2 layout lines, found {len(parsed)}")
    label_a, label_b = expected_labels
    boxes = []
    for (found_label, values), label in zip(parsed, (label_a, label_b)):
        del found_label  # order, not label text, decides the product match
        boxes.append(
            LayoutBox(
                label=label,
                width_px=values["width"],
                height_px=values["height"],
                left_px=values["left"],
                top_px=values["top"],
                layer=values["layer"],
            )
        )
    if any(b.layer < 0 for b in boxes):
        raise LayoutParseError("layer must be a non-negative integer")
    return LayoutSpec(boxes=boxes)


def _parse_body(body: str, line: str) -> dict[str, int]:
    values: dict[str, int] = {}
    for part in body.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise LayoutParseError(f"malformed declaration {part!r} in line {line!r}")
        key, _, value = part.partition(":")
        key = key.strip().lower()
        if key not in LAYOUT_KEYS:
            raise LayoutParseError(f"unknown key {key!r} in line {line!r}")
        value = value.strip()
        if value.lower().endswith("px"):
            value = value[:-2].strip()
        if not _VALUE_RE.match(value):
            raise LayoutParseError(f"non-integer value for {key!r} in line {line!r}")
        values[key] = int(value)
    missing = [k for k in LAYOUT_KEYS if k not in values]
    if missing:
        raise LayoutParseError(f"missing keys {missing} in line {line!r}")
    return values


def serialize_layout(spec: LayoutSpec) -> str:
    lines = []
    for box in spec.boxes:
        lines.append(
            f"{box.label} {{width: {box.width_px}px; height: {box.height_px}px; "
            f"left: {box.left_px}px; top: {box.top_px}px; layer: {box.layer}}}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class Finding:
    code: str  # bounds | aspect | relative_scale | floor | overlap_layer
    severity: str  # "retry" | "info"
    message: str
    box_index: Optional[int] = None
    measured: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "code": self.code,
            "severity": self.severity,
            "message": self.message,
            "box_index": self.box_index,
            "measured": self.measured,
        }


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)
    action: Optional[str] = None  # accept | retry | clamp when a policy ran

    @property
    def ok(self) -> bool:
        return not self.findings

    def codes(self) -> set[str]:
        return {f.code for f in self.findings}

    def summary(self) -> str:
        return "; ".join(f"{f.code}: {f.message}" for f in self.findings) or "clean"

    def to_dict(self) -> dict:
        return {"findings": [f.to_dict() for f in self.findings], "action": self.action}


@dataclass
class LayoutPolicy:
    """On retry-severity findings, regenerate up to `max_retries` times with
    the findings appended to the user prompt, then clamp into bounds."""

    max_retries: int = 3

    def decide(self, report: ValidationReport, attempt: int) -> str:
        if report.ok:
            return "accept"
        if any(f.severity == "retry" for f in report.findings) and attempt < self.max_retries:
            return "retry"
        return "clamp"


def validate_layout(
    spec: LayoutSpec,
    aspect_a: float,
    aspect_b: float,
    profiles: Optional[tuple[ProductProfile, ProductProfile]] = None,
    policy: Optional[LayoutPolicy] = None,
    attempt: int = 0,
) -> ValidationReport:
    """Check bounds, aspect fidelity, relative product scale, floor
    plausibility, and overlap/layer sanity. Always returns a report."""
    report = ValidationReport()
    aspects = (aspect_a, aspect_b)
    for i, box in enumerate(spec.boxes):
        if (
            box.left_px < 0
            or box.top_px < 0
            or box.width_px < 1
            or box.height_px < 1
            or box.right_px > spec.canvas_px
            or box.bottom_px > spec.canvas_px
        ):
            report.findings.append(
                Finding(
                    "bounds",
                    "retry",
                    f"box {i} ({box.label}) exceeds the {spec.canvas_px}px canvas: "
                    f"left+width={box.right_px}, top+height={box.bottom_px}",
                    box_index=i,
                    measured={"right": box.right_px, "bottom": box.bottom_px},
                )
            )
        box_ratio = box.width_px / box.height_px if box.height_px else float("inf")
        deviation = abs(box_ratio - aspects[i]) / aspects[i]
        if deviation > ASPECT_TOLERANCE:
            report.findings.append(
                Finding(
                    "aspect",
                    "retry",
                    f"box {i} ({box.label}) ratio {box_ratio:.3f} deviates "
                    f"{deviation:.0%} from the cutout ratio {aspects[i]:.3f}",
                    box_index=i,
                    measured={"box_ratio": box_ratio, "cutout_ratio": aspects[i]},
                )
            )
        bottom_min = spec.floor_line_px - FLOOR_BAND_PX
        if box.bottom_px < bottom_min:
            report.findings.append(
                Finding(
                    "floor",
                    "retry",
                    f"box {i} ({box.label}) bottom edge {box.bottom_px}px floats above "
                    f"the floor band [{bottom_min}, {spec.canvas_px}]",
                    box_index=i,
                    measured={"bottom": box.bottom_px, "band_min": bottom_min},
                )
            )

    if profiles and profiles[0].dims_cm and profiles[1].dims_cm:
        expected = profiles[0].dims_cm[2] / profiles[1].dims_cm[2]
        actual = spec.boxes[0].height_px / spec.boxes[1].height_px
        deviation = abs(actual - expected) / expected
        if deviation > RELATIVE_SCALE_TOLERANCE:
            report.findings.append(
                Finding(
                    "relative_scale",
                    "retry",
                    f"pixel height ratio {actual:.3f} deviates {deviation:.0%} from "
                    f"the real-size ratio {expected:.3f}",
                    measured={"actual": actual, "expected": expected, "deviation": deviation},
                )
            )

    a, b = spec.boxes
    ix = min(a.right_px, b.right_px) - max(a.left_px, b.left_px)
    iy = min(a.bottom_px, b.bottom_px) - max(a.top_px, b.top_px)
    if ix > 0 and iy > 0 and a.layer == b.layer:
        report.findings.append(
            Finding(
                "overlap_layer",
                "retry",
                f"boxes overlap ({ix}x{iy}px) but share layer {a.layer}",
                measured={"overlap_w": ix, "overlap_h": iy},
            )
        )

    if policy is not None:
        report.action = policy.decide(report, attempt)
    return report


def clamp_layout(spec: LayoutSpec) -> LayoutSpec:
    """Force boxes into the canvas, rescaling proportionally (aspect kept),
    and drop floating boxes onto the floor line."""
    boxes = []
    for box in spec.boxes:
        left = min(max(box.left_px, 0), spec.canvas_px - 1)
        top = min(max(box.top_px, 0), spec.canvas_px - 1)
        w = max(box.width_px, 1)
        h = max(box.height_px, 1)
        f = min(1.0, (spec.canvas_px - left) / w, (spec.canvas_px - top) / h)
        w = max(1, int(w * f))
        h = max(1, int(h * f))
        if top + h < spec.floor_line_px - FLOOR_BAND_PX:
            top = max(0, spec.floor_line_px - h)
        boxes.append(
            LayoutBox(
                label=box.label, width_px=w, height_px=h, left_px=left, top_px=top, layer=box.layer
            )
        )
    return LayoutSpec(boxes=boxes, canvas_px=spec.canvas_px, floor_line_px=spec.floor_line_px)


# ---------------------------------------------------------------------------
# Cutouts and composition


def extract_cutout(gateway, image: np.ndarray, remove_white: bool, source_item: str = "") -> Cutout:
    """RGBA cutout of a product photo. With remove_white the alpha comes from
    the segmentation backend; otherwise the image is fully opaque."""
    h, w = image.shape[:2]
    if remove_white:
        fg = gateway.segment(image, "product foreground").foreground
        alpha = (fg.astype(np.uint8)) * 255
    else:
        alpha = np.full((h, w), 255, dtype=np.uint8)
    if not alpha.any():
        raise EmptyForeground(f"cutout for {source_item or 'image'} has no foreground pixels")
    ys, xs = np.nonzero(alpha)
    bbox = (int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))
    rgba = np.dstack([image[..., :3], alpha])
    return Cutout(rgba=rgba, source_item=source_item, bbox_tight=bbox)


def placement_rect(
    box: LayoutBox, cutout_w: int, cutout_h: int
) -> tuple[int, int, int, int]:
    """Letterbox-fit target rect (x, y, w, h) of a cutout inside its box:
    aspect preserved, centered. Never stretches the product."""
    scale = min(box.width_px / cutout_w, box.height_px / cutout_h)
    tw = min(box.width_px, max(1, round(cutout_w * scale)))
    th = min(box.height_px, max(1, round(cutout_h * scale)))
    x = box.left_px + (box.width_px - tw) // 2
    y = box.top_px + (box.height_px - th) // 2
    return x, y, tw, th


def compose_canvas(
    spec: LayoutSpec, cutouts: tuple[Cutout, Cutout]
) -> tuple[np.ndarray, np.ndarray]:
    """Place both cutouts on a white canvas with correct layering.

    Draw order is descending layer then ascending index, so layer 0 is drawn
    last and occludes higher layers in overlaps. Returns (canvas RGB,
    foreground alpha = union of placed alphas).
    """
    size = spec.canvas_px
    canvas = np.full((size, size, 3), 255, dtype=np.uint8)
    union_alpha = np.zeros((size, size), dtype=np.uint8)
    order = sorted(range(len(spec.boxes)), key=lambda i: (-spec.boxes[i].layer, i))
    for i in order:
        box, cutout = spec.boxes[i], cutouts[i]
        bx, by, bw, bh = cutout.bbox_tight
        x, y, tw, th = placement_rect(box, bw, bh)
        tile = cutout.rgba[by : by + bh, bx : bx + bw]
        resized = np.asarray(
            Image.fromarray(tile, "RGBA").resize((tw, th), Image.LANCZOS), dtype=np.uint8
        )
        # clip to canvas in case a clamped-but-edge box still touches a border
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + tw, size), min(y + th, size)
        if x0 >= x1 or y0 >= y1:
            continue
        patch = resized[y0 - y : y1 - y, x0 - x : x1 - x]
        alpha = patch[..., 3:4].astype(np.float64) / 255.0
        region = canvas[y0:y1, x0:x1].astype(np.float64)
        blended = patch[..., :3].astype(np.float64) * alpha + region * (1.0 - alpha)
        canvas[y0:y1, x0:x1] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
        union_alpha[y0:y1, x0:x1] = np.maximum(union_alpha[y0:y1, x0:x1], patch[..., 3])
    return canvas, union_alpha
