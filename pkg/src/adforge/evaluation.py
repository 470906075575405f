"""VLM-judge evaluation: per-dimension scoring with optional set-of-mark
annotation, mean aggregation per pipeline configuration, pluggable scalar
scorers, and the manual failure-annotation schema."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from enum import Enum, IntEnum
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from . import prompts
from .errors import JudgeProtocolViolation, UnparseableModelOutput
from .gateway import ChatVisionRequest, parse_json_answer
from .layout import LayoutBox

logger = logging.getLogger(__name__)

SOM_STROKE_PX = 4
SOM_COLOR_A = (255, 0, 0)
SOM_COLOR_B = (0, 255, 0)

CONFIG_ORDER = ["A1", "A2", "A3", "A4", "Ours"]


class EvalDimension(str, Enum):
    authenticity = "authenticity"
    visual_appeal = "visual_appeal"
    layout_quality = "layout_quality"
    theme_alignment = "theme_alignment"


_DIMENSION_TEMPLATES = {
    EvalDimension.authenticity: prompts.JUDGE_AUTHENTICITY,
    EvalDimension.visual_appeal: prompts.JUDGE_VISUAL_APPEAL,
    EvalDimension.layout_quality: prompts.JUDGE_LAYOUT_QUALITY,
    EvalDimension.theme_alignment: prompts.JUDGE_THEME_ALIGNMENT,
}


def judge_system_prompt(dimension: EvalDimension, som: bool) -> str:
    template = prompts.load(_DIMENSION_TEMPLATES[dimension])
    if som:
        return prompts.insert_after_first_sentence(template, prompts.SOM_SENTENCE)
    return template


@dataclass
class EvalScore:
    generation_id: str
    dimension: EvalDimension
    score: int
    explanation: str
    judge_model: str
    som: bool

    def to_dict(self) -> dict:
        return {
            "generation_id": self.generation_id,
            "dimension": self.dimension.value,
            "score": self.score,
            "explanation": self.explanation,
            "judge_model": self.judge_model,
            "som": self.som,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalScore":
        return cls(
            generation_id=data["generation_id"],
            dimension=EvalDimension(data["dimension"]),
            score=int(data["score"]),
            explanation=data.get("explanation", ""),
            judge_model=data.get("judge_model", "default"),
            som=bool(data.get("som", False)),
        )


class FailureLabel(IntEnum):
    """Manual annotation labels for generated ads."""

    high_quality = 0
    category_mismatch = 1
    unnatural_pairing = 2
    inaccurate_relative_size = 3
    unreasonable_placement = 4
    product_appearance_changed = 5
    background_poor_feature = 6


FAILURE_LABEL_DESCRIPTIONS = {
    FailureLabel.high_quality: "ad perfectly showcases the two products according to the prompt",
    FailureLabel.category_mismatch: "product images are not matched with their category labels",
    FailureLabel.unnatural_pairing: "products pairing is not natural",
    FailureLabel.inaccurate_relative_size: "relative sizes of products is not accurate",
    FailureLabel.unreasonable_placement: "products are not placed at reasonable locations",
    FailureLabel.product_appearance_changed: "visual appearance of the products changed in the ad",
    FailureLabel.background_poor_feature: "background is not featuring the products' functionality well",
}


# ---------------------------------------------------------------------------
# Set-of-mark annotation


def _stroke_region(box: LayoutBox, stroke: int, size: int) -> tuple[slice, slice, slice, slice] | None:
    # a degenerate box still gets a visible stroke-sized blob
    w = max(box.width_px, stroke)
    h = max(box.height_px, stroke)
    x0, y0 = max(box.left_px, 0), max(box.top_px, 0)
    x1, y1 = min(box.left_px + w, size), min(box.top_px + h, size)
    if x0 >= x1 or y0 >= y1:
        return None
    return (slice(y0, y1), slice(x0, x1), slice(y0 + stroke, max(y0 + stroke, y1 - stroke)), slice(x0 + stroke, max(x0 + stroke, x1 - stroke)))


def stroke_mask(box: LayoutBox, size: int, stroke: int = SOM_STROKE_PX) -> np.ndarray:
    """Boolean mask of the rectangular stroke perimeter for one box."""
    mask = np.zeros((size, size), dtype=bool)
    region = _stroke_region(box, stroke, size)
    if region is None:
        return mask
    outer_y, outer_x, inner_y, inner_x = region
    mask[outer_y, outer_x] = True
    mask[inner_y, inner_x] = False
    return mask


def annotate_som(
    ad_image: np.ndarray, box_a: LayoutBox, box_b: LayoutBox, stroke: int = SOM_STROKE_PX
) -> np.ndarray:
    """Copy of the ad with product A outlined in pure red and product B in
    pure green, stroke width `stroke`, no fill. The input is never mutated."""
    out = ad_image.copy()
    size = out.shape[0]
    out[stroke_mask(box_a, size, stroke)] = SOM_COLOR_A
    out[stroke_mask(box_b, size, stroke)] = SOM_COLOR_B
    return out


# ---------------------------------------------------------------------------
# Judging


def _coerce_score(value) -> Optional[int]:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str) and value.strip().lstrip("+-").isdigit():
        return int(value.strip())
    return None


def judge_ad(
    gateway,
    ad_image: np.ndarray,
    product_a: np.ndarray,
    product_b: np.ndarray,
    generation_prompt: str,
    dimension: EvalDimension,
    judge_model: str = "default",
    som: bool = False,
    boxes: Optional[tuple[LayoutBox, LayoutBox]] = None,
    generation_id: str = "",
) -> EvalScore:
    """One judge verdict for one ad on one dimension.

    With som=True the provenance boxes are drawn on an ephemeral copy of the
    ad before dispatch. A malformed verdict gets exactly one retry with an
    explicit JSON-only reminder appended.
    """
    system = judge_system_prompt(dimension, som)
    image = ad_image
    if som:
        if boxes is None:
            raise ValueError("som=True requires the two layout boxes")
        image = annotate_som(ad_image, boxes[0], boxes[1])

    last_error: Exception | None = None
    for attempt in range(2):
        user_text = generation_prompt
        if attempt == 1:
            user_text = f"{generation_prompt} {prompts.JUDGE_RETRY_SUFFIX}"
        raw = gateway.chat_vision(
            ChatVisionRequest(
                user_text=user_text,
                system_prompt=system,
                images=[product_a, product_b, image],
                model_id=judge_model,
            )
        )
        try:
            answer = parse_json_answer(raw)
            if not isinstance(answer, dict) or "score" not in answer:
                raise JudgeProtocolViolation("judge answer lacks a 'score' field", raw=raw)
            score = _coerce_score(answer["score"])
            if score is None or not 1 <= score <= 5:
                raise JudgeProtocolViolation(
                    f"judge score {answer['score']!r} is not an integer in 1..5", raw=raw
                )
            return EvalScore(
                generation_id=generation_id,
                dimension=dimension,
                score=score,
                explanation=str(answer.get("explanation", "")),
                judge_model=judge_model,
                som=som,
            )
        except (UnparseableModelOutput, JudgeProtocolViolation) as exc:
            last_error = exc
            logger.warning("judge attempt %d failed: %s", attempt + 1, exc)
    raise last_error


# ---------------------------------------------------------------------------
# Aggregation


@dataclass
class TableCell:
    mean: float
    count: int

    def rendered(self) -> str:
        return f"{self.mean:.3f}"


@dataclass
class AblationTable:
    dimension: EvalDimension
    rows: dict[str, dict[str, TableCell]] = field(default_factory=dict)


def mean_score(scores: list[int]) -> float:
    """Arithmetic mean rounded half-up to 3 decimals."""
    value = Decimal(sum(scores)) / Decimal(len(scores))
    return float(value.quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def config_label(ablations: Iterable[str]) -> str:
    names = sorted(set(ablations))
    if not names:
        return "Ours"
    return "+".join(names)


def aggregate(
    entries: Iterable[tuple[EvalScore, str]], dimension: EvalDimension
) -> AblationTable:
    """Mean score per (judge model, SoM flag, configuration). Empty cells are
    absent from the table, never rendered as zero; every cell keeps the
    underlying score count for audit."""
    buckets: dict[tuple[str, str], list[int]] = {}
    for score, config in entries:
        if score.dimension != dimension:
            continue
        judge_key = f"{score.judge_model} (SoM)" if score.som else score.judge_model
        buckets.setdefault((judge_key, config), []).append(score.score)
    table = AblationTable(dimension=dimension)
    for (judge_key, config), scores in sorted(buckets.items()):
        table.rows.setdefault(judge_key, {})[config] = TableCell(
            mean=mean_score(scores), count=len(scores)
        )
    return table


def render_table_markdown(table: AblationTable, configs: Optional[list[str]] = None) -> str:
    configs = configs or CONFIG_ORDER
    lines = [
        "| " + " | ".join([table.dimension.value] + configs) + " |",
        "|" + "---|" * (len(configs) + 1),
    ]
    for judge_key in sorted(table.rows, key=lambda k: (k.replace(" (SoM)", ""), "(SoM)" in k)):
        cells = table.rows[judge_key]
        rendered = [cells[c].rendered() if c in cells else "" for c in configs]
        lines.append("| " + " | ".join([judge_key] + rendered) + " |")
    return "\n".join(lines)


def render_table_csv(table: AblationTable) -> str:
    lines = ["judge,config,mean,count"]
    for judge_key in sorted(table.rows):
        for config in sorted(table.rows[judge_key]):
            cell = table.rows[judge_key][config]
            lines.append(f"{judge_key},{config},{cell.rendered()},{cell.count}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Pluggable scalar scorers


class ScorerRegistry:
    """Optional image scorers (alignment, aesthetics, ...). None are bundled;
    each registered scorer maps an (image, prompt) pair to one float."""

    def __init__(self):
        self._scorers: dict[str, Callable[[np.ndarray, str], float]] = {}

    def register(self, name: str, version: str, fn: Callable[[np.ndarray, str], float]) -> None:
        self._scorers[f"{name}@{version}"] = fn

    def __len__(self) -> int:
        return len(self._scorers)

    def run(self, ad_image: np.ndarray, prompt: str) -> tuple[dict[str, float], dict[str, str]]:
        """Scores keyed by name@version plus per-scorer failure notes; one
        failing scorer never blocks the others."""
        results: dict[str, float] = {}
        errors: dict[str, str] = {}
        for key, fn in self._scorers.items():
            try:
                results[key] = float(fn(ad_image, prompt))
            except Exception as exc:  # scorer backends are third-party code
                errors[key] = f"{type(exc).__name__}: {exc}"
                logger.warning("scorer %s failed: %s", key, exc)
        return results, errors


# ---------------------------------------------------------------------------
# Failure-annotation CSV schema


@dataclass
class FailureAnnotation:
    generation_id: str
    label: FailureLabel
    note: str = ""


def write_annotation_template(generation_ids: list[str], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["generation_id", "label", "note"])
        for generation_id in generation_ids:
            writer.writerow([generation_id, "", ""])


def read_annotations(path: str | Path) -> list[FailureAnnotation]:
    annotations = []
    with Path(path).open("r", newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            label_text = (row.get("label") or "").strip()
            if not label_text:
                continue
            label = int(label_text)
            if label not in [int(v) for v in FailureLabel]:
                raise ValueError(f"label {label} outside 0..6 for {row.get('generation_id')}")
            annotations.append(
                FailureAnnotation(
                    generation_id=row["generation_id"],
                    label=FailureLabel(label),
                    note=row.get("note", ""),
                )
            )
    return annotations
