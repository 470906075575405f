"""End-to-end generation pipeline: pairing, profiling, cutouts, scene brief,
layout (with the retry/clamp policy), composition, and background inpainting,
with ablation flags and full provenance capture."""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional

from ..background import (
    BackgroundRequest,
    apply_ablation_a4,
    build_background_prompt,
    generate_background,
)
from ..catalog import Catalog, normalize_category
from ..errors import (
    AdforgeError,
    InvalidImage,
    InvalidSpec,
    LayoutParseError,
    NoCompatiblePairs,
    ProfileRejected,
    UnparseableModelOutput,
)
from ..evaluation import ScorerRegistry
from ..layout import (
    CANVAS_PX,
    FLOOR_LINE_PX,
    Cutout,
    LayoutBox,
    LayoutPolicy,
    LayoutSpec,
    SceneBrief,
    build_layout_prompts,
    clamp_layout,
    compose_canvas,
    describe_scene,
    extract_cutout,
    generate_layout_text,
    parse_layout,
    validate_layout,
)
from ..pairing import (
    PairCandidate,
    ProfileStore,
    RansacParams,
    TiltCache,
    pair_candidates,
    profile_product,
)
from .records import BatchSpec, GenerationRecord, GenerationStatus, derive_seed, generation_identity
from .store import ArtifactStore

logger = logging.getLogger(__name__)

OVERRIDE_KEYS = {
    "layout_spec",
    "layout_prompt",
    "background_prompt",
    "control_strength",
    "remove_white_bg",
    "seed",
}


@dataclass
class PipelineSettings:
    protect_margin_px: int = 4
    inpaint_steps: int = 30
    remove_white_bg: bool = True
    layout_max_retries: int = 3
    stage_timeout_s: float = 60.0
    workers: int = 2
    model_id: str = "default"
    fov_deg: float = 55.0
    ransac_iters: int = 200
    ransac_inlier_dist_m: float = 0.02
    a3_gap_px: int = 32
    a3_max_height_px: int = 360

    def ransac_params(self) -> RansacParams:
        # fixed seed: tilt estimates depend on image content only, never on
        # which batch happened to compute them first
        return RansacParams(iters=self.ransac_iters, inlier_dist_m=self.ransac_inlier_dist_m, seed=0)

    def to_dict(self) -> dict:
        return {
            "protect_margin_px": self.protect_margin_px,
            "inpaint_steps": self.inpaint_steps,
            "remove_white_bg": self.remove_white_bg,
            "layout_max_retries": self.layout_max_retries,
            "stage_timeout_s": self.stage_timeout_s,
            "workers": self.workers,
            "model_id": self.model_id,
            "fov_deg": self.fov_deg,
            "ransac_iters": self.ransac_iters,
            "ransac_inlier_dist_m": self.ransac_inlier_dist_m,
            "a3_gap_px": self.a3_gap_px,
            "a3_max_height_px": self.a3_max_height_px,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineSettings":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class PipelineContext:
    catalog: Catalog
    gateway: object
    profiles: ProfileStore
    tilts: TiltCache
    artifacts: ArtifactStore
    settings: PipelineSettings = field(default_factory=PipelineSettings)
    scorers: ScorerRegistry = field(default_factory=ScorerRegistry)


class _StageFailure(Exception):
    def __init__(self, stage: str, reason: str):
        super().__init__(f"{stage}: {reason}")
        self.stage = stage
        self.reason = reason


@contextmanager
def _stage(name: str, timeout_s: float):
    start = time.monotonic()
    try:
        yield
    except _StageFailure:
        raise
    except Exception as exc:
        raise _StageFailure(name, f"{type(exc).__name__}: {exc}") from exc
    elapsed = time.monotonic() - start
    if elapsed > timeout_s:
        raise _StageFailure(name, f"timeout: took {elapsed:.1f}s against a {timeout_s:.0f}s budget")


# ---------------------------------------------------------------------------
# Profiling helpers


def ensure_profile(ctx: PipelineContext, item_id: str, category: str):
    """Profile one product, cached. Returns None when the model rejects the
    image/category match."""
    cached = ctx.profiles.get(item_id)
    if cached is not None:
        return cached
    record = ctx.catalog.records[item_id]
    image = ctx.catalog.load_main_image(item_id)
    profile = profile_product(ctx.gateway, record, image, category, model_id=ctx.settings.model_id)
    ctx.profiles.put(profile)
    return profile


def ensure_category_profiles(ctx: PipelineContext, category: str) -> None:
    for item_id in ctx.catalog.category_items(category):
        if item_id in ctx.profiles:
            continue
        try:
            ensure_profile(ctx, item_id, category)
        except (ProfileRejected, UnparseableModelOutput, InvalidImage) as exc:
            logger.info("profiling skipped %s: %s", item_id, exc)


def _own_category(catalog: Catalog, item_id: str) -> str:
    categories = catalog.records[item_id].categories()
    return categories[0] if categories else "product"


# ---------------------------------------------------------------------------
# Layout helpers


def _format_cm(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"


def product_label(description: str, profile, include_dims: bool) -> str:
    """Layout-prompt slot text for one product; real dimensions ride along in
    the description unless the scaling ablation removes them."""
    if include_dims and profile is not None and profile.dims_cm:
        l, w, h = profile.dims_cm
        return f"{description} with dimensions {_format_cm(l)} x {_format_cm(w)} x {_format_cm(h)} cm"
    return description


def a3_layout(
    cutouts: tuple[Cutout, Cutout],
    labels: tuple[str, str],
    gap_px: int = 32,
    max_height_px: int = 360,
) -> LayoutSpec:
    """Placement-ablation layout: both products side by side at equal pixel
    height, centered, bottoms resting on the floor line."""
    aspects = (cutouts[0].aspect, cutouts[1].aspect)
    h = max(1, min(max_height_px, int((CANVAS_PX - gap_px) / (aspects[0] + aspects[1]))))
    widths = [max(1, int(h * a)) for a in aspects]
    total = widths[0] + gap_px + widths[1]
    left_a = max(0, (CANVAS_PX - total) // 2)
    boxes = []
    for label, width, left in zip(labels, widths, (left_a, left_a + widths[0] + gap_px)):
        boxes.append(
            LayoutBox(
                label=label,
                width_px=width,
                height_px=h,
                left_px=left,
                top_px=FLOOR_LINE_PX - h,
                layer=0,
            )
        )
    return LayoutSpec(boxes=boxes)


@dataclass
class _LayoutOutcome:
    spec: LayoutSpec
    raw: str
    user_prompt: str
    attempts: int
    report_dict: dict


def _run_layout_stage(
    ctx: PipelineContext,
    brief: SceneBrief,
    cutouts: tuple[Cutout, Cutout],
    images,
    profile_pair,
    ablations: set[str],
) -> _LayoutOutcome:
    labels_plain = (brief.desc_a, brief.desc_b if brief.desc_b != brief.desc_a else brief.desc_b + " 2")
    aspect_a, aspect_b = cutouts[0].aspect, cutouts[1].aspect

    if "A3" in ablations:
        layout_spec = a3_layout(
            cutouts, labels_plain, ctx.settings.a3_gap_px, ctx.settings.a3_max_height_px
        )
        report = validate_layout(
            layout_spec,
            aspect_a,
            aspect_b,
            None if "A2" in ablations else profile_pair,
        )
        report.action = "accept"  # deterministic placement: findings are logged only
        return _LayoutOutcome(layout_spec, raw="", user_prompt="", attempts=0, report_dict=report.to_dict())

    include_dims = "A2" not in ablations
    labels = (
        product_label(labels_plain[0], profile_pair[0] if profile_pair else None, include_dims),
        product_label(labels_plain[1], profile_pair[1] if profile_pair else None, include_dims),
    )
    _, user_prompt = build_layout_prompts(brief, aspect_a, aspect_b, labels)
    policy = LayoutPolicy(max_retries=ctx.settings.layout_max_retries)
    attempt = 0
    extra = ""
    while True:
        raw = generate_layout_text(
            ctx.gateway,
            brief,
            aspect_a,
            aspect_b,
            images,
            labels=labels,
            extra_user_text=extra,
            model_id=ctx.settings.model_id,
        )
        try:
            layout_spec = parse_layout(raw, labels_plain)
        except LayoutParseError as exc:
            if attempt < policy.max_retries:
                attempt += 1
                extra = (
                    f"The previous layout was rejected: {exc}. "
                    "Return exactly two lines in the required format."
                )
                continue
            raise
        report = validate_layout(
            layout_spec,
            aspect_a,
            aspect_b,
            None if "A2" in ablations else profile_pair,
            policy=policy,
            attempt=attempt,
        )
        if report.action == "retry":
            attempt += 1
            extra = f"The previous layout had problems: {report.summary()} Return a corrected layout."
            continue
        if report.action == "clamp":
            layout_spec = clamp_layout(layout_spec)
            report = validate_layout(
                layout_spec,
                aspect_a,
                aspect_b,
                None if "A2" in ablations else profile_pair,
            )
            report.action = "clamp"
        return _LayoutOutcome(
            layout_spec,
            raw=raw,
            user_prompt=user_prompt,
            attempts=attempt,
            report_dict=report.to_dict(),
        )


# ---------------------------------------------------------------------------
# One generation


def run_generation(
    ctx: PipelineContext,
    spec: BatchSpec,
    batch_id: str,
    index: int,
    pair: PairCandidate,
) -> GenerationRecord:
    settings = ctx.settings
    ablations = set(spec.ablations)
    gen_seed = derive_seed(spec.seed, index)
    categories = (
        (normalize_category(spec.category_a), normalize_category(spec.category_b))
        if not spec.has("A1")
        else (_own_category(ctx.catalog, pair.item_a), _own_category(ctx.catalog, pair.item_b))
    )

    def failed(stage: str, reason: str) -> GenerationRecord:
        return GenerationRecord(
            id=generation_identity(
                batch_id, index, None, pair, sorted(ablations), settings.remove_white_bg,
                None, None, {"failed_stage": stage, "reason": reason}, {"generation": gen_seed},
                spec.control_strength,
            ),
            batch_id=batch_id,
            index=index,
            pair=pair,
            categories=categories,
            status=GenerationStatus(state="failed", stage=stage, reason=reason),
            ablations=sorted(ablations),
            remove_white_bg=settings.remove_white_bg,
            control_strength=spec.control_strength,
            seeds={"generation": gen_seed},
        )

    try:
        with _stage("profiling", settings.stage_timeout_s):
            profile_a = ctx.profiles.get(pair.item_a)
            profile_b = ctx.profiles.get(pair.item_b)
            if spec.has("A1"):
                if profile_a is None:
                    profile_a = ensure_profile(ctx, pair.item_a, categories[0])
                if profile_b is None:
                    profile_b = ensure_profile(ctx, pair.item_b, categories[1])
            if profile_a is None or profile_b is None:
                missing = pair.item_a if profile_a is None else pair.item_b
                raise ProfileRejected(f"no profile available for {missing}")

        with _stage("cutout", settings.stage_timeout_s):
            image_a = ctx.catalog.load_main_image(pair.item_a)
            image_b = ctx.catalog.load_main_image(pair.item_b)
            cut_a = extract_cutout(ctx.gateway, image_a, settings.remove_white_bg, pair.item_a)
            cut_b = extract_cutout(ctx.gateway, image_b, settings.remove_white_bg, pair.item_b)

        with _stage("scene", settings.stage_timeout_s):
            brief = describe_scene(
                ctx.gateway, (image_a, image_b), spec.room_type, spec.style, settings.model_id
            )

        with _stage("layout", settings.stage_timeout_s):
            layout_outcome = _run_layout_stage(
                ctx, brief, (cut_a, cut_b), (image_a, image_b),
                (profile_a, profile_b), ablations,
            )

        with _stage("compose", settings.stage_timeout_s):
            canvas, alpha = compose_canvas(layout_outcome.spec, (cut_a, cut_b))

        with _stage("background", settings.stage_timeout_s):
            prompt, negative = build_background_prompt(brief)
            inpaint_seed = derive_seed(gen_seed, "inpaint")
            request = BackgroundRequest(
                canvas=canvas,
                foreground_alpha=alpha,
                prompt=prompt,
                negative_prompt=negative,
                control_strength=spec.control_strength,
                seed=inpaint_seed,
                protect_margin_px=settings.protect_margin_px,
                steps=settings.inpaint_steps,
            )
            transform = apply_ablation_a4 if spec.has("A4") else None
            ad, preservation, mask = generate_background(ctx.gateway, request, transform)

        scalar_scores, scorer_errors = {}, {}
        if len(ctx.scorers):
            scalar_scores, scorer_errors = ctx.scorers.run(ad, prompt)

        prompts = {
            "layout_user": layout_outcome.user_prompt,
            "background": prompt,
            "negative": negative,
        }
        seeds = {"generation": gen_seed, "inpaint": inpaint_seed}
        record = GenerationRecord(
            id=generation_identity(
                batch_id, index, None, pair, sorted(ablations), settings.remove_white_bg,
                brief, layout_outcome.spec, prompts, seeds, spec.control_strength,
            ),
            batch_id=batch_id,
            index=index,
            pair=pair,
            categories=categories,
            status=GenerationStatus(state="ok"),
            brief=brief,
            layout=layout_outcome.spec,
            layout_raw=layout_outcome.raw,
            layout_attempts=layout_outcome.attempts,
            validation=layout_outcome.report_dict,
            prompts=prompts,
            seeds=seeds,
            control_strength=spec.control_strength,
            remove_white_bg=settings.remove_white_bg,
            ablations=sorted(ablations),
            artifacts={
                "canvas": ctx.artifacts.put_image(canvas),
                "alpha": ctx.artifacts.put_image(alpha),
                "mask": ctx.artifacts.put_mask(mask),
                "ad": ctx.artifacts.put_image(ad),
            },
            preservation=preservation,
            scalar_scores=scalar_scores,
            scorer_errors=scorer_errors,
        )
        return record
    except _StageFailure as exc:
        logger.warning("generation %s[%d] failed at %s: %s", batch_id, index, exc.stage, exc.reason)
        return failed(exc.stage, exc.reason)


# ---------------------------------------------------------------------------
# Batches


def plan_pairs(ctx: PipelineContext, spec: BatchSpec) -> list[PairCandidate]:
    """One pair per planned generation, sampled with replacement from the
    compatible pool (or uniformly from the whole catalog under A1)."""
    if spec.has("A1"):
        all_ids = sorted(ctx.catalog.records)
        if len(all_ids) < 2:
            raise NoCompatiblePairs("catalog holds fewer than 2 products")
        picks = []
        for index in range(spec.count):
            rng = random.Random(derive_seed(spec.seed, index, "pick"))
            a, b = rng.sample(all_ids, 2)
            a, b = min(a, b), max(a, b)
            picks.append(
                PairCandidate(
                    item_a=a, item_b=b, angle_diff_deg=0.0, compatible=True,
                    room_type=spec.room_type,
                )
            )
        return picks

    ensure_category_profiles(ctx, spec.category_a)
    ensure_category_profiles(ctx, spec.category_b)
    pool = pair_candidates(
        ctx.catalog,
        ctx.profiles.as_dict(),
        ctx.gateway,
        spec.room_type,
        spec.category_a,
        spec.category_b,
        threshold_deg=spec.threshold_deg,
        count=None,
        seed=derive_seed(spec.seed, "pairs"),
        tilt_cache=ctx.tilts,
        ransac=ctx.settings.ransac_params(),
    ).pairs
    picks = []
    for index in range(spec.count):
        rng = random.Random(derive_seed(spec.seed, index, "pick"))
        picks.append(pool[rng.randrange(len(pool))])
    return picks


def run_batch_generations(ctx: PipelineContext, spec: BatchSpec, batch_id: str) -> list[GenerationRecord]:
    """All generations for one batch, concurrent up to the worker bound,
    returned in generation-index order. Pairing failure fails every planned
    generation; nothing is fatal at the batch level."""
    try:
        pairs = plan_pairs(ctx, spec)
    except (NoCompatiblePairs, AdforgeError) as exc:
        placeholder = PairCandidate("", "", 0.0, False, spec.room_type)
        return [
            GenerationRecord(
                id=generation_identity(
                    batch_id, index, None, placeholder, sorted(spec.ablations),
                    ctx.settings.remove_white_bg,
                    None, None, {"failed_stage": "pairing", "reason": str(exc)},
                    {"generation": derive_seed(spec.seed, index)}, spec.control_strength,
                ),
                batch_id=batch_id,
                index=index,
                pair=placeholder,
                categories=(spec.category_a, spec.category_b),
                status=GenerationStatus(state="failed", stage="pairing", reason=str(exc)),
                ablations=sorted(spec.ablations),
                control_strength=spec.control_strength,
                seeds={"generation": derive_seed(spec.seed, index)},
            )
            for index in range(spec.count)
        ]

    workers = max(1, ctx.settings.workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(run_generation, ctx, spec, batch_id, index, pair)
            for index, pair in enumerate(pairs)
        ]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Regenerate / replay


def rebuild_record(
    ctx: PipelineContext,
    base: GenerationRecord,
    overrides: Optional[dict] = None,
    as_child: bool = True,
) -> GenerationRecord:
    """Re-run only the stages downstream of the earliest overridden input.

    With no overrides this replays the stored inputs exactly (model text is
    never re-requested), reproducing the parent's artifact hashes. With
    as_child the result links to its parent; otherwise it keeps the parent's
    identity (a provenance replay).
    """
    overrides = dict(overrides or {})
    unknown = set(overrides) - OVERRIDE_KEYS
    if unknown:
        raise InvalidSpec(f"unknown override keys {sorted(unknown)}; valid: {sorted(OVERRIDE_KEYS)}")
    if not base.status.ok:
        raise InvalidSpec(f"cannot rebuild {base.id}: it failed at {base.status.stage}")
    if base.brief is None or base.layout is None:
        raise InvalidSpec(f"record {base.id} lacks stored layout provenance")
    if "control_strength" in overrides and not 0.0 <= float(overrides["control_strength"]) <= 1.0:
        raise InvalidSpec("control_strength override must be within [0, 1]")

    settings = ctx.settings
    ablations = set(base.ablations)
    remove_white = bool(overrides.get("remove_white_bg", base.remove_white_bg))
    brief = replace(base.brief)
    if "layout_prompt" in overrides:
        brief = replace(brief, layout_prompt=str(overrides["layout_prompt"]))

    image_a = ctx.catalog.load_main_image(base.pair.item_a)
    image_b = ctx.catalog.load_main_image(base.pair.item_b)
    cut_a = extract_cutout(ctx.gateway, image_a, remove_white, base.pair.item_a)
    cut_b = extract_cutout(ctx.gateway, image_b, remove_white, base.pair.item_b)
    profile_pair = (ctx.profiles.get(base.pair.item_a), ctx.profiles.get(base.pair.item_b))

    rerun_layout = "layout_prompt" in overrides or "remove_white_bg" in overrides
    if rerun_layout:
        outcome = _run_layout_stage(
            ctx, brief, (cut_a, cut_b), (image_a, image_b), profile_pair, ablations
        )
        layout_spec = outcome.spec
        layout_raw, layout_user = outcome.raw, outcome.user_prompt
        layout_attempts, validation = outcome.attempts, outcome.report_dict
    elif "layout_spec" in overrides:
        layout_spec = _layout_from_override(overrides["layout_spec"], base.layout)
        policy = LayoutPolicy(max_retries=settings.layout_max_retries)
        report = validate_layout(
            layout_spec,
            cut_a.aspect,
            cut_b.aspect,
            None if "A2" in ablations else profile_pair,
            policy=policy,
            attempt=policy.max_retries,  # no model loop to retry against
        )
        if report.action == "clamp":
            layout_spec = clamp_layout(layout_spec)
            report = validate_layout(
                layout_spec, cut_a.aspect, cut_b.aspect,
                None if "A2" in ablations else profile_pair,
            )
            report.action = "clamp"
        layout_raw, layout_user = base.layout_raw, base.prompts.get("layout_user", "")
        layout_attempts, validation = base.layout_attempts, report.to_dict()
    else:
        layout_spec = base.layout
        layout_raw, layout_user = base.layout_raw, base.prompts.get("layout_user", "")
        layout_attempts, validation = base.layout_attempts, base.validation

    canvas, alpha = compose_canvas(layout_spec, (cut_a, cut_b))

    if "background_prompt" in overrides:
        prompt, negative = build_background_prompt(brief, user_edit=str(overrides["background_prompt"]))
    else:
        prompt = base.prompts.get("background", "")
        negative = base.prompts.get("negative", "")
    control_strength = float(overrides.get("control_strength", base.control_strength))
    inpaint_seed = int(overrides.get("seed", base.seeds.get("inpaint", 0)))

    request = BackgroundRequest(
        canvas=canvas,
        foreground_alpha=alpha,
        prompt=prompt,
        negative_prompt=negative,
        control_strength=control_strength,
        seed=inpaint_seed,
        protect_margin_px=settings.protect_margin_px,
        steps=settings.inpaint_steps,
    )
    transform = apply_ablation_a4 if "A4" in ablations else None
    ad, preservation, mask = generate_background(ctx.gateway, request, transform)

    scalar_scores, scorer_errors = {}, {}
    if len(ctx.scorers):
        scalar_scores, scorer_errors = ctx.scorers.run(ad, prompt)

    prompts = {"layout_user": layout_user, "background": prompt, "negative": negative}
    seeds = {"generation": base.seeds.get("generation", 0), "inpaint": inpaint_seed}
    parent_id = base.id if as_child else base.parent_id
    return GenerationRecord(
        id=generation_identity(
            base.batch_id, base.index, parent_id, base.pair, sorted(ablations), remove_white,
            brief, layout_spec, prompts, seeds, control_strength,
        ),
        batch_id=base.batch_id,
        index=base.index,
        parent_id=parent_id,
        pair=base.pair,
        categories=base.categories,
        status=GenerationStatus(state="ok"),
        brief=brief,
        layout=layout_spec,
        layout_raw=layout_raw,
        layout_attempts=layout_attempts,
        validation=validation,
        prompts=prompts,
        seeds=seeds,
        control_strength=control_strength,
        remove_white_bg=remove_white,
        ablations=sorted(ablations),
        artifacts={
            "canvas": ctx.artifacts.put_image(canvas),
            "alpha": ctx.artifacts.put_image(alpha),
            "mask": ctx.artifacts.put_mask(mask),
            "ad": ctx.artifacts.put_image(ad),
        },
        preservation=preservation,
        scalar_scores=scalar_scores,
        scorer_errors=scorer_errors,
    )


def _layout_from_override(value, base_layout: LayoutSpec) -> LayoutSpec:
    if isinstance(value, LayoutSpec):
        return value
    if not isinstance(value, dict) or "boxes" not in value:
        raise InvalidSpec("layout_spec override must be an object with a 'boxes' list")
    boxes = []
    if len(value["boxes"]) != 2:
        raise InvalidSpec("layout_spec override must hold exactly 2 boxes")
    for i, box in enumerate(value["boxes"]):
        try:
            boxes.append(
                LayoutBox(
                    label=str(box.get("label", base_layout.boxes[i].label)),
                    width_px=int(box["width_px"]),
                    height_px=int(box["height_px"]),
                    left_px=int(box["left_px"]),
                    top_px=int(box["top_px"]),
                    layer=int(box.get("layer", base_layout.boxes[i].layer)),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"malformed layout_spec override box {i}: {exc}") from exc
    try:
        return LayoutSpec(boxes=boxes)
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc
