import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adforge.background import (
    BackgroundRequest,
    apply_ablation_a4,
    build_background_prompt,
    controls_for_strength,
    generate_background,
    make_inpaint_mask,
)
from adforge.gateway import InpaintRequest, ModelGateway
from adforge.gateway.mock import MockChatBackend, MockDepthBackend, MockSegmentationBackend
from adforge.layout import SceneBrief
from adforge.rooms import RoomType

from conftest import mock_gateway


def _brief(photo="A calm living room with a sofa and a lamp.", theme="Modern"):
    return SceneBrief(
        desc_a="sofa",
        desc_b="lamp",
        layout_prompt="sofa left, lamp right",
        photo_description=photo,
        theme=theme,
        room_type=RoomType.living_room,
    )


def _canvas_and_alpha():
    canvas = np.full((1024, 1024, 3), 255, dtype=np.uint8)
    canvas[600:768, 200:500] = (140, 70, 30)
    canvas[500:768, 700:760] = (30, 70, 140)
    alpha = np.zeros((1024, 1024), dtype=np.uint8)
    alpha[600:768, 200:500] = 255
    alpha[500:768, 700:760] = 255
    return canvas, alpha


# ---------------------------------------------------------------------------
# prompt


def test_prompt_passthrough_of_photo_description():
    brief = _brief(photo="A Modern scene with things.")
    prompt, negative = build_background_prompt(brief)
    assert prompt == "A Modern scene with things."
    assert "watermark" in negative


def test_prompt_user_edit_wins_verbatim():
    edit = "A modern living room, a modern coffee table"
    prompt, _ = build_background_prompt(_brief(theme="Modern"), user_edit=edit)
    assert prompt == edit  # theme already present (case-insensitive)


def test_prompt_appends_missing_theme():
    prompt, _ = build_background_prompt(_brief(photo="A quiet room.", theme="Coastal"))
    assert prompt.endswith(", Coastal style")


def test_prompt_custom_negative_terms():
    _, negative = build_background_prompt(_brief(), negative_terms=["blurry", "text"])
    assert negative == "blurry, text"


# ---------------------------------------------------------------------------
# mask


def test_mask_margin_zero_is_exact_complement():
    _, alpha = _canvas_and_alpha()
    mask = make_inpaint_mask(alpha, 0)
    assert np.array_equal(mask, alpha == 0)


def test_mask_margin_dilates_square():
    alpha = np.zeros((1024, 1024), dtype=np.uint8)
    alpha[400:500, 300:400] = 255  # 100x100 square
    mask = make_inpaint_mask(alpha, 8)
    protected = ~mask
    ys, xs = np.nonzero(protected)
    assert (ys.min(), ys.max()) == (392, 507)
    assert (xs.min(), xs.max()) == (292, 407)
    assert protected.sum() == 116 * 116


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 10_000), margin=st.integers(0, 24))
def test_mask_never_intersects_protected(seed, margin):
    rng = np.random.default_rng(seed)
    alpha = np.zeros((1024, 1024), dtype=np.uint8)
    for _ in range(rng.integers(0, 4)):
        y, x = rng.integers(0, 900, size=2)
        h, w = rng.integers(1, 120, size=2)
        alpha[y : y + h, x : x + w] = 255
    mask = make_inpaint_mask(alpha, margin)
    protected = ~mask
    assert not (mask & protected).any()
    assert not (mask & (alpha > 0)).any()


def test_mask_antitone_in_margin():
    _, alpha = _canvas_and_alpha()
    previous = make_inpaint_mask(alpha, 0)
    for margin in (2, 6, 12):
        current = make_inpaint_mask(alpha, margin)
        assert not (current & ~previous).any()  # repaintable set only shrinks
        previous = current


# ---------------------------------------------------------------------------
# generation


def test_generate_background_preserves_products_byte_exact(gateway):
    canvas, alpha = _canvas_and_alpha()
    req = BackgroundRequest(canvas=canvas, foreground_alpha=alpha, prompt="a cozy room", seed=5)
    ad, report, mask = generate_background(gateway, req)
    assert np.array_equal(ad[alpha > 0], canvas[alpha > 0])
    assert np.array_equal(ad[~mask], canvas[~mask])
    assert report.passed  # the mock honors masks


def test_generate_background_deterministic(gateway):
    canvas, alpha = _canvas_and_alpha()
    req = BackgroundRequest(canvas=canvas, foreground_alpha=alpha, prompt="a cozy room", seed=5)
    ad1, _, _ = generate_background(gateway, req)
    ad2, _, _ = generate_background(gateway, req)
    assert np.array_equal(ad1, ad2)


def test_generate_background_strength_affects_only_mask_region(gateway):
    canvas, alpha = _canvas_and_alpha()
    base = dict(canvas=canvas, foreground_alpha=alpha, prompt="a cozy room", seed=5)
    ad0, _, mask = generate_background(gateway, BackgroundRequest(control_strength=0.0, **base))
    ad2, _, _ = generate_background(gateway, BackgroundRequest(control_strength=0.2, **base))
    assert np.array_equal(ad0[~mask], ad2[~mask])
    assert not np.array_equal(ad0[mask], ad2[mask])


def test_controls_for_strength():
    assert controls_for_strength(0.0) == []
    assert controls_for_strength(0.2) == [("depth", 0.2), ("canny", 0.2)]
    assert controls_for_strength(1.0) == [("depth", 1.0), ("canny", 1.0)]
    with pytest.raises(ValueError):
        controls_for_strength(1.5)


def test_audit_records_dishonest_backend_but_output_is_enforced():
    class DishonestInpaint:
        def inpaint(self, req):
            out = req.canvas.copy()
            out[:, :, :] = 3  # repaints everything, mask be damned
            return out

    gateway = ModelGateway(
        MockChatBackend(), MockDepthBackend(), MockSegmentationBackend(), DishonestInpaint()
    )
    canvas, alpha = _canvas_and_alpha()
    req = BackgroundRequest(canvas=canvas, foreground_alpha=alpha, prompt="room", seed=1)
    ad, report, mask = generate_background(gateway, req)
    assert not report.passed and report.changed_fraction > 0.9
    assert report.max_channel_delta > 0
    assert np.array_equal(ad[~mask], canvas[~mask])  # shipped image is enforced


def test_all_true_mask_degenerates_to_text_to_image(gateway):
    canvas = np.full((1024, 1024, 3), 255, dtype=np.uint8)
    alpha = np.zeros((1024, 1024), dtype=np.uint8)  # nothing to protect
    req = BackgroundRequest(canvas=canvas, foreground_alpha=alpha, prompt="pure scene", seed=2)
    ad, report, mask = generate_background(gateway, req)
    assert mask.all()
    assert report.passed  # zero protected pixels
    assert not np.array_equal(ad, canvas)


# ---------------------------------------------------------------------------
# A4 ablation


def _inpaint_request(strength=0.2):
    canvas, alpha = _canvas_and_alpha()
    return InpaintRequest(
        canvas=canvas,
        inpaint_mask=make_inpaint_mask(alpha, 4),
        prompt="room",
        negative_prompt="bad",
        controls=controls_for_strength(strength),
        seed=7,
        steps=30,
    )


def test_a4_strips_controls():
    req = _inpaint_request(0.2)
    out = apply_ablation_a4(req)
    assert out.controls == [] and req.controls  # original untouched


def test_a4_idempotent():
    req = _inpaint_request(0.2)
    once = apply_ablation_a4(req)
    twice = apply_ablation_a4(once)
    assert once == twice


def test_a4_preserves_every_other_field():
    req = _inpaint_request(0.2)
    out = apply_ablation_a4(req)
    assert out.prompt == req.prompt and out.negative_prompt == req.negative_prompt
    assert out.seed == req.seed and out.steps == req.steps
    assert np.array_equal(out.canvas, req.canvas)
    assert np.array_equal(out.inpaint_mask, req.inpaint_mask)
