import base64
import math

import httpx
import numpy as np
import pytest

from adforge.errors import (
    BackendProtocolViolation,
    BackendUnavailable,
    MockRuleMissing,
    UnparseableModelOutput,
)
from adforge.gateway import (
    BackendConfig,
    ChatVisionRequest,
    InpaintRequest,
    ModelGateway,
    RetryPolicy,
    parse_json_answer,
    synthetic_plane_depth,
)
from adforge.gateway.http_backends import HttpChatBackend, HttpInpaintBackend
from adforge.gateway.mock import (
    MockChatBackend,
    MockDepthBackend,
    MockInpaintBackend,
    MockSegmentationBackend,
)
from adforge.imaging import to_png_bytes

from conftest import mock_gateway


# ---------------------------------------------------------------------------
# parse_json_answer


def test_parse_json_answer_code_fence():
    raw = '```json\n{"score": 4, "explanation": "ok"}\n```'
    assert parse_json_answer(raw) == {"score": 4, "explanation": "ok"}


def test_parse_json_answer_clean():
    assert parse_json_answer('{"1":"Yes"}') == {"1": "Yes"}


def test_parse_json_answer_prefix_suffix():
    assert parse_json_answer('Sure! {"a":1} trailing') == {"a": 1}


def test_parse_json_answer_braces_inside_strings():
    assert parse_json_answer('x {"a": "}{", "b": 2} y') == {"a": "}{", "b": 2}


def test_parse_json_answer_recovers_after_false_start():
    assert parse_json_answer("{nope} then {\"fine\": true}") == {"fine": True}


def test_parse_json_answer_failure_keeps_raw():
    with pytest.raises(UnparseableModelOutput) as err:
        parse_json_answer("no json here at all")
    assert err.value.raw == "no json here at all"


# ---------------------------------------------------------------------------
# mock chat


def _sofa_image():
    img = np.full((96, 96, 3), 255, dtype=np.uint8)
    img[48:90, 20:76] = (120, 60, 40)
    return img


def test_mock_chat_configured_rule():
    backend = MockChatBackend(rules=[])
    backend.prepend_rule(
        "profile-fixture",
        "product title information",
        '{"1":"Yes","2":"gray fabric sofa","3":"200 x 90 x 85 in cm","4":"living room"}',
    )
    gateway = ModelGateway(backend, MockDepthBackend(), MockSegmentationBackend(), MockInpaintBackend())
    req = ChatVisionRequest(user_text="... product title information: Sofa ...", images=[_sofa_image()])
    out = gateway.chat_vision(req)
    assert parse_json_answer(out)["2"] == "gray fabric sofa"
    assert gateway.chat_vision(req) == out  # determinism contract


def test_mock_chat_empty_text_is_precondition_error():
    gateway = mock_gateway()
    with pytest.raises(ValueError):
        gateway.chat_vision(ChatVisionRequest(user_text=""))


def test_mock_chat_too_many_images_rejected():
    gateway = mock_gateway()
    imgs = [_sofa_image()] * 5
    with pytest.raises(ValueError):
        gateway.chat_vision(ChatVisionRequest(user_text="x", images=imgs))


def test_mock_chat_missing_rule_is_an_error():
    backend = MockChatBackend(rules=[])
    with pytest.raises(MockRuleMissing):
        backend.complete(ChatVisionRequest(user_text="unmatched prompt"))


# ---------------------------------------------------------------------------
# mock depth


def test_mock_depth_level_camera_monotone_toward_horizon():
    depth = synthetic_plane_depth(64, 64, tilt_deg=0.0)
    # horizon sits on the principal-point row; below it, depth grows upward
    col = depth.values[:, 32]
    valid = depth.valid_mask[:, 32]
    assert not valid[:32].any() and valid[33:].all()
    rows = np.nonzero(valid)[0]
    assert all(col[rows[i]] > col[rows[i + 1]] for i in range(len(rows) - 1))


def test_mock_depth_tilt_changes_values():
    flat = synthetic_plane_depth(64, 64, tilt_deg=0.0)
    tilted = synthetic_plane_depth(64, 64, tilt_deg=20.0)
    v, u = 50, 32
    assert flat.valid_mask[v, u] and tilted.valid_mask[v, u]
    assert flat.values[v, u] != tilted.values[v, u]


def test_mock_depth_noise_magnitude():
    clean = synthetic_plane_depth(200, 200, tilt_deg=30.0, noise_sigma=0.0)
    noisy = synthetic_plane_depth(200, 200, tilt_deg=30.0, noise_sigma=0.01, seed=5)
    valid = clean.valid_mask
    rel = (noisy.values[valid] - clean.values[valid]) / clean.values[valid]
    # independent stddev computation (no numpy statistics helpers)
    n = rel.size
    mean = math.fsum(float(r) for r in rel) / n
    var = math.fsum((float(r) - mean) ** 2 for r in rel) / (n - 1)
    assert abs(math.sqrt(var) - 0.01) <= 0.002


def test_mock_depth_deterministic_per_image():
    backend = MockDepthBackend(noise_sigma=0.01)
    image = _sofa_image()
    first = backend.estimate(image)
    second = backend.estimate(image)
    assert np.array_equal(first.values, second.values)
    assert np.array_equal(first.valid_mask, second.valid_mask)


# ---------------------------------------------------------------------------
# mock segmentation


def test_mock_segment_pure_white_is_background():
    image = np.full((64, 64, 3), 255, dtype=np.uint8)
    mask = MockSegmentationBackend().segment(image, "floor")
    assert not mask.foreground.any()


def test_mock_segment_black_square():
    image = np.full((64, 64, 3), 255, dtype=np.uint8)
    image[22:42, 22:42] = 0
    fg = MockSegmentationBackend().segment(image, "product").foreground
    expected = np.zeros((64, 64), dtype=bool)
    expected[22:42, 22:42] = True
    assert np.array_equal(fg, expected)


def test_mock_segment_ellipse_area_close_to_analytic():
    from PIL import Image, ImageDraw

    im = Image.new("RGB", (128, 128), (255, 255, 255))
    ImageDraw.Draw(im).ellipse([34, 44, 94, 124], fill=(80, 40, 20))
    fg = MockSegmentationBackend().segment(np.asarray(im), "product").foreground
    # analytic reference: ellipse with semi-axes 30 x 40
    analytic = math.pi * 30 * 40
    assert abs(int(fg.sum()) - analytic) / analytic <= 0.05


# ---------------------------------------------------------------------------
# mock inpaint


def _canvas():
    canvas = np.full((1024, 1024, 3), 255, dtype=np.uint8)
    canvas[300:700, 300:700] = (10, 120, 200)
    return canvas


def test_mock_inpaint_all_false_mask_is_identity(gateway):
    req = InpaintRequest(
        canvas=_canvas(), inpaint_mask=np.zeros((1024, 1024), dtype=bool), prompt="room"
    )
    assert np.array_equal(gateway.inpaint(req), req.canvas)


def test_mock_inpaint_deterministic(gateway):
    mask = np.zeros((1024, 1024), dtype=bool)
    mask[:200] = True
    req = InpaintRequest(canvas=_canvas(), inpaint_mask=mask, prompt="modern living room", seed=9)
    assert np.array_equal(gateway.inpaint(req), gateway.inpaint(req))


def test_mock_inpaint_prompt_changes_only_masked_region(gateway):
    mask = np.zeros((1024, 1024), dtype=bool)
    mask[:200] = True
    canvas = _canvas()
    a = gateway.inpaint(InpaintRequest(canvas=canvas, inpaint_mask=mask, prompt="modern living room", seed=3))
    b = gateway.inpaint(InpaintRequest(canvas=canvas, inpaint_mask=mask, prompt="coastal living room", seed=3))
    assert np.array_equal(a[~mask], b[~mask])
    assert not np.array_equal(a[mask], b[mask])


def test_inpaint_request_validation(gateway):
    with pytest.raises(ValueError):
        gateway.inpaint(
            InpaintRequest(
                canvas=np.zeros((64, 64, 3), dtype=np.uint8),
                inpaint_mask=np.zeros((64, 64), dtype=bool),
                prompt="x",
            )
        )
    with pytest.raises(ValueError):
        gateway.inpaint(
            InpaintRequest(
                canvas=_canvas(),
                inpaint_mask=np.zeros((1024, 1024), dtype=bool),
                prompt="x",
                controls=[("depth", 1.5)],
            )
        )


# ---------------------------------------------------------------------------
# http backends


def _http_config(transport, retries=2, backoff=0.0):
    return BackendConfig(
        kind="http",
        endpoint="http://models.test/api",
        retry=RetryPolicy(max_attempts=retries, backoff_base_s=backoff),
    ), httpx.Client(transport=transport)


def test_http_chat_roundtrip():
    def handler(request):
        payload = httpx.Response(200, json={"text": '{"score": 5}'})
        return payload

    config, client = _http_config(httpx.MockTransport(handler))
    backend = HttpChatBackend(config, client=client)
    assert backend.complete(ChatVisionRequest(user_text="hi")) == '{"score": 5}'


def test_http_chat_unavailable_after_retries():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503, text="down")

    config, client = _http_config(httpx.MockTransport(handler), retries=3)
    backend = HttpChatBackend(config, client=client)
    with pytest.raises(BackendUnavailable):
        backend.complete(ChatVisionRequest(user_text="hi"))
    assert len(calls) == 3


def test_http_inpaint_wrong_dimensions_is_protocol_violation():
    small = np.zeros((64, 64, 3), dtype=np.uint8)

    def handler(request):
        return httpx.Response(
            200, json={"image": base64.b64encode(to_png_bytes(small)).decode()}
        )

    config, client = _http_config(httpx.MockTransport(handler))
    backend = HttpInpaintBackend(config, client=client)
    with pytest.raises(BackendProtocolViolation):
        backend.inpaint(
            InpaintRequest(canvas=_canvas(), inpaint_mask=np.zeros((1024, 1024), dtype=bool), prompt="x")
        )


def test_http_config_requires_endpoint():
    with pytest.raises(ValueError):
        BackendConfig(kind="http")
    with pytest.raises(ValueError):
        BackendConfig(kind="carrier-pigeon")


def test_auth_secret_resolution(monkeypatch):
    from adforge.gateway.http_backends import resolve_secret

    assert resolve_secret(None) is None
    assert resolve_secret("literal-token") == "literal-token"
    monkeypatch.setenv("GW_TOKEN", "s3cret")
    assert resolve_secret("env:GW_TOKEN") == "s3cret"
    monkeypatch.delenv("GW_TOKEN")
    with pytest.raises(BackendUnavailable):
        resolve_secret("env:GW_TOKEN")


def test_gateway_enforces_mask_on_dishonest_backend():
    """A backend that repaints everything still cannot leak into protected pixels."""

    class DishonestInpaint:
        def inpaint(self, req):
            return np.full_like(req.canvas, 7)

    gateway = ModelGateway(
        MockChatBackend(), MockDepthBackend(), MockSegmentationBackend(), DishonestInpaint()
    )
    canvas = _canvas()
    mask = np.zeros((1024, 1024), dtype=bool)
    mask[:100] = True
    out = gateway.inpaint(InpaintRequest(canvas=canvas, inpaint_mask=mask, prompt="x"))
    assert np.array_equal(out[~mask], canvas[~mask])
    assert (out[mask] == 7).all()
