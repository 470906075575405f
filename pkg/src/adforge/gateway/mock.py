"""Seeded deterministic mock backends.

The mocks let the whole pipeline run at desk scale with no GPU or network:
chat answers come from an ordered rule table, depth is synthesized from a
tilted floor plane under a pinhole camera (the geometry test oracle),
segmentation thresholds near-white pixels, and inpainting paints a seeded
procedural texture strictly inside the mask.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import MockRuleMissing
from ..rooms import RoomType
from .types import ChatVisionRequest, DepthMap, InpaintRequest, SegmentationMask

WHITE_THRESHOLD = 245


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, np.ndarray):
            h.update(str(part.shape).encode())
            h.update(np.ascontiguousarray(part).tobytes())
        else:
            h.update(str(part).encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def _digest_int(*parts) -> int:
    return int(_digest(*parts)[:16], 16)


def request_digest(req: ChatVisionRequest, salt: int = 0) -> str:
    return _digest(salt, req.system_prompt or "", req.user_text, *req.images)


# ---------------------------------------------------------------------------
# Chat


@dataclass
class ChatRule:
    name: str
    matcher: Callable[[ChatVisionRequest], bool]
    responder: Callable[[ChatVisionRequest], str]


class MockChatBackend:
    """Answers chat-vision requests from an ordered rule table.

    Equal requests always produce identical text. A request no rule matches
    raises MockRuleMissing: that is a test/configuration bug, not a fallback.
    """

    def __init__(self, rules: Optional[list[ChatRule]] = None, seed: int = 0):
        self.rules = list(rules) if rules is not None else standard_chat_rules(seed)
        self.seed = seed

    def prepend_rule(self, name, matcher, responder):
        if isinstance(responder, str):
            text = responder
            responder = lambda req: text  # noqa: E731
        if isinstance(matcher, str):
            anchor = matcher
            matcher = lambda req: anchor in req.user_text or anchor in (req.system_prompt or "")  # noqa: E731
        self.rules.insert(0, ChatRule(name, matcher, responder))

    def complete(self, req: ChatVisionRequest) -> str:
        for rule in self.rules:
            if rule.matcher(req):
                return rule.responder(req)
        head = req.user_text[:120].replace("\n", " ")
        raise MockRuleMissing(f"no mock chat rule matches request starting {head!r}")


# Keyword tables used by the standard rules to give fixture products stable,
# plausible rooms and dimensions. First hit in listed order wins.
_ROOM_KEYWORDS = [
    (RoomType.bathroom, ("towel", "shower", "bath", "toilet", "vanity", "sink")),
    (RoomType.kitchen, ("stool", "dining", "kettle", "cookware", "pan", "kitchen", "spice")),
    (RoomType.bedroom, ("bed", "nightstand", "dresser", "wardrobe", "crib", "mattress")),
    (
        RoomType.living_room,
        ("sofa", "couch", "lamp", "recliner", "ottoman", "shelf", "bookcase", "rug", "armchair", "chair", "table", "tv"),
    ),
]

_DIM_KEYWORDS = [
    ("sofa", (200, 90, 85)),
    ("couch", (200, 90, 85)),
    ("recliner", (90, 95, 100)),
    ("ottoman", (80, 60, 45)),
    ("lamp", (30, 30, 160)),
    ("armchair", (75, 75, 95)),
    ("chair", (70, 70, 90)),
    ("shelf", (80, 30, 180)),
    ("bookcase", (80, 30, 180)),
    ("rug", (200, 150, 1)),
    ("table", (120, 60, 45)),
    ("bed", (210, 160, 100)),
    ("nightstand", (45, 40, 55)),
    ("dresser", (120, 50, 80)),
    ("stool", (40, 40, 70)),
    ("towel", (140, 70, 1)),
    ("vanity", (90, 45, 85)),
    ("mirror", (60, 3, 90)),
]


def _extract(text: str, start: str, end: str) -> Optional[str]:
    i = text.find(start)
    if i < 0:
        return None
    j = text.find(end, i + len(start))
    if j < 0:
        return None
    return text[i + len(start) : j]


def _keyword_room(haystack: str, fallback_key: str) -> RoomType:
    low = haystack.lower()
    for room, words in _ROOM_KEYWORDS:
        if any(w in low for w in words):
            return room
    return list(RoomType)[_digest_int(fallback_key) % 4]


def _keyword_dims(haystack: str, fallback_key: str) -> tuple[int, int, int]:
    low = haystack.lower()
    for word, dims in _DIM_KEYWORDS:
        if word in low:
            return dims
    n = _digest_int(fallback_key)
    return (40 + n % 180, 30 + (n // 7) % 120, 40 + (n // 49) % 180)


def _short_words(text: str, limit: int = 3) -> str:
    words = [w.strip(".,;:!?\"'()") for w in text.split()]
    words = [w for w in words if w][:limit]
    return " ".join(words).lower() or "product"


def _profile_responder(req: ChatVisionRequest) -> str:
    title = _extract(req.user_text, "product title information: ", ". You will generate") or ""
    category = _extract(req.user_text, "the category of ", "? Answer Yes or No") or ""
    hay = f"{title} {category}"
    dims = _keyword_dims(hay, hay)
    room = _keyword_room(hay, hay)
    answer = {
        "1": "Yes",
        "2": _short_words(title or category),
        "3": f"{dims[0]} x {dims[1]} x {dims[2]} in cm",
        "4": room.value.replace("_", " "),
    }
    return json.dumps(answer)


def _scene_responder(req: ChatVisionRequest) -> str:
    room = _extract(req.user_text, "the layout of the ", " looks like") or "room"
    style = _extract(req.user_text, "Given the theme as ", ",") or "Modern"
    d1 = f"item {_digest(req.images[0])[:6]}" if req.images else "first item"
    d2 = f"item {_digest(req.images[1])[:6]}" if len(req.images) > 1 else "second item"
    answer = {
        "1": d1,
        "2": d2,
        "3": f"Place the {d1} on the left side of the {room} and the {d2} to its right, leaving open floor space between them.",
        "4": f"A {style} {room} scene featuring a {d1} and a {d2} arranged naturally on the floor, soft daylight, clean styling.",
    }
    return json.dumps(answer)


_LAYOUT_RE = re.compile(
    r"\AA (?P<p1>.+?) with width-to-height ratio of (?P<r1>[0-9.]+), "
    r"and (?P<p2>.+?) with width-to-height ratio of (?P<r2>[0-9.]+)\.",
    re.DOTALL,
)
_DIMS_IN_LABEL_RE = re.compile(r"(\d+(?:\.\d+)?) x (\d+(?:\.\d+)?) x (\d+(?:\.\d+)?) cm")


def _layout_responder(req: ChatVisionRequest) -> str:
    m = _LAYOUT_RE.match(req.user_text)
    if not m:
        raise MockRuleMissing("layout rule matched but user text does not follow the template")
    labels = [m.group("p1"), m.group("p2")]
    ratios = [max(0.05, float(m.group("r1"))), max(0.05, float(m.group("r2")))]

    heights = []
    real_heights = []
    for label in labels:
        dm = _DIMS_IN_LABEL_RE.search(label)
        real_heights.append(float(dm.group(3)) if dm else None)
    if all(h is not None for h in real_heights):
        top_h = max(real_heights)
        heights = [max(64, round(400 * h / top_h)) for h in real_heights]
    else:
        heights = [320, 320]

    boxes = []
    for h, r in zip(heights, ratios):
        w = round(h * r)
        if w > 460:
            w = 460
            h = max(1, round(w / r))
        boxes.append([max(1, w), max(1, h)])
    gap = 40
    total = boxes[0][0] + boxes[1][0] + gap
    if total > 1008:
        shrink = 1008 / total
        for box in boxes:
            box[0] = max(1, round(box[0] * shrink))
            box[1] = max(1, round(box[1] * shrink))
        total = boxes[0][0] + boxes[1][0] + gap
    left1 = max(8, (1024 - total) // 2)
    left2 = left1 + boxes[0][0] + gap
    layer1 = 1 if boxes[0][1] >= boxes[1][1] else 0
    lines = []
    for label, (w, h), left, layer in zip(
        labels, boxes, (left1, left2), (layer1, 1 - layer1)
    ):
        top = 768 - h
        lines.append(
            f"{label} {{width: {w}px; height: {h}px; left: {left}px; top: {top}px; layer: {layer}}}"
        )
    return "\n".join(lines)


def _judge_responder(req: ChatVisionRequest) -> str:
    score = 3 + _digest_int(req.system_prompt or "", req.user_text, *req.images) % 3
    return json.dumps({"score": score, "explanation": "deterministic mock verdict"})


def standard_chat_rules(seed: int = 0) -> list[ChatRule]:
    """Rules covering the four pipeline prompt families end to end."""
    return [
        ChatRule(
            "profile",
            lambda req: req.user_text.startswith(
                "You are an Advertising Marketing Expert. You are given a product images"
            ),
            _profile_responder,
        ),
        ChatRule(
            "scene",
            lambda req: req.user_text.startswith(
                "You are an Advertising Marketing Expert. You are given two product images"
            ),
            _scene_responder,
        ),
        ChatRule(
            "layout",
            lambda req: (req.system_prompt or "").startswith(
                "Instruction: Given a sentence prompt"
            ),
            _layout_responder,
        ),
        ChatRule(
            "judge",
            lambda req: (req.system_prompt or "").startswith(
                "Instruction: Given a text prompt and two product images"
            ),
            _judge_responder,
        ),
    ]


# ---------------------------------------------------------------------------
# Depth


def plane_normal(tilt_deg: float) -> np.ndarray:
    """Floor-up normal in the camera frame (y down, z forward), camera pitched
    down by `tilt_deg`. Satisfies the y <= 0 orientation convention."""
    t = math.radians(tilt_deg)
    return np.array([0.0, -math.cos(t), -math.sin(t)])


def synthetic_plane_depth(
    width: int,
    height: int,
    tilt_deg: float,
    camera_height_m: float = 1.5,
    fov_deg: float = 55.0,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> DepthMap:
    """Metric z-depth of an infinite floor plane seen by a pinhole camera.

    The camera sits `camera_height_m` above the floor and is pitched down by
    `tilt_deg`. Pixels whose ray never hits the floor are marked invalid.
    Optional multiplicative Gaussian noise models a noisy depth backend.
    """
    fx = width / (2.0 * math.tan(math.radians(fov_deg) / 2.0))
    fy = fx
    cx, cy = width / 2.0, height / 2.0
    u = np.arange(width, dtype=np.float64)
    v = np.arange(height, dtype=np.float64)
    rx, ry = np.meshgrid((u - cx) / fx, (v - cy) / fy)
    n = plane_normal(tilt_deg)
    # ray r = (rx, ry, 1); floor plane is n.X = -camera_height
    denom = -(n[1] * ry + n[2])
    valid = denom > 1e-9
    depth = np.zeros((height, width), dtype=np.float64)
    depth[valid] = camera_height_m / denom[valid]
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        depth[valid] *= 1.0 + noise_sigma * rng.standard_normal(int(valid.sum()))
    return DepthMap(width=width, height=height, values=depth.astype(np.float32), valid_mask=valid)


class MockDepthBackend:
    """Synthesizes planar depth; the per-image tilt is either fixed or derived
    deterministically from the image content."""

    def __init__(
        self,
        tilt_deg: Optional[float] = None,
        tilt_range: tuple[float, float] = (0.0, 45.0),
        camera_height_m: float = 1.5,
        fov_deg: float = 55.0,
        noise_sigma: float = 0.0,
        seed: int = 0,
    ):
        self.tilt_deg = tilt_deg
        self.tilt_range = tilt_range
        self.camera_height_m = camera_height_m
        self.fov_deg = fov_deg
        self.noise_sigma = noise_sigma
        self.seed = seed

    def tilt_for(self, image: np.ndarray) -> float:
        if self.tilt_deg is not None:
            return self.tilt_deg
        lo, hi = self.tilt_range
        frac = (_digest_int(self.seed, image) % 10_000) / 10_000.0
        return round(lo + frac * (hi - lo), 2)

    def estimate(self, image: np.ndarray) -> DepthMap:
        h, w = image.shape[:2]
        return synthetic_plane_depth(
            w,
            h,
            self.tilt_for(image),
            camera_height_m=self.camera_height_m,
            fov_deg=self.fov_deg,
            noise_sigma=self.noise_sigma,
            seed=_digest_int(self.seed, image, "noise"),
        )


# ---------------------------------------------------------------------------
# Segmentation


class MockSegmentationBackend:
    """Near-white pixels are background; everything else is foreground."""

    def __init__(self, white_threshold: int = WHITE_THRESHOLD):
        self.white_threshold = white_threshold

    def segment(self, image: np.ndarray, query: str) -> SegmentationMask:
        del query  # content-free mock: the threshold answers every query
        h, w = image.shape[:2]
        if image.ndim == 2:
            fg = image < self.white_threshold
        else:
            fg = ~np.all(image[..., :3] >= self.white_threshold, axis=-1)
        return SegmentationMask(width=w, height=h, foreground=fg)


# ---------------------------------------------------------------------------
# Inpainting


class MockInpaintBackend:
    """Fills mask-true pixels with a seeded procedural texture.

    Mask-false pixels are copied from the canvas byte-exactly, which makes
    preservation checks meaningful without a diffusion backend.
    """

    def __init__(self, seed_salt: int = 0):
        self.seed_salt = seed_salt

    def inpaint(self, req: InpaintRequest) -> np.ndarray:
        h, w = req.canvas.shape[:2]
        rng = np.random.default_rng(
            _digest_int(self.seed_salt, req.seed, req.prompt, req.negative_prompt, req.controls, req.steps)
        )
        coarse = rng.integers(40, 216, size=(h // 32, w // 32, 3), dtype=np.uint8)
        texture = np.kron(coarse, np.ones((32, 32, 1), dtype=np.uint8))
        # vertical shading so outputs read as "a room" rather than static
        shade = np.linspace(1.15, 0.8, h)[:, None, None]
        texture = np.clip(texture.astype(np.float64) * shade, 0, 255).astype(np.uint8)
        out = req.canvas.copy()
        out[req.inpaint_mask] = texture[req.inpaint_mask]
        return out
