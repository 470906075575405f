"""Bundled prompt templates and fill helpers.

Templates are stored verbatim as text assets. Fill slots use {name} tokens
replaced literally, so brace characters that belong to the prompt text (the
JSON shape examples) are left untouched.
"""

from __future__ import annotations

from importlib import resources

PRODUCT_PROFILE = "product_profile"
SCENE_BRIEF = "scene_brief"
LAYOUT_SYSTEM = "layout_system"
LAYOUT_USER = "layout_user"
JUDGE_AUTHENTICITY = "judge_authenticity"
JUDGE_VISUAL_APPEAL = "judge_visual_appeal"
JUDGE_LAYOUT_QUALITY = "judge_layout_quality"
JUDGE_THEME_ALIGNMENT = "judge_theme_alignment"

ALL_TEMPLATE_NAMES = [
    PRODUCT_PROFILE,
    SCENE_BRIEF,
    LAYOUT_SYSTEM,
    LAYOUT_USER,
    JUDGE_AUTHENTICITY,
    JUDGE_VISUAL_APPEAL,
    JUDGE_LAYOUT_QUALITY,
    JUDGE_THEME_ALIGNMENT,
]

# Sentence inserted after the first sentence of a judge prompt when the ad
# image carries set-of-mark box annotations.
SOM_SENTENCE = (
    "The two products are highlighted separately with a red and a green "
    "bounding box in the ad image."
)

# Appended once when a judge answer violates the score JSON protocol.
JUDGE_RETRY_SUFFIX = "Respond with only the JSON object."

DEFAULT_NEGATIVE_PROMPT = "deformed, extra limbs, text, watermark, low quality"

_cache: dict[str, str] = {}


def load(name: str) -> str:
    """Return a bundled template by name, stripped of the trailing newline."""
    if name not in _cache:
        text = resources.files(__package__).joinpath(f"{name}.txt").read_text("utf-8")
        _cache[name] = text.rstrip("\n")
    return _cache[name]


def fill(template: str, values: dict[str, str]) -> str:
    """Replace each {key} token literally; unknown braces stay as-is."""
    out = template
    for key, value in values.items():
        token = "{" + key + "}"
        if token not in out:
            raise KeyError(f"template has no slot {token}")
        out = out.replace(token, value)
    return out


def insert_after_first_sentence(text: str, sentence: str) -> str:
    """Insert `sentence` after the first period-terminated sentence of `text`."""
    idx = text.find(". ")
    if idx < 0:
        return text + " " + sentence
    return text[: idx + 1] + " " + sentence + text[idx + 1 :]
