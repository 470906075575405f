"""Extraction of JSON answers from chatty model output."""

from __future__ import annotations

import json

from ..errors import UnparseableModelOutput


def parse_json_answer(raw: str):
    """Return the first balanced JSON object embedded in `raw`.

    Tolerates markdown code fences, leading prose, and trailing junk. Scans
    brace-balance with string/escape awareness so braces inside string values
    do not confuse the extraction.
    """
    start = raw.find("{")
    while start >= 0:
        candidate = _balanced_object(raw, start)
        if candidate is not None:
            try:
                return json.loads(candidate)
            except json.JSONDecodeError:
                pass
        start = raw.find("{", start + 1)
    raise UnparseableModelOutput("no balanced JSON object found in model output", raw=raw)


def _balanced_object(text: str, start: int) -> str | None:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def require_keys(obj, keys, raw: str = ""):
    """Assert `obj` is a JSON object holding every key in `keys`."""
    if not isinstance(obj, dict):
        raise UnparseableModelOutput(f"expected a JSON object, got {type(obj).__name__}", raw=raw)
    for key in keys:
        if key not in obj:
            raise UnparseableModelOutput(f"missing key {key!r} in model answer", raw=raw)
    return obj
