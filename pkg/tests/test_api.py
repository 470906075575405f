"""Recorded request/response contract suite for the HTTP API, driven against
a mock-backed service."""

import json
import re
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from adforge.orchestrator import create_app

from conftest import FIXTURES, make_service

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture
def client(tmp_path, living_room_catalog):
    service = make_service(tmp_path, living_room_catalog)
    service.profile_all()
    return TestClient(create_app(service))


def _substitute(value, variables):
    if isinstance(value, str):
        def repl(match):
            name = match.group(1)
            if name not in variables:
                raise KeyError(f"contract variable ${name} not captured yet")
            return str(variables[name])

        if re.fullmatch(r"\$(\w+)", value):
            return variables[value[1:]]
        return re.sub(r"\$(\w+)", repl, value)
    if isinstance(value, dict):
        return {k: _substitute(v, variables) for k, v in value.items()}
    if isinstance(value, list):
        return [_substitute(v, variables) for v in value]
    return value


def _lookup(payload, path: str):
    """Dotted/indexed lookup: "record_ids[0]", "spec.count"."""
    current = payload
    for part in path.replace("]", "").split("."):
        if "[" in part:
            key, index = part.split("[")
            if key:
                current = current[key]
            current = current[int(index)]
        else:
            current = current[part]
    return current


def _collect(payload, path: str):
    """Collection lookup: "categories[].name" -> list of name fields."""
    key, _, field = path.partition("[].")
    return [item[field] for item in payload[key]]


def run_contract(client, steps):
    variables = {}
    for step in steps:
        name = step["name"]
        path = _substitute(step["path"], variables)
        body = _substitute(step.get("body"), variables) if "body" in step else None
        if step["method"] == "GET":
            response = client.get(path)
        else:
            response = client.post(path, json=body)
        assert response.status_code == step["expect_status"], (
            f"{name}: {response.status_code} != {step['expect_status']}: {response.text[:300]}"
        )

        if step.get("expect_png"):
            assert response.content.startswith(PNG_MAGIC), f"{name}: not a PNG"
            assert response.headers["content-type"] == "image/png"
            continue

        payload = response.json()
        for key, expected in _substitute(step.get("expect", {}), variables).items():
            assert _lookup(payload, key) == expected, (
                f"{name}: {key} = {_lookup(payload, key)!r}, expected {expected!r}"
            )
        for key in step.get("expect_keys", []):
            assert _lookup(payload, key) is not None or key in payload, f"{name}: missing {key}"
        for key, length in step.get("expect_len", {}).items():
            assert len(_lookup(payload, key)) == length, f"{name}: len({key}) != {length}"
        for key, members in step.get("expect_contains", {}).items():
            values = _collect(payload, key)
            for member in members:
                assert member in values, f"{name}: {member!r} not in {key} ({values})"
        for variable, source in step.get("capture", {}).items():
            variables[variable] = _lookup(payload, source)


def contract_steps():
    return json.loads((FIXTURES / "api_contract.json").read_text("utf-8"))


def test_api_contract_suite(client):
    run_contract(client, contract_steps())


def test_judge_score_is_in_range(client):
    spec = {
        "room_type": "living_room",
        "style": "Coastal",
        "category_a": "SOFA",
        "category_b": "LAMP",
        "count": 1,
        "seed": 7,
    }
    batch_id = client.post("/batches", json=spec).json()["batch_id"]
    record_id = client.post(f"/batches/{batch_id}/run").json()["record_ids"][0]
    for dimension in ("authenticity", "visual_appeal", "layout_quality", "theme_alignment"):
        verdict = client.post(
            f"/generations/{record_id}/judge", json={"dimension": dimension}
        ).json()
        assert 1 <= verdict["score"] <= 5


def test_regenerate_control_strength_zero(client):
    spec = {
        "room_type": "living_room",
        "style": "Bohemian",
        "category_a": "SOFA",
        "category_b": "LAMP",
        "count": 1,
        "seed": 3,
    }
    batch_id = client.post("/batches", json=spec).json()["batch_id"]
    record_id = client.post(f"/batches/{batch_id}/run").json()["record_ids"][0]
    child = client.post(
        f"/generations/{record_id}/regenerate", json={"control_strength": 0.0}
    ).json()
    assert child["control_strength"] == 0.0
    assert child["parent_id"] == record_id
