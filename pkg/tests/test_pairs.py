import numpy as np
import pytest

from adforge.errors import NoCompatiblePairs, UnknownCategory
from adforge.gateway import ModelGateway
from adforge.gateway.mock import (
    MockChatBackend,
    MockInpaintBackend,
    MockSegmentationBackend,
    _digest,
)
from adforge.pairing import TiltCache, pair_candidates, viewpoint_compatible
from adforge.rooms import RoomType

from conftest import FixedTiltDepthBackend, build_fixture_catalog, make_service


def _gateway_with_tilts(tilts: dict[str, float], default=10.0) -> ModelGateway:
    return ModelGateway(
        chat=MockChatBackend(),
        depth=FixedTiltDepthBackend(tilts, default=default),
        segmentation=MockSegmentationBackend(),
        inpaint=MockInpaintBackend(),
    )


def _profiles_for(service):
    service.profile_all()
    return service.profiles.as_dict()


def test_all_pairs_compatible_at_equal_tilt(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 2, "LAMP": 2})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)
    gateway = _gateway_with_tilts({}, default=10.0)  # every image: tilt 10
    result = pair_candidates(
        catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP", threshold_deg=15.0
    )
    assert len(result.pairs) == 4
    # every image shows the same plane, so recovered tilts agree to float noise
    assert all(p.angle_diff_deg < 0.01 and p.compatible for p in result.pairs)
    assert all(p.item_a < p.item_b for p in result.pairs)


def test_top_down_rug_rejected_against_frontal_chair(tmp_path):
    # a rug is photographed top-down (tilt ~85), the chair frontally (~10)
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 1, "LAMP": 1})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)
    rug_digest = _digest(catalog.load_main_image("SOFA000"))
    gateway = _gateway_with_tilts({rug_digest: 85.0}, default=10.0)
    with pytest.raises(NoCompatiblePairs) as err:
        pair_candidates(
            catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP", threshold_deg=15.0
        )
    rejects = err.value.rejects
    assert len(rejects) == 1 and rejects[0].reason == "viewpoint"
    assert "75" in rejects[0].detail  # |85 - 10| = 75 deg


def test_pairs_match_brute_force_filter(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 4, "LAMP": 4})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)
    # scatter tilts so some cross pairs pass and some fail
    tilts = {}
    for i, item_id in enumerate(sorted(catalog.records)):
        tilts[_digest(catalog.load_main_image(item_id))] = float(7 * i)
    gateway = _gateway_with_tilts(tilts)
    threshold = 15.0
    result = pair_candidates(
        catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP",
        threshold_deg=threshold, seed=11,
    )

    # independent brute force: all cross pairs, same-room + scalar tilt check
    item_tilt = {i: tilts[_digest(catalog.load_main_image(i))] for i in catalog.records}
    expected = set()
    for a in catalog.category_items("SOFA"):
        for b in catalog.category_items("LAMP"):
            if a == b:
                continue
            if profiles[a].room_type != RoomType.living_room:
                continue
            if profiles[b].room_type != RoomType.living_room:
                continue
            if abs(item_tilt[a] - item_tilt[b]) <= threshold:
                expected.add((min(a, b), max(a, b)))
    assert {p.key() for p in result.pairs} == expected
    assert len(result.pairs) + len(result.rejects) == 16


def test_pairs_count_cap_and_seed_determinism(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 3, "LAMP": 3})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)
    gateway = _gateway_with_tilts({})
    first = pair_candidates(
        catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP", count=4, seed=3
    )
    second = pair_candidates(
        catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP", count=4, seed=3
    )
    assert [p.key() for p in first.pairs] == [p.key() for p in second.pairs]
    assert len(first.pairs) == 4


def test_pairs_unknown_category(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 2})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)
    with pytest.raises(UnknownCategory):
        pair_candidates(catalog, profiles, _gateway_with_tilts({}), RoomType.living_room, "SOFA", "JACUZZI")


def test_pairs_room_mismatch_never_returned(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 2, "BED": 2})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)  # beds profile into bedroom
    gateway = _gateway_with_tilts({})
    with pytest.raises(NoCompatiblePairs):
        pair_candidates(catalog, profiles, gateway, RoomType.living_room, "SOFA", "BED")
    # and the other way around: requesting bedroom rejects the sofas
    with pytest.raises(NoCompatiblePairs):
        pair_candidates(catalog, profiles, gateway, RoomType.bedroom, "SOFA", "BED")


def test_tilt_cache_reused_across_calls(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 2, "LAMP": 2})
    service = make_service(tmp_path, catalog)
    profiles = _profiles_for(service)

    calls = []

    class CountingDepth(FixedTiltDepthBackend):
        def estimate(self, image):
            calls.append(1)
            return super().estimate(image)

    gateway = ModelGateway(
        chat=MockChatBackend(),
        depth=CountingDepth({}, default=10.0),
        segmentation=MockSegmentationBackend(),
        inpaint=MockInpaintBackend(),
    )
    cache = TiltCache(tmp_path / "tilts.json")
    pair_candidates(
        catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP", tilt_cache=cache
    )
    assert len(calls) == 4  # once per product, not per pair
    pair_candidates(
        catalog, profiles, gateway, RoomType.living_room, "SOFA", "LAMP", tilt_cache=cache
    )
    assert len(calls) == 4  # cache persisted, nothing recomputed


def test_viewpoint_compatible_uses_tilt_estimates_symmetrically(tmp_path):
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 1, "LAMP": 1})
    service = make_service(tmp_path, catalog)
    _profiles_for(service)
    gateway = _gateway_with_tilts({}, default=25.0)
    from adforge.pairing import estimate_product_tilt

    a = estimate_product_tilt(gateway, catalog.load_main_image("SOFA000"))
    b = estimate_product_tilt(gateway, catalog.load_main_image("LAMP000"))
    assert viewpoint_compatible(a, b, 5.0) == viewpoint_compatible(b, a, 5.0)
