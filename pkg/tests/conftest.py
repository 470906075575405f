from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image, ImageDraw

from adforge.catalog import build_image_index, ingest_catalog
from adforge.gateway import ModelGateway
from adforge.gateway.mock import (
    MockChatBackend,
    MockDepthBackend,
    MockInpaintBackend,
    MockSegmentationBackend,
    _digest,
)
from adforge.orchestrator import ServiceConfig, StudioService
from adforge.orchestrator.pipeline import PipelineSettings

FIXTURES = Path(__file__).parent / "fixtures"

# (category, keyword base, shape) -> mock profiling lands them in these rooms
PRODUCT_SHAPES = {
    "SOFA": ("Gray Fabric Sofa", "rect"),
    "LAMP": ("Brass Floor Lamp", "ellipse"),
    "CHAIR": ("Oak Accent Chair", "rect"),
    "SHELF": ("Walnut Book Shelf", "rect"),
    "BED": ("Queen Platform Bed", "rect"),
    "TOWEL": ("Cotton Bath Towel", "rect"),
}


def draw_product(shape: str, color, size=(128, 128)) -> Image.Image:
    """White-background product photo, silhouette kept in the lower half so a
    level mock camera still sees valid floor depth under it."""
    im = Image.new("RGB", size, (255, 255, 255))
    d = ImageDraw.Draw(im)
    w, h = size
    if shape == "rect":
        d.rectangle([int(0.2 * w), int(0.5 * h), int(0.8 * w), int(0.95 * h)], fill=color)
    else:
        d.ellipse([int(0.3 * w), int(0.42 * h), int(0.7 * w), int(0.95 * h)], fill=color)
    return im


def product_doc(item_id: str, title: str, category: str, image_id: str) -> dict:
    return {
        "item_id": item_id,
        "item_name": [{"language_tag": "en_US", "value": title}],
        "product_type": [{"value": category}],
        "main_image_id": image_id,
        "node": [{"node_id": 1, "node_name": f"/Categories/Furniture/{category.title()}/{category}"}],
    }


def build_fixture_catalog(tmp_path: Path, counts: dict[str, int]):
    """Catalog of synthetic products; `counts` maps category -> product count."""
    img_dir = tmp_path / "images"
    img_dir.mkdir(parents=True, exist_ok=True)
    docs = []
    for category, count in counts.items():
        title_base, shape = PRODUCT_SHAPES[category]
        for i in range(count):
            item_id = f"{category}{i:03d}"
            image_id = f"img_{item_id}"
            color = (40 + (i * 37) % 180, 60 + (i * 53) % 150, 50 + (i * 71) % 160)
            draw_product(shape, color).save(img_dir / f"{image_id}.png")
            docs.append(product_doc(item_id, f"{title_base} {i}", category, image_id))
    return ingest_catalog([json.dumps(d) for d in docs], image_index=build_image_index(img_dir))


class FixedTiltDepthBackend(MockDepthBackend):
    """Mock depth whose per-image tilt comes from an explicit mapping."""

    def __init__(self, tilts: dict[str, float], default: float = 10.0, **kwargs):
        super().__init__(tilt_deg=None, **kwargs)
        self.tilts = tilts
        self.default = default

    def tilt_for(self, image: np.ndarray) -> float:
        return self.tilts.get(_digest(image), self.default)


def mock_gateway(tilt_deg: float | None = 10.0, chat_rules=None, noise_sigma: float = 0.0) -> ModelGateway:
    return ModelGateway(
        chat=MockChatBackend(rules=chat_rules),
        depth=MockDepthBackend(tilt_deg=tilt_deg, noise_sigma=noise_sigma),
        segmentation=MockSegmentationBackend(),
        inpaint=MockInpaintBackend(),
    )


@pytest.fixture
def gateway():
    return mock_gateway()


@pytest.fixture
def living_room_catalog(tmp_path):
    return build_fixture_catalog(tmp_path, {"SOFA": 4, "LAMP": 4})


def make_service(tmp_path: Path, catalog, data_name: str = "data", **settings_overrides) -> StudioService:
    settings = PipelineSettings(**settings_overrides)
    config = ServiceConfig(data_dir=tmp_path / data_name, settings=settings)
    service = StudioService(config, catalog=catalog)
    service.gateway = mock_gateway()
    return service


@pytest.fixture
def living_room_service(tmp_path, living_room_catalog):
    return make_service(tmp_path, living_room_catalog)


def load_abo_sample() -> dict:
    return json.loads((FIXTURES / "abo_sample.json").read_text("utf-8"))
