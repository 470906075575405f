import json

from click.testing import CliRunner

from adforge.cli import main

from conftest import build_fixture_catalog


def _write_config(tmp_path, catalog_path):
    config = {
        "data_dir": str(tmp_path / "data"),
        "catalog": str(catalog_path),
        "backends": {
            "chat": {"kind": "mock"},
            "depth": {"kind": "mock", "options": {"tilt_deg": 10.0}},
            "segmentation": {"kind": "mock"},
            "inpaint": {"kind": "mock"},
        },
        "settings": {"workers": 2},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def test_cli_full_workflow(tmp_path):
    runner = CliRunner()
    catalog = build_fixture_catalog(tmp_path, {"SOFA": 2, "LAMP": 2})

    # ingest from raw docs written to disk
    raw_path = tmp_path / "raw.jsonl"
    with raw_path.open("w") as f:
        for record in catalog.records.values():
            doc = {
                "item_id": record.item_id,
                "item_name": [{"language_tag": "en_US", "value": record.title}],
                "product_type": [{"value": record.product_type}],
                "main_image_id": record.main_image_id,
                "node": [{"node_id": 1, "node_name": p} for p in record.node_paths],
            }
            f.write(json.dumps(doc) + "\n")
    catalog_path = tmp_path / "catalog.jsonl"
    result = runner.invoke(
        main,
        ["ingest", "--records", str(raw_path), "--images", str(tmp_path / "images"),
         "--out", str(catalog_path)],
    )
    assert result.exit_code == 0, result.output
    assert "ingested 4 records" in result.output

    config_path = _write_config(tmp_path, catalog_path)

    result = runner.invoke(main, ["profile", "--config", str(config_path)])
    assert result.exit_code == 0, result.output
    assert "4 products profiled" in result.output

    result = runner.invoke(
        main,
        ["pairs", "--config", str(config_path), "--room", "living_room",
         "--cat-a", "SOFA", "--cat-b", "LAMP", "--threshold", "15"],
    )
    assert result.exit_code == 0, result.output
    assert "4 compatible" in result.output

    result = runner.invoke(
        main,
        ["batch", "create", "--config", str(config_path), "--room", "living_room",
         "--style", "Modern", "--cat-a", "SOFA", "--cat-b", "LAMP",
         "--count", "2", "--seed", "5"],
    )
    assert result.exit_code == 0, result.output
    batch_id = result.output.strip()

    result = runner.invoke(main, ["batch", "run", "--config", str(config_path), batch_id])
    assert result.exit_code == 0, result.output
    assert "2/2 generations succeeded" in result.output

    result = runner.invoke(main, ["batch", "status", "--config", str(config_path), batch_id])
    assert result.exit_code == 0
    status = json.loads(result.output)
    assert status["status"] == "done" and len(status["record_ids"]) == 2
    record_id = status["record_ids"][0]

    result = runner.invoke(
        main,
        ["regen", "--config", str(config_path), record_id,
         "--background-prompt", "coastal beach house interior"],
    )
    assert result.exit_code == 0, result.output
    child_id = result.output.strip()
    assert child_id and child_id != record_id

    result = runner.invoke(main, ["gallery", "--config", str(config_path), "--room", "living_room"])
    assert result.exit_code == 0, result.output
    assert "lamp + sofa" in result.output

    result = runner.invoke(
        main,
        ["eval", "run", "--config", str(config_path), "--dims", "authenticity,visual_appeal"],
    )
    assert result.exit_code == 0, result.output
    assert "verdicts appended" in result.output

    result = runner.invoke(
        main,
        ["eval", "report", "--config", str(config_path), "--dimension", "authenticity",
         "--format", "markdown"],
    )
    assert result.exit_code == 0, result.output
    assert "| authenticity |" in result.output and "Ours" in result.output


def test_cli_golden_layouts(tmp_path):
    runner = CliRunner()
    out = tmp_path / "golden.json"
    result = runner.invoke(main, ["golden-layouts", "--out", str(out), "--cases", "10"])
    assert result.exit_code == 0, result.output
    entries = json.loads(out.read_text())
    assert len(entries) == 10
    for entry in entries:
        assert entry["expected"]["width"] <= entry["box"]["width_px"]
        assert entry["expected"]["height"] <= entry["box"]["height_px"]


def test_committed_golden_fixture_matches_current_placement_math(tmp_path):
    """The frontend's golden fixture must track the server compose rules."""
    from pathlib import Path

    committed = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures" / "golden_layouts.json"
    runner = CliRunner()
    out = tmp_path / "golden.json"
    result = runner.invoke(main, ["golden-layouts", "--out", str(out), "--cases", "10"])
    assert result.exit_code == 0
    assert json.loads(out.read_text()) == json.loads(committed.read_text())
