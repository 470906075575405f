"""Command-line entry points mirroring the HTTP API."""

from __future__ import annotations

import glob as globlib
import json
import logging
from pathlib import Path

import click

from .catalog import Catalog, build_image_index, ingest_catalog
from .evaluation import EvalDimension, render_table_csv, render_table_markdown
from .orchestrator import BatchSpec, ServiceConfig, StudioService
from .orchestrator.records import GenerationRecord
from .pairing import pair_candidates
from .rooms import parse_room_type


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """Batch generation of two-product lifestyle ad images."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format="%(message)s")


def _service(config_path: str | None) -> StudioService:
    if config_path:
        return StudioService(ServiceConfig.from_file(config_path))
    return StudioService(ServiceConfig())


@main.command()
@click.option("--records", "records_path", required=True, type=click.Path(exists=True))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def ingest(records_path: str, images_dir: str, out_path: str):
    """Ingest a JSON-lines file of raw product records plus an image directory."""
    image_index = build_image_index(images_dir)
    with open(records_path, "r", encoding="utf-8") as f:
        catalog = ingest_catalog(f, image_index=image_index)
    catalog.save(out_path)
    click.echo(
        f"ingested {len(catalog.records)} records, "
        f"{len(catalog.category_index)} categories, "
        f"{len(catalog.skip_diagnostics)} skipped -> {out_path}"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--catalog", "catalog_path", type=click.Path(exists=True))
def profile(config_path, catalog_path):
    """Profile every catalog product (room type, description, dimensions)."""
    service = _service(config_path)
    if catalog_path:
        service.catalog = Catalog.load(catalog_path)
    total = service.profile_all()
    click.echo(f"{total} products profiled -> {service.profiles.path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--room", required=True)
@click.option("--cat-a", required=True)
@click.option("--cat-b", required=True)
@click.option("--threshold", default=15.0, show_default=True)
@click.option("--count", default=None, type=int)
@click.option("--seed", default=0, type=int)
def pairs(config_path, room, cat_a, cat_b, threshold, count, seed):
    """List viewpoint-compatible product pairs for two categories."""
    service = _service(config_path)
    result = pair_candidates(
        service.catalog,
        service.profiles.as_dict(),
        service.gateway,
        parse_room_type(room),
        cat_a,
        cat_b,
        threshold_deg=threshold,
        count=count,
        seed=seed,
        tilt_cache=service.tilts,
        ransac=service.config.settings.ransac_params(),
    )
    for pair in result.pairs:
        click.echo(f"{pair.item_a} + {pair.item_b}  (tilt diff {pair.angle_diff_deg:.2f} deg)")
    click.echo(f"{len(result.pairs)} compatible, {len(result.rejects)} rejected")


@main.group()
def batch():
    """Create, run, and inspect generation batches."""


@batch.command("create")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--room", required=True)
@click.option("--style", required=True)
@click.option("--cat-a", required=True)
@click.option("--cat-b", required=True)
@click.option("--count", default=8, show_default=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--ablate", multiple=True, help="Ablation flags (A1..A4), repeatable.")
@click.option("--threshold", default=15.0, type=float)
@click.option("--control-strength", default=0.2, type=float)
def batch_create(config_path, room, style, cat_a, cat_b, count, seed, ablate, threshold, control_strength):
    service = _service(config_path)
    spec = BatchSpec(
        room_type=parse_room_type(room),
        style=style,
        category_a=cat_a,
        category_b=cat_b,
        count=count,
        seed=seed,
        ablations=frozenset(ablate),
        threshold_deg=threshold,
        control_strength=control_strength,
    )
    click.echo(service.create_batch(spec))


@batch.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.argument("batch_id")
def batch_run(config_path, batch_id):
    service = _service(config_path)
    records = service.run_batch(batch_id)
    ok = sum(1 for r in records if r.status.ok)
    for record in records:
        state = "ok" if record.status.ok else f"failed({record.status.stage})"
        click.echo(f"{record.id}  {state}")
    click.echo(f"{ok}/{len(records)} generations succeeded")


@batch.command("status")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.argument("batch_id")
def batch_status(config_path, batch_id):
    service = _service(config_path)
    click.echo(json.dumps(service.get_batch(batch_id), indent=2, sort_keys=True))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.argument("generation_id")
@click.option("--layout-prompt")
@click.option("--background-prompt")
@click.option("--control-strength", type=float)
@click.option("--seed", type=int)
@click.option("--remove-white-bg/--keep-white-bg", default=None)
def regen(config_path, generation_id, layout_prompt, background_prompt, control_strength, seed, remove_white_bg):
    """Regenerate one ad with overrides; only downstream stages re-run."""
    service = _service(config_path)
    overrides = {}
    if layout_prompt is not None:
        overrides["layout_prompt"] = layout_prompt
    if background_prompt is not None:
        overrides["background_prompt"] = background_prompt
    if control_strength is not None:
        overrides["control_strength"] = control_strength
    if seed is not None:
        overrides["seed"] = seed
    if remove_white_bg is not None:
        overrides["remove_white_bg"] = remove_white_bg
    record = service.regenerate(generation_id, overrides)
    click.echo(record.id)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--room", required=True)
def gallery(config_path, room):
    """Final gallery: status-ok generations grouped by category pair."""
    service = _service(config_path)
    for pair, ids in service.final_gallery(parse_room_type(room)):
        click.echo(f"{pair[0]} + {pair[1]}: {len(ids)}")
        for generation_id in ids:
            click.echo(f"  {generation_id}")


@main.group("eval")
def eval_group():
    """Judge generated ads and aggregate score tables."""


@eval_group.command("run")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--records", "records_glob", help="Glob of record JSONL files; defaults to the service log.")
@click.option("--dims", default="all", show_default=True)
@click.option("--judge", "judge_model", default="default", show_default=True)
@click.option("--som", is_flag=True)
def eval_run(config_path, records_glob, dims, judge_model, som):
    service = _service(config_path)
    record_ids = []
    if records_glob:
        for path in sorted(globlib.glob(records_glob)):
            with open(path, "r", encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        record = GenerationRecord.from_dict(json.loads(line))
                        if record.status.ok:
                            record_ids.append(record.id)
    else:
        record_ids = [r.id for r in service.records.all() if r.status.ok]
    dimensions = list(EvalDimension) if dims == "all" else [EvalDimension(d) for d in dims.split(",")]
    scored = 0
    for generation_id in record_ids:
        for dimension in dimensions:
            service.judge_record(generation_id, dimension, judge_model=judge_model, som=som)
            scored += 1
    click.echo(f"{scored} verdicts appended -> {service.scores_path}")


@eval_group.command("report")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--dimension", required=True)
@click.option("--format", "fmt", default="markdown", type=click.Choice(["markdown", "csv"]))
def eval_report(config_path, dimension, fmt):
    service = _service(config_path)
    table = service.aggregate_table(EvalDimension(dimension))
    click.echo(render_table_markdown(table) if fmt == "markdown" else render_table_csv(table))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(config_path, host, port):
    """Serve the studio HTTP API."""
    import uvicorn

    from .orchestrator.api import create_app

    uvicorn.run(create_app(_service(config_path)), host=host, port=port)


@main.command("golden-layouts")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--cases", default=10, show_default=True, type=int)
def golden_layouts(out_path, cases):
    """Export letterbox placement fixtures for the studio frontend tests."""
    from .layout import LayoutBox, placement_rect
    import random

    rng = random.Random(7)
    entries = []
    for _ in range(cases):
        box = LayoutBox(
            label="product",
            width_px=rng.randint(40, 600),
            height_px=rng.randint(40, 600),
            left_px=rng.randint(0, 400),
            top_px=rng.randint(0, 400),
            layer=rng.randint(0, 1),
        )
        cut_w, cut_h = rng.randint(16, 800), rng.randint(16, 800)
        x, y, w, h = placement_rect(box, cut_w, cut_h)
        entries.append(
            {
                "box": box.to_dict(),
                "cutout": {"width": cut_w, "height": cut_h},
                "expected": {"x": x, "y": y, "width": w, "height": h},
            }
        )
    Path(out_path).write_text(json.dumps(entries, indent=2, sort_keys=True), "utf-8")
    click.echo(f"{cases} golden layouts -> {out_path}")


if __name__ == "__main__":
    main()
