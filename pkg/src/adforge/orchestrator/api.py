"""HTTP API over the studio service. JSON bodies throughout; artifact
endpoints answer PNG bytes."""

from __future__ import annotations

from fastapi import Body, FastAPI, Response
from fastapi.responses import JSONResponse

from ..errors import (
    AdforgeError,
    BackendUnavailable,
    InvalidSpec,
    NoCompatiblePairs,
    UnknownBatch,
    UnknownCategory,
    UnknownGeneration,
)
from ..evaluation import EvalDimension
from ..rooms import RoomType, VALID_ROOM_NAMES, parse_room_type
from .records import BatchSpec
from .service import StudioService

_ERROR_CODES = [
    ((UnknownCategory, UnknownGeneration, UnknownBatch), 404),
    ((NoCompatiblePairs,), 409),
    ((BackendUnavailable,), 502),
    ((InvalidSpec,), 400),
]


def create_app(service: StudioService) -> FastAPI:
    app = FastAPI(title="adforge", version="0.1.0")

    @app.exception_handler(AdforgeError)
    async def _adforge_error(request, exc: AdforgeError):
        status = 400
        for types, code in _ERROR_CODES:
            if isinstance(exc, types):
                status = code
                break
        return JSONResponse({"error": type(exc).__name__, "detail": str(exc)}, status_code=status)

    @app.exception_handler(ValueError)
    async def _value_error(request, exc: ValueError):
        return JSONResponse({"error": "ValueError", "detail": str(exc)}, status_code=400)

    @app.get("/health")
    def health():
        return {"status": "ok", "records": len(service.records.all())}

    @app.get("/rooms")
    def rooms():
        return {"rooms": VALID_ROOM_NAMES}

    @app.get("/styles")
    def styles():
        return {"styles": service.config.styles}

    @app.get("/rooms/{room}/categories")
    def room_categories(room: str):
        room_type = parse_room_type(room)
        return {
            "room_type": room_type.value,
            "categories": [
                {"name": name, "samples": samples}
                for name, samples in service.list_categories(room_type)
            ],
        }

    @app.post("/batches")
    def create_batch(payload: dict = Body(...)):
        spec = BatchSpec.from_dict(payload)
        batch_id = service.create_batch(spec)
        return {"batch_id": batch_id, "status": service.get_batch(batch_id)["status"]}

    @app.post("/batches/{batch_id}/run")
    def run_batch(batch_id: str):
        records = service.run_batch(batch_id)
        batch = service.get_batch(batch_id)
        return {
            "batch_id": batch_id,
            "status": batch["status"],
            "record_ids": [r.id for r in records],
            "error": batch.get("error", ""),
        }

    @app.get("/batches/{batch_id}")
    def get_batch(batch_id: str):
        return service.get_batch(batch_id)

    @app.get("/generations/{generation_id}")
    def get_generation(generation_id: str):
        return service.get_record(generation_id).to_dict()

    @app.get("/generations/{generation_id}/image")
    def get_generation_image(generation_id: str):
        return Response(service.artifact_bytes(generation_id, "ad"), media_type="image/png")

    @app.get("/generations/{generation_id}/canvas")
    def get_generation_canvas(generation_id: str):
        return Response(service.artifact_bytes(generation_id, "canvas"), media_type="image/png")

    @app.post("/generations/{generation_id}/regenerate")
    def regenerate(generation_id: str, payload: dict = Body(default={})):
        record = service.regenerate(generation_id, payload)
        return record.to_dict()

    @app.get("/rooms/{room}/final-gallery")
    def final_gallery(room: str):
        room_type = parse_room_type(room)
        return {
            "room_type": room_type.value,
            "groups": [
                {"categories": list(pair), "generation_ids": ids}
                for pair, ids in service.final_gallery(room_type)
            ],
        }

    @app.post("/collections/{name}/entries")
    def collection_add(name: str, payload: dict = Body(...)):
        if "batch_id" in payload:
            return service.collection_add_all(name, payload["batch_id"])
        return service.collection_add(name, list(payload.get("ids", [])))

    @app.get("/collections/{name}")
    def collection_get(name: str):
        return service.collection_get(name)

    @app.post("/generations/{generation_id}/judge")
    def judge(generation_id: str, payload: dict = Body(default={})):
        dimension = EvalDimension(payload.get("dimension", "authenticity"))
        score = service.judge_record(
            generation_id,
            dimension,
            judge_model=payload.get("judge_model", "default"),
            som=bool(payload.get("som", False)),
        )
        return score.to_dict()

    return app
