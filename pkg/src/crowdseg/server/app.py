"""HTTP boundary: authenticated endpoints over the store and workflow.

All endpoints live under /api/v1 and are listed in docs/protocol.md along
with the error code table. Every response body is either the documented
success schema or {"status", "code", "message"}.
"""

from __future__ import annotations

import io
import logging
import threading
from contextlib import asynccontextmanager

import numpy as np
from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from PIL import Image
from starlette.concurrency import run_in_threadpool
from starlette.exceptions import HTTPException as StarletteHTTPException

from .. import errors as err
from ..masks import serialize_mask
from ..select import StrategySpec, next_batch
from ..store.core import VersionStore
from ..vision import ProbabilityMap, enhance_contrast, enhance_contrast_rgb, png_info
from ..vision.image import GrayImage
from ..vision.providers import get_preseg_provider, get_quality_provider
from ..workflow import Annotator, Workflow, require_role
from ..workflow.model import OPEN_STATES
from .config import ApiConfig
from .export import SELECTORS, build_export

log = logging.getLogger("crowdseg.server")

ERROR_MAP: list[tuple[type, int, str]] = [
    (err.MalformedContainer, 400, "malformed_payload"),
    (err.MissingCorrection, 400, "malformed_payload"),
    (err.UnknownStrategy, 400, "malformed_payload"),
    (err.Unauthorized, 403, "forbidden_role"),
    (err.UnknownImage, 404, "unknown_resource"),
    (err.UnknownVersion, 404, "unknown_resource"),
    (err.UnknownAnnotator, 404, "unknown_resource"),
    (err.UnknownTask, 404, "unknown_resource"),
    (err.UnknownBlob, 404, "unknown_resource"),
    (err.NoVersions, 404, "unknown_resource"),
    (err.IllegalTransition, 409, "illegal_transition"),
    (err.DuplicateOpenTask, 409, "duplicate_open_task"),
    (err.AlreadyReviewed, 409, "already_reviewed"),
    (err.DimensionMismatch, 422, "dimension_mismatch"),
    (err.MalformedRle, 422, "malformed_rle"),
]


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"status": status, "code": code, "message": message})


def to_api_exception(exc: Exception) -> ApiException:
    for klass, status, code in ERROR_MAP:
        if isinstance(exc, klass):
            return ApiException(status, code, str(exc))
    if isinstance(exc, ValueError):
        return ApiException(400, "malformed_payload", str(exc))
    log.exception("internal error", exc_info=exc)
    return ApiException(500, "internal", "internal error")


def get_actor(request: Request) -> Annotator:
    header = request.headers.get("authorization", "")
    if not header.startswith("Bearer "):
        raise ApiException(401, "unauthenticated", "missing bearer token")
    actor = request.app.state.workflow.authenticate(header[len("Bearer "):].strip())
    if actor is None:
        raise ApiException(401, "unauthenticated", "unknown token")
    return actor


def create_app(config: ApiConfig, store: VersionStore | None = None) -> FastAPI:
    if store is None:
        store = VersionStore(config.data_root, fsync=config.fsync)
    workflow = Workflow(store)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        store.close()

    app = FastAPI(title="crowdseg", openapi_url=None, docs_url=None,
                  redoc_url=None, lifespan=lifespan)

    app.state.config = config
    app.state.store = store
    app.state.workflow = workflow
    app.state.bootstrap = None
    if not store.list_annotators():
        annotator, token = workflow.bootstrap_researcher()
        app.state.bootstrap = (annotator, token)
        log.warning("bootstrap researcher %s token: %s", annotator.annotator_id, token)
        print(f"bootstrap researcher id={annotator.annotator_id} token={token}", flush=True)

    cache_lock = threading.Lock()
    preseg_cache: dict[tuple[str, str], tuple[bytes, np.ndarray]] = {}
    quality_cache: dict[tuple[str, str], dict] = {}
    enhanced_cache: dict[str, bytes] = {}

    @app.exception_handler(ApiException)
    async def handle_api_exception(_request, exc: ApiException):
        return error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(err.CrowdsegError)
    async def handle_domain_error(_request, exc: err.CrowdsegError):
        mapped = to_api_exception(exc)
        return error_response(mapped.status, mapped.code, mapped.message)

    @app.exception_handler(ValueError)
    async def handle_value_error(_request, exc: ValueError):
        return error_response(400, "malformed_payload", str(exc))

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(_request, exc: RequestValidationError):
        return error_response(400, "malformed_payload", str(exc.errors()[:1]))

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_exception(_request, exc: StarletteHTTPException):
        if exc.status_code == 404:
            return error_response(404, "unknown_resource", "no such endpoint")
        if exc.status_code >= 500:
            return error_response(exc.status_code, "internal", str(exc.detail))
        return error_response(exc.status_code, "malformed_payload", str(exc.detail))

    @app.exception_handler(Exception)
    async def handle_unexpected(_request, exc: Exception):
        mapped = to_api_exception(exc)
        return error_response(mapped.status, mapped.code, mapped.message)

    # -- helpers -----------------------------------------------------------

    def image_png_bytes(image_id: str) -> bytes:
        store.image(image_id)  # 404 before blob lookup
        return store.get_blob(image_id)

    def enhanced_png(image_id: str) -> bytes:
        with cache_lock:
            cached = enhanced_cache.get(image_id)
        if cached is not None:
            return cached
        data = image_png_bytes(image_id)
        with Image.open(io.BytesIO(data)) as im:
            if im.mode in ("L",):
                values = np.asarray(im, dtype=np.float64) / 255.0
                out = enhance_contrast(GrayImage(values)).values
                result = Image.fromarray(np.round(out * 255.0).astype(np.uint8), "L")
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                out = enhance_contrast_rgb(rgb)
                result = Image.fromarray(np.round(out * 255.0).astype(np.uint8), "RGB")
        buf = io.BytesIO()
        result.save(buf, format="PNG")
        payload = buf.getvalue()
        with cache_lock:
            enhanced_cache[image_id] = payload
        return payload

    def presegmentation(image_id: str) -> tuple[bytes, np.ndarray]:
        key = (image_id, config.preseg_provider)
        with cache_lock:
            cached = preseg_cache.get(key)
        if cached is not None:
            return cached
        data = image_png_bytes(image_id)
        provider = get_preseg_provider(config.preseg_provider)
        mask, pmap = provider.presegment(data, ["vessel"])
        payload = (serialize_mask(mask), pmap.values)
        with cache_lock:
            preseg_cache[key] = payload
        return payload

    def quality(image_id: str) -> dict:
        key = (image_id, config.quality_provider)
        with cache_lock:
            cached = quality_cache.get(key)
        if cached is not None:
            return cached
        data = image_png_bytes(image_id)
        provider = get_quality_provider(config.quality_provider)
        report = provider.assess(data).to_payload()
        with cache_lock:
            quality_cache[key] = report
        return report

    def open_task_for(actor: Annotator, image_id: str):
        for task in workflow.next_tasks(actor.annotator_id):
            if task.image_id == image_id and task.state in OPEN_STATES:
                return task
        return None

    # -- endpoints -----------------------------------------------------------

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok"}

    @app.post("/api/v1/images", status_code=201)
    async def enroll_image(request: Request, actor: Annotator = Depends(get_actor)):
        require_role(actor, "researcher")
        body = await request.body()
        if len(body) > config.max_upload_bytes:
            raise ApiException(413, "payload_too_large",
                               f"body exceeds {config.max_upload_bytes} bytes")
        source_name = request.headers.get("x-source-name", "")

        def work():
            width, height, channels = png_info(body)
            record, created = store.enroll_image(
                body, width, height, channels, source_name)
            return {**record.to_payload(), "created": created}

        return await run_in_threadpool(work)

    @app.get("/api/v1/images/{image_id}")
    async def get_image(image_id: str, actor: Annotator = Depends(get_actor)):
        data = await run_in_threadpool(image_png_bytes, image_id)
        return Response(content=data, media_type="image/png")

    @app.get("/api/v1/images/{image_id}/enhanced")
    async def get_enhanced(image_id: str, actor: Annotator = Depends(get_actor)):
        data = await run_in_threadpool(enhanced_png, image_id)
        return Response(content=data, media_type="image/png")

    @app.get("/api/v1/images/{image_id}/presegmentation")
    async def get_presegmentation(image_id: str, actor: Annotator = Depends(get_actor)):
        lseg, _ = await run_in_threadpool(presegmentation, image_id)
        return Response(
            content=lseg, media_type="application/octet-stream",
            headers={"X-Provider": config.preseg_provider})

    @app.get("/api/v1/images/{image_id}/quality")
    async def get_quality(image_id: str, actor: Annotator = Depends(get_actor)):
        report = await run_in_threadpool(quality, image_id)
        return JSONResponse(content=report, headers={"X-Provider": config.quality_provider})

    @app.get("/api/v1/images/{image_id}/segmentations")
    async def get_history(
        image_id: str, offset: int = 0, limit: int = 100,
        actor: Annotator = Depends(get_actor),
    ):
        if offset < 0 or not 1 <= limit <= 1000:
            raise ApiException(400, "malformed_payload", "bad offset/limit")

        def work():
            total = store.history_len(image_id)
            entries = store.history(image_id, offset=offset, limit=limit)
            return {
                "image_id": image_id, "total": total,
                "offset": offset, "limit": limit,
                "versions": [e.to_payload() for e in entries],
            }

        return await run_in_threadpool(work)

    @app.get("/api/v1/segmentations/{image_id}/{version_no}")
    async def get_segmentation(
        image_id: str, version_no: int, actor: Annotator = Depends(get_actor),
    ):
        def work():
            entry = store.version(image_id, version_no)
            return store.get_blob(entry.blob)

        data = await run_in_threadpool(work)
        return Response(content=data, media_type="application/octet-stream")

    @app.post("/api/v1/images/{image_id}/segmentations", status_code=201)
    async def submit_segmentation(
        image_id: str, request: Request, actor: Annotator = Depends(get_actor),
    ):
        body = await request.body()
        if len(body) > config.max_upload_bytes:
            raise ApiException(413, "payload_too_large", "mask too large")

        def work():
            store.image(image_id)
            task = open_task_for(actor, image_id)
            if task is None:
                raise err.IllegalTransition(
                    f"no open task for {actor.annotator_id} on {image_id}")
            entry = workflow.submit(task.task_id, body, actor)
            return entry.to_payload()

        return await run_in_threadpool(work)

    @app.post("/api/v1/images/{image_id}/restore/{version_no}", status_code=201)
    async def restore_version(
        image_id: str, version_no: int, actor: Annotator = Depends(get_actor),
    ):
        entry = await run_in_threadpool(workflow.restore, image_id, version_no, actor)
        return entry.to_payload()

    @app.post("/api/v1/tasks/{task_id}/skip")
    async def skip_task(task_id: str, request: Request, actor: Annotator = Depends(get_actor)):
        try:
            payload = await request.json()
        except Exception:
            raise ApiException(400, "malformed_payload", "body must be JSON")
        if not isinstance(payload, dict) or "reason" not in payload:
            raise ApiException(400, "malformed_payload", "need {reason, quality_grade?}")
        grade = payload.get("quality_grade")
        if grade is not None and not isinstance(grade, (int, float)):
            raise ApiException(400, "malformed_payload", "quality_grade must be a number")

        def work():
            task = workflow.skip(task_id, str(payload["reason"]), actor,
                                 quality_grade=grade)
            return task.to_payload()

        return await run_in_threadpool(work)

    @app.post("/api/v1/tasks/{task_id}/review", status_code=201)
    async def review_task(task_id: str, request: Request, actor: Annotator = Depends(get_actor)):
        content_type = request.headers.get("content-type", "")
        mask_bytes = None
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            verdict = form.get("verdict")
            upload = form.get("mask")
            if upload is not None:
                mask_bytes = await upload.read()
        else:
            try:
                payload = await request.json()
            except Exception:
                raise ApiException(400, "malformed_payload", "body must be JSON or multipart")
            verdict = payload.get("verdict") if isinstance(payload, dict) else None
        if verdict not in ("approved", "corrected"):
            raise ApiException(400, "malformed_payload",
                               "verdict must be approved or corrected")

        def work():
            entry = workflow.review(task_id, verdict, actor, corrected_mask=mask_bytes)
            return entry.to_payload()

        return await run_in_threadpool(work)

    @app.get("/api/v1/tasks")
    async def list_tasks(request: Request, actor: Annotator = Depends(get_actor)):
        if request.query_params.get("mine") != "true":
            raise ApiException(400, "malformed_payload", "only ?mine=true is supported")
        tasks = await run_in_threadpool(workflow.next_tasks, actor.annotator_id)
        return {"tasks": [t.to_payload() for t in tasks]}

    @app.post("/api/v1/assignments", status_code=201)
    async def create_assignment(request: Request, actor: Annotator = Depends(get_actor)):
        try:
            payload = await request.json()
        except Exception:
            raise ApiException(400, "malformed_payload", "body must be JSON")
        if not isinstance(payload, dict) or not {"image_id", "annotator_id"} <= set(payload):
            raise ApiException(400, "malformed_payload", "need {image_id, annotator_id}")

        def work():
            task = workflow.assign(
                str(payload["image_id"]), str(payload["annotator_id"]), actor)
            return task.to_payload()

        return await run_in_threadpool(work)

    @app.post("/api/v1/annotators", status_code=201)
    async def register_annotator(request: Request, actor: Annotator = Depends(get_actor)):
        try:
            payload = await request.json()
        except Exception:
            raise ApiException(400, "malformed_payload", "body must be JSON")
        if not isinstance(payload, dict) or not {"display_name", "role"} <= set(payload):
            raise ApiException(400, "malformed_payload", "need {display_name, role}")

        def work():
            annotator, token = workflow.register_annotator(
                str(payload["display_name"]), str(payload["role"]), actor)
            return {"annotator": annotator.public_payload(), "token": token}

        return await run_in_threadpool(work)

    @app.get("/api/v1/annotators")
    async def list_annotators(actor: Annotator = Depends(get_actor)):
        require_role(actor, "researcher")
        annotators = await run_in_threadpool(store.list_annotators)
        annotators.sort(key=lambda a: a.annotator_id)
        return {"annotators": [a.public_payload() for a in annotators]}

    @app.get("/api/v1/next-batch")
    async def get_next_batch(
        request: Request, strategy: str = "", k: int = 0,
        actor: Annotator = Depends(get_actor),
    ):
        require_role(actor, "researcher")
        seed_raw = request.query_params.get("seed")
        try:
            seed = int(seed_raw) if seed_raw is not None else None
        except ValueError:
            raise ApiException(400, "malformed_payload", "seed must be an integer")

        def work():
            spec = StrategySpec(name=strategy, k=k, seed=seed)
            pool = []
            for image in store.list_images():
                if image.status not in ("pending", "assigned"):
                    continue
                pmap = None
                if spec.name in ("entropy", "margin"):
                    try:
                        _, values = presegmentation(image.image_id)
                        pmap = ProbabilityMap(values)
                    except Exception:
                        pmap = None
                pool.append((image.image_id, pmap))
            ids = next_batch(pool, spec)
            return {"strategy": spec.name, "k": spec.k, "image_ids": ids}

        return await run_in_threadpool(work)

    @app.get("/api/v1/export")
    async def export_dataset(selector: str = "all", actor: Annotator = Depends(get_actor)):
        require_role(actor, "researcher")
        if selector not in SELECTORS:
            raise ApiException(400, "malformed_payload",
                               f"selector must be one of {SELECTORS}")
        data = await run_in_threadpool(build_export, store, selector)
        return Response(content=data, media_type="application/x-tar")

    return app
