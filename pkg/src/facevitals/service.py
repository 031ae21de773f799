"""HTTP back end: accept recordings or traces, run the pipeline, persist.

Endpoints (JSON in/out; uploads are multipart/form-data):

- ``POST /api/v1/process`` — video+annotations or a trace CSV, plus optional
  capture metadata. Returns the vitals report, quality assessment,
  processing wall-clock (``bp_time_s``) and a ``process_token`` that a
  later save may reference. Quality-rejected recordings get 422 with a
  guidance ``message_code`` and no vitals.
- ``POST /api/v1/sessions`` — persist a processed result together with
  user-entered reference vitals, environment and profile.
- ``GET /api/v1/sessions?from&to`` — list stored sessions, inclusive epoch
  bounds.

Multipart bodies are parsed with the standard library's email machinery,
which understands MIME multipart natively, so no extra parser dependency
is needed.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from email import policy
from email.parser import BytesParser
from pathlib import Path
from typing import Any, Iterator

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.staticfiles import StaticFiles

from . import __version__
from .bp import AffineBPEstimator, load_estimator
from .config import ServiceConfig, config_from_env
from .errors import (
    ConfigurationError,
    InsufficientDataError,
    InvalidInputError,
    UnusableRecordingError,
)
from .roi import (
    GUIDANCE_TEXT,
    Frame,
    FrameAnnotation,
    FrameTrace,
    IlluminationPolicy,
    MessageCode,
    QualityAssessment,
    RoiMode,
    assess_quality,
    build_trace,
)
from .storage import (
    ComputedVitals,
    Environment,
    GroundTruthVitals,
    Profile,
    SessionRecord,
    SessionStore,
)
from .traceio import parse_trace_csv_bytes, read_annotations_json
from .vitals import CHANNEL_MODES, VitalsConfig, VitalsReport, estimate_all

MAX_NOFACE_COVERAGE = 0.20  # fraction of video frames the sidecar may miss


@dataclass
class MultipartField:
    name: str
    filename: str | None
    data: bytes

    @property
    def text(self) -> str:
        return self.data.decode("utf-8")


def parse_multipart(content_type: str, body: bytes) -> dict[str, MultipartField]:
    """Parse a multipart/form-data body into named fields."""
    if "multipart/form-data" not in content_type:
        raise InvalidInputError("expected a multipart/form-data body")
    head = b"Content-Type: " + content_type.encode("latin-1") + b"\r\n\r\n"
    message = BytesParser(policy=policy.HTTP).parsebytes(head + body)
    if not message.is_multipart():
        raise InvalidInputError("malformed multipart body")
    fields: dict[str, MultipartField] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name is None:
            continue
        payload = part.get_payload(decode=True)
        fields[name] = MultipartField(
            name=str(name),
            filename=part.get_filename(),
            data=payload if payload is not None else b"",
        )
    if not fields:
        raise InvalidInputError("multipart body contains no named fields")
    return fields


@dataclass
class ProcessResult:
    """Finished pipeline run kept for a later session save."""

    token: str
    report: VitalsReport
    quality: QualityAssessment
    source_filename: str
    bp_time_s: float
    created_at: float


def _bad_request(message: str) -> HTTPException:
    return HTTPException(status_code=400, detail={"error": message})


def _quality_rejection(
    message_code: MessageCode, quality: QualityAssessment | None, error: str
) -> HTTPException:
    detail: dict[str, Any] = {
        "error": error,
        "message_code": message_code.value,
        "guidance": GUIDANCE_TEXT[message_code],
    }
    if quality is not None:
        detail["quality"] = quality.to_dict()
    return HTTPException(status_code=422, detail=detail)


def _parse_float_field(
    fields: dict[str, MultipartField], name: str
) -> float | None:
    if name not in fields:
        return None
    try:
        return float(fields[name].text)
    except (UnicodeDecodeError, ValueError):
        raise _bad_request(f"field {name!r} must be a number")


def _parse_enum_field(fields, name: str, enum_class, default):
    if name not in fields:
        return default
    raw = fields[name].text
    try:
        return enum_class(raw)
    except ValueError:
        allowed = [member.value for member in enum_class]
        raise _bad_request(f"field {name!r} must be one of {allowed}, got {raw!r}")


def _decode_video_frames(
    path: Path, annotations: list[FrameAnnotation]
) -> Iterator[tuple[Frame, FrameAnnotation]]:
    """Pair decoded video frames with their sidecar annotations by index."""
    import cv2  # deferred: only video uploads need a codec

    by_index = {a.frame_index: a for a in annotations}
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise InvalidInputError("cannot decode the uploaded video")
    total = 0
    matched = 0
    try:
        while True:
            ok, bgr = capture.read()
            if not ok:
                break
            annotation = by_index.get(total)
            total += 1
            if annotation is None:
                continue
            matched += 1
            yield Frame(np.ascontiguousarray(bgr[:, :, ::-1])), annotation
    finally:
        capture.release()
    if total == 0:
        raise InvalidInputError("the uploaded video contains no frames")
    if total - matched > MAX_NOFACE_COVERAGE * total:
        raise UnusableRecordingError(
            f"face annotations cover only {matched}/{total} frames"
        )


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    """Build the HTTP application around one config and one session store."""
    config = config or config_from_env()
    config.upload_dir.mkdir(parents=True, exist_ok=True)
    store = SessionStore(config.db_path)
    bp_estimator: AffineBPEstimator = load_estimator(config.bp_coeffs_path)

    app = FastAPI(title="facevitals", version=__version__)
    app.state.config = config
    app.state.store = store
    results: dict[str, ProcessResult] = {}
    results_lock = threading.Lock()

    def _store_payload(field: MultipartField, suffix: str) -> Path:
        name = f"{uuid.uuid4().hex}{suffix}"
        path = config.upload_dir / name
        path.write_bytes(field.data)
        return path

    def _run_pipeline(fields: dict[str, MultipartField]) -> tuple[
        FrameTrace, QualityAssessment, Path
    ]:
        has_trace = "trace" in fields and fields["trace"].data
        has_video = "video" in fields and fields["video"].data
        if has_trace and has_video:
            raise _bad_request("send either a trace CSV or a video, not both")
        roi_mode = _parse_enum_field(fields, "roi_mode", RoiMode, RoiMode.FULL_BOX)
        illumination = _parse_enum_field(
            fields, "illumination", IlluminationPolicy, IlluminationPolicy.ON_DARK
        )

        if has_trace:
            try:
                trace = parse_trace_csv_bytes(fields["trace"].data)
            except InvalidInputError as exc:
                raise _bad_request(f"bad trace CSV: {exc}")
            saved = _store_payload(fields["trace"], "_trace.csv")
            width = _parse_float_field(fields, "frame_width")
            height = _parse_float_field(fields, "frame_height")
            frame_area = width * height if width and height else None
            quality = assess_quality(trace.annotations(), frame_area, trace.brightness)
            return trace, quality, saved

        if has_video:
            if "annotations" not in fields:
                raise _bad_request("video uploads need an annotations sidecar")
            try:
                annotations, _, _ = read_annotations_json(fields["annotations"].data)
            except InvalidInputError as exc:
                raise _bad_request(f"bad annotations sidecar: {exc}")
            saved = _store_payload(fields["video"], "_video.mp4")
            sidecar = saved.with_suffix(".json")
            sidecar.write_bytes(fields["annotations"].data)
            try:
                trace, quality = build_trace(
                    _decode_video_frames(saved, annotations),
                    roi_mode=roi_mode,
                    illumination_policy=illumination,
                )
            except InvalidInputError as exc:
                raise _bad_request(str(exc))
            return trace, quality, saved

        raise _bad_request("payload must include a 'trace' CSV or 'video' file")

    @app.post("/api/v1/process")
    async def process(request: Request) -> dict[str, Any]:
        received_at = time.perf_counter()
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > config.max_payload_bytes:
            raise HTTPException(
                status_code=413,
                detail={"error": "payload exceeds the configured size limit"},
            )
        body = await request.body()
        if not body:
            raise _bad_request("empty request body")
        if len(body) > config.max_payload_bytes:
            raise HTTPException(
                status_code=413,
                detail={"error": "payload exceeds the configured size limit"},
            )
        try:
            fields = parse_multipart(request.headers.get("content-type", ""), body)
        except InvalidInputError as exc:
            raise _bad_request(str(exc))

        try:
            trace, quality, saved_path = _run_pipeline(fields)
        except HTTPException:
            raise
        except UnusableRecordingError as exc:
            raise _quality_rejection(MessageCode.NO_FACE, None, str(exc))
        except (InsufficientDataError, InvalidInputError) as exc:
            raise _bad_request(str(exc))
        except Exception as exc:  # pragma: no cover - defensive 500 mapping
            raise HTTPException(
                status_code=500, detail={"error": f"pipeline fault: {exc}"}
            )

        if not quality.ok:
            if not config.retain_uploads:
                saved_path.unlink(missing_ok=True)
            raise _quality_rejection(
                quality.message_code,
                quality,
                "recording rejected by quality checks",
            )

        vitals_config = VitalsConfig()
        if "channel" in fields:
            channel = fields["channel"].text
            if channel not in CHANNEL_MODES:
                raise _bad_request(
                    f"field 'channel' must be one of {sorted(CHANNEL_MODES)}"
                )
            vitals_config.bvp_channel = channel
        try:
            report = estimate_all(trace, vitals_config, bp_estimator)
        except Exception as exc:  # pragma: no cover - defensive 500 mapping
            raise HTTPException(
                status_code=500, detail={"error": f"pipeline fault: {exc}"}
            )
        if not config.retain_uploads:
            saved_path.unlink(missing_ok=True)

        bp_time_s = time.perf_counter() - received_at
        token = uuid.uuid4().hex
        result = ProcessResult(
            token=token,
            report=report,
            quality=quality,
            source_filename=saved_path.name,
            bp_time_s=bp_time_s,
            created_at=time.time(),
        )
        with results_lock:
            results[token] = result

        client_timings = None
        start_ts = _parse_float_field(fields, "capture_start_ts")
        end_ts = _parse_float_field(fields, "capture_end_ts")
        if start_ts is not None or end_ts is not None:
            client_timings = {"capture_start_ts": start_ts, "capture_end_ts": end_ts}
        return {
            "report": report.to_dict(),
            "quality": quality.to_dict(),
            "bp_time_s": bp_time_s,
            "process_token": token,
            "session_id": None,
            "client_timings": client_timings,
        }

    @app.post("/api/v1/sessions")
    async def save_session(request: Request) -> dict[str, Any]:
        try:
            payload = await request.json()
        except Exception:
            raise _bad_request("body must be a JSON object")
        if not isinstance(payload, dict):
            raise _bad_request("body must be a JSON object")
        token = payload.get("process_token")
        if not token:
            raise _bad_request("process_token is required")
        with results_lock:
            result = results.get(token)
        if result is None:
            raise HTTPException(
                status_code=404,
                detail={"error": f"unknown process token {token!r}"},
            )

        def section(klass, key):
            value = payload.get(key)
            if value is None:
                return None
            if not isinstance(value, dict):
                raise _bad_request(f"{key} must be an object")
            known = set(klass.__dataclass_fields__)
            unknown = set(value) - known
            if unknown:
                raise _bad_request(f"unknown {key} fields: {sorted(unknown)}")
            try:
                return klass(**value)
            except InvalidInputError as exc:
                raise _bad_request(str(exc))
            except (TypeError, ValueError) as exc:
                raise _bad_request(f"bad {key} section: {exc}")

        record = SessionRecord(
            timestamp=time.time(),
            source_filename=result.source_filename,
            computed=ComputedVitals.from_report(result.report),
            ground_truth=section(GroundTruthVitals, "ground_truth"),
            environment=section(Environment, "environment"),
            profile=section(Profile, "profile"),
        )
        session_id = store.save_session(record)
        return {"session_id": session_id}

    @app.get("/api/v1/sessions")
    def list_sessions(
        start: float | None = Query(None, alias="from"),
        end: float | None = Query(None, alias="to"),
    ) -> dict[str, Any]:
        if start is not None and end is not None and start > end:
            raise _bad_request("'from' must not exceed 'to'")
        records = store.list_sessions(start, end)
        return {"sessions": [record.to_dict() for record in records]}

    @app.get("/api/v1/health")
    def health() -> dict[str, Any]:
        return {"status": "ok", "version": __version__}

    if config.static_dir is not None:
        if not config.static_dir.is_dir():
            raise ConfigurationError(
                f"static_dir does not exist: {config.static_dir}"
            )
        app.mount(
            "/", StaticFiles(directory=str(config.static_dir), html=True), name="ui"
        )
    return app


def app_from_env() -> FastAPI:
    """Uvicorn factory entry point; configuration comes from FACEVITALS_*."""
    return create_app(config_from_env())
