"""File formats shared between the capture UI, the CLI and the service.

* Trace CSV: ``timestamp_s,mean_r,mean_g,mean_b,brightness,box_x,box_y,box_w,box_h``
  with one header row. Floats are written in shortest round-trip form, so a
  write/read cycle is lossless.
* Annotation sidecar (JSON): per-frame boxes and named landmark polygons
  accompanying an uploaded video.
* Ground-truth sidecar (JSON): the vitals a synthetic trace was generated
  with, used by the evaluation harness.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import IO, Any

import numpy as np

from .errors import InvalidInputError
from .roi import FrameAnnotation, FrameTrace

TRACE_COLUMNS = (
    "timestamp_s",
    "mean_r",
    "mean_g",
    "mean_b",
    "brightness",
    "box_x",
    "box_y",
    "box_w",
    "box_h",
)


def write_trace_csv(trace: FrameTrace, destination: str | Path | IO[str]) -> None:
    """Write a trace in the interchange CSV format."""
    if isinstance(destination, (str, Path)):
        with open(destination, "w", newline="") as handle:
            write_trace_csv(trace, handle)
        return
    writer = csv.writer(destination)
    writer.writerow(TRACE_COLUMNS)
    for i in range(len(trace)):
        row = [
            trace.timestamps[i],
            trace.mean_r[i],
            trace.mean_g[i],
            trace.mean_b[i],
            trace.brightness[i],
            *trace.boxes[i],
        ]
        writer.writerow([repr(float(v)) for v in row])


def trace_to_csv_text(trace: FrameTrace) -> str:
    buffer = io.StringIO()
    write_trace_csv(trace, buffer)
    return buffer.getvalue()


def read_trace_csv(source: str | Path | IO[str]) -> FrameTrace:
    """Parse the interchange CSV into a FrameTrace.

    The header must match the documented columns exactly; the nominal frame
    rate is recovered from the median timestamp step.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", newline="") as handle:
            return read_trace_csv(handle)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInputError("trace CSV is empty") from None
    if tuple(h.strip() for h in header) != TRACE_COLUMNS:
        raise InvalidInputError(
            "trace CSV header must be " + ",".join(TRACE_COLUMNS)
        )
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRACE_COLUMNS):
            raise InvalidInputError(f"trace CSV line {lineno} has {len(row)} fields")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise InvalidInputError(
                f"trace CSV line {lineno} has a non-numeric field"
            ) from None
    if len(rows) < 2:
        raise InvalidInputError("trace CSV needs at least 2 data rows")
    data = np.asarray(rows, dtype=np.float64)
    steps = np.diff(data[:, 0])
    if np.any(steps <= 0):
        raise InvalidInputError("trace timestamps must be strictly increasing")
    return FrameTrace(
        timestamps=data[:, 0],
        mean_r=data[:, 1],
        mean_g=data[:, 2],
        mean_b=data[:, 3],
        brightness=data[:, 4],
        boxes=data[:, 5:9],
        nominal_fps=1.0 / float(np.median(steps)),
    )


def parse_trace_csv_bytes(payload: bytes) -> FrameTrace:
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError:
        raise InvalidInputError("trace CSV must be UTF-8 text") from None
    return read_trace_csv(io.StringIO(text))


def annotations_to_dict(
    annotations: list[FrameAnnotation],
    frame_width: int | None = None,
    frame_height: int | None = None,
) -> dict[str, Any]:
    frames = []
    for a in annotations:
        entry: dict[str, Any] = {
            "frame_index": a.frame_index,
            "timestamp_s": a.timestamp,
            "box": list(a.bounding_box),
        }
        if a.landmarks:
            entry["landmarks"] = {
                name: [list(p) for p in points] for name, points in a.landmarks.items()
            }
        frames.append(entry)
    payload: dict[str, Any] = {"frames": frames}
    if frame_width is not None:
        payload["frame_width"] = frame_width
    if frame_height is not None:
        payload["frame_height"] = frame_height
    return payload


def annotations_from_dict(
    payload: dict[str, Any],
) -> tuple[list[FrameAnnotation], int | None, int | None]:
    if "frames" not in payload or not isinstance(payload["frames"], list):
        raise InvalidInputError("annotation sidecar must contain a 'frames' list")
    annotations = []
    for entry in payload["frames"]:
        try:
            landmarks = entry.get("landmarks")
            annotations.append(
                FrameAnnotation(
                    frame_index=int(entry["frame_index"]),
                    timestamp=float(entry["timestamp_s"]),
                    bounding_box=tuple(float(v) for v in entry["box"]),
                    landmarks=landmarks,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed annotation entry: {exc}") from None
    annotations.sort(key=lambda a: a.frame_index)
    width = payload.get("frame_width")
    height = payload.get("frame_height")
    return annotations, width, height


def read_annotations_json(source: str | Path | bytes):
    if isinstance(source, bytes):
        try:
            payload = json.loads(source.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"annotation sidecar is not valid JSON: {exc}")
        return annotations_from_dict(payload)
    with open(source) as handle:
        return annotations_from_dict(json.load(handle))


def write_ground_truth(truth: dict[str, Any], path: str | Path) -> None:
    with open(path, "w") as handle:
        json.dump(truth, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_ground_truth(path: str | Path) -> dict[str, Any]:
    with open(path) as handle:
        return json.load(handle)


def truth_path_for(trace_path: str | Path) -> Path:
    """Ground-truth sidecar naming convention: trace_000.csv -> trace_000.truth.json."""
    trace_path = Path(trace_path)
    return trace_path.with_suffix(".truth.json")
