"""Command-line driver: process recordings, build corpora, evaluate, serve.

Machine-readable results go to stdout (``key=value`` lines or CSV); human
summaries go to stderr. Exit codes: 0 success, 2 bad input, 3 quality
rejection, 4 pipeline fault.
"""

from __future__ import annotations

import itertools
import json
import sys
import time
import uuid
from pathlib import Path

import click
import numpy as np

from .bp import load_estimator
from .errors import (
    ConfigurationError,
    FaceVitalsError,
    InsufficientDataError,
    InvalidInputError,
    UnusableRecordingError,
)
from .roi import (
    IlluminationPolicy,
    QualityAssessment,
    RoiMode,
    assess_quality,
    build_trace,
)
from .simulate import SimSpec, synth_trace
from .traceio import (
    read_annotations_json,
    read_trace_csv,
    truth_path_for,
    write_ground_truth,
    write_trace_csv,
)
from .vitals import VitalsConfig, VitalsReport, estimate_all

EXIT_BAD_INPUT = 2
EXIT_QUALITY_REJECTED = 3
EXIT_PIPELINE_FAULT = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _report_lines(
    report: VitalsReport, quality: QualityAssessment, bp_time_s: float
) -> list[str]:
    lines = []
    for key, estimate in (
        ("hr_bpm", report.hr),
        ("hrv_rmssd_ms", report.hrv),
        ("spo2_percent", report.spo2),
        ("rr_brpm", report.rr),
    ):
        lines.append(f"{key}={_fmt(estimate.value)}")
        lines.append(f"{key}_valid={_fmt(estimate.valid)}")
    lines.append(f"stress_level={_fmt(report.stress.level)}")
    lines.append(f"stress_valid={_fmt(report.stress.valid)}")
    lines.append(f"sbp_mmhg={_fmt(report.bp.systolic_mmhg)}")
    lines.append(f"dbp_mmhg={_fmt(report.bp.diastolic_mmhg)}")
    lines.append(f"bp_valid={_fmt(report.bp.valid)}")
    lines.append(f"verdict={quality.verdict.value}")
    lines.append(f"message_code={quality.message_code.value}")
    lines.append(f"bp_time_s={_fmt(bp_time_s)}")
    return lines


def _human_summary(report: VitalsReport, bp_time_s: float) -> str:
    def show(estimate, unit):
        if estimate.value is None:
            return "n/a"
        flag = "" if estimate.valid else " (low confidence)"
        return f"{estimate.value:.1f} {unit}{flag}"

    parts = [
        f"HR {show(report.hr, 'bpm')}",
        f"HRV {show(report.hrv, 'ms')}",
        f"SpO2 {show(report.spo2, '%')}",
        f"RR {show(report.rr, 'breaths/min')}",
        f"stress {report.stress.level or 'n/a'}",
    ]
    if report.bp.systolic_mmhg is not None:
        parts.append(
            f"BP {report.bp.systolic_mmhg:.0f}/{report.bp.diastolic_mmhg:.0f} mmHg"
        )
    else:
        parts.append("BP n/a")
    return "; ".join(parts) + f" — processed in {bp_time_s:.2f} s"


def _load_input(
    path: Path,
    annotations_path: Path | None,
    roi_mode: RoiMode,
    illumination: IlluminationPolicy,
    frame_width: float | None,
    frame_height: float | None,
):
    """Read a trace CSV or a video+sidecar pair into (trace, quality)."""
    if path.suffix.lower() == ".csv":
        trace = read_trace_csv(path)
        frame_area = (
            frame_width * frame_height if frame_width and frame_height else None
        )
        quality = assess_quality(trace.annotations(), frame_area, trace.brightness)
        return trace, quality
    if annotations_path is None:
        raise InvalidInputError(
            "video inputs need an annotation sidecar (--annotations)"
        )
    annotations, _, _ = read_annotations_json(annotations_path)
    from .service import _decode_video_frames  # shares the decode/pairing logic

    return build_trace(
        _decode_video_frames(path, annotations),
        roi_mode=roi_mode,
        illumination_policy=illumination,
    )


@click.group()
@click.version_option(package_name="facevitals")
def main() -> None:
    """Contactless vital-sign estimation from face-video color traces."""


@main.command("process")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--annotations", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Annotation sidecar JSON (video inputs).")
@click.option("--roi-mode", type=click.Choice([m.value for m in RoiMode]),
              default=RoiMode.FULL_BOX.value, show_default=True)
@click.option("--channel", type=click.Choice(["g", "r", "b", "chrominance"]), default="g",
              show_default=True, help="Channel used for pulse extraction.")
@click.option("--illumination", type=click.Choice([p.value for p in IlluminationPolicy]),
              default=IlluminationPolicy.ON_DARK.value, show_default=True)
@click.option("--frame-width", type=float, default=None,
              help="Frame width in px (enables the distance gate for CSV inputs).")
@click.option("--frame-height", type=float, default=None)
@click.option("--bp-coeffs", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Blood-pressure coefficient file.")
@click.option("--save", is_flag=True, help="Persist the session on the server.")
@click.option("--server-url", default=None,
              help="Process via a running service instead of locally.")
def cmd_process(input_path, annotations, roi_mode, channel, illumination,
                frame_width, frame_height, bp_coeffs, save, server_url):
    """Estimate vitals from a trace CSV or a video with annotations."""
    if server_url:
        _process_remote(input_path, annotations, channel, save, server_url,
                        frame_width, frame_height)
        return
    if save:
        _fail(EXIT_BAD_INPUT, "--save requires --server-url")
    started = time.perf_counter()
    try:
        trace, quality = _load_input(
            input_path, annotations, RoiMode(roi_mode),
            IlluminationPolicy(illumination), frame_width, frame_height,
        )
    except UnusableRecordingError as exc:
        _fail(EXIT_QUALITY_REJECTED, str(exc))
    except (InvalidInputError, InsufficientDataError) as exc:
        _fail(EXIT_BAD_INPUT, str(exc))
    except FaceVitalsError as exc:
        _fail(EXIT_PIPELINE_FAULT, str(exc))

    if not quality.ok:
        for key, value in quality.to_dict().items():
            click.echo(f"{key}={_fmt(value)}")
        _fail(
            EXIT_QUALITY_REJECTED,
            f"recording rejected: {quality.verdict.value}",
        )
    try:
        estimator = load_estimator(bp_coeffs)
        config = VitalsConfig(bvp_channel=channel)
        report = estimate_all(trace, config, estimator)
    except ConfigurationError as exc:
        _fail(EXIT_BAD_INPUT, str(exc))
    except Exception as exc:
        _fail(EXIT_PIPELINE_FAULT, f"pipeline fault: {exc}")
    bp_time_s = time.perf_counter() - started
    for line in _report_lines(report, quality, bp_time_s):
        click.echo(line)
    click.echo(_human_summary(report, bp_time_s), err=True)


def _process_remote(input_path, annotations, channel, save, server_url,
                    frame_width, frame_height):
    import urllib.error
    import urllib.request

    boundary = uuid.uuid4().hex
    parts = []

    def add_field(name, value):
        parts.append(
            f"--{boundary}\r\nContent-Disposition: form-data; "
            f'name="{name}"\r\n\r\n{value}\r\n'.encode()
        )

    def add_file(name, path: Path, content_type):
        head = (
            f"--{boundary}\r\nContent-Disposition: form-data; "
            f'name="{name}"; filename="{path.name}"\r\n'
            f"Content-Type: {content_type}\r\n\r\n"
        ).encode()
        parts.append(head + path.read_bytes() + b"\r\n")

    add_field("channel", channel)
    if frame_width:
        add_field("frame_width", frame_width)
    if frame_height:
        add_field("frame_height", frame_height)
    if input_path.suffix.lower() == ".csv":
        add_file("trace", input_path, "text/csv")
    else:
        if annotations is None:
            _fail(EXIT_BAD_INPUT, "video inputs need --annotations")
        add_file("video", input_path, "video/mp4")
        add_file("annotations", annotations, "application/json")
    body = b"".join(parts) + f"--{boundary}--\r\n".encode()

    base = server_url.rstrip("/")
    request = urllib.request.Request(
        f"{base}/api/v1/process",
        data=body,
        headers={"Content-Type": f"multipart/form-data; boundary={boundary}"},
    )
    try:
        with urllib.request.urlopen(request) as response:
            payload = json.loads(response.read())
    except urllib.error.HTTPError as exc:
        detail = exc.read().decode("utf-8", "replace")
        code = EXIT_QUALITY_REJECTED if exc.code == 422 else (
            EXIT_BAD_INPUT if exc.code in (400, 404, 413) else EXIT_PIPELINE_FAULT
        )
        _fail(code, f"server returned {exc.code}: {detail}")
    except urllib.error.URLError as exc:
        _fail(EXIT_PIPELINE_FAULT, f"cannot reach server: {exc}")

    for key, section in payload["report"].items():
        if isinstance(section, dict):
            for sub, value in section.items():
                click.echo(f"{key}_{sub}={_fmt(value)}" if sub != "value"
                           else f"{key}={_fmt(value)}")
    click.echo(f"bp_time_s={_fmt(payload['bp_time_s'])}")
    click.echo(f"process_token={payload['process_token']}")
    if save:
        request = urllib.request.Request(
            f"{base}/api/v1/sessions",
            data=json.dumps({"process_token": payload["process_token"]}).encode(),
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(request) as response:
                saved = json.loads(response.read())
        except urllib.error.HTTPError as exc:
            _fail(EXIT_PIPELINE_FAULT, f"save failed with {exc.code}")
        click.echo(f"session_id={saved['session_id']}")


@main.command("simulate")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="JSON simulation spec; fields may be lists to sweep.")
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              required=True)
@click.option("--seed-base", type=int, default=0, show_default=True)
def cmd_simulate(spec_path, count, out_dir, seed_base):
    """Generate a deterministic corpus of traces with ground-truth sidecars."""
    if count < 1:
        _fail(EXIT_BAD_INPUT, "--count must be at least 1")
    try:
        payload = json.loads(spec_path.read_text()) if spec_path else {}
    except json.JSONDecodeError as exc:
        _fail(EXIT_BAD_INPUT, f"bad spec JSON: {exc}")
    if not isinstance(payload, dict):
        _fail(EXIT_BAD_INPUT, "spec must be a JSON object")

    sweep_keys = [k for k, v in payload.items() if isinstance(v, list)
                  and k not in ("pulse_amplitude", "dc_level")]
    sweep_values = [payload[k] for k in sweep_keys]
    combos = list(itertools.product(*sweep_values)) if sweep_keys else [()]

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(count):
        combo = combos[i % len(combos)]
        fields = dict(payload)
        fields.update(dict(zip(sweep_keys, combo)))
        fields["seed"] = seed_base + i
        try:
            spec = SimSpec.from_dict(fields)
            trace, truth = synth_trace(spec)
        except InvalidInputError as exc:
            _fail(EXIT_BAD_INPUT, f"invalid simulation spec: {exc}")
        trace_path = out_dir / f"trace_{i:03d}.csv"
        write_trace_csv(trace, trace_path)
        write_ground_truth(truth.to_dict(), truth_path_for(trace_path))
        written.append(trace_path.name)
        click.echo(trace_path.name)
    click.echo(f"wrote {len(written)} trace(s) to {out_dir}", err=True)


_EVAL_VITALS = (
    # (csv column stem, truth sidecar key)
    ("hr_bpm", "hr_bpm"),
    ("rr_brpm", "rr_brpm"),
    ("spo2_percent", "spo2_percent"),
    ("hrv_rmssd_ms", "hrv_ms"),
)


@main.command("evaluate")
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--channel", type=click.Choice(["g", "r", "b", "chrominance"]), default="g",
              show_default=True)
@click.option("--bp-coeffs", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None)
def cmd_evaluate(corpus_dir, channel, bp_coeffs):
    """Score traces against their ground-truth sidecars; emit a CSV table.

    Rows are one per trace; ``#``-prefixed trailer lines carry the
    aggregate metrics (per-vital MAE, mean processing time).
    """
    from .traceio import read_ground_truth

    pairs = []
    for trace_path in sorted(corpus_dir.glob("*.csv")):
        truth_path = truth_path_for(trace_path)
        if truth_path.is_file():
            pairs.append((trace_path, truth_path))
    if not pairs:
        _fail(EXIT_BAD_INPUT, f"no (trace, truth) pairs found in {corpus_dir}")

    try:
        estimator = load_estimator(bp_coeffs)
    except ConfigurationError as exc:
        _fail(EXIT_BAD_INPUT, str(exc))
    config = VitalsConfig(bvp_channel=channel)

    header = ["file"]
    for stem, _ in _EVAL_VITALS:
        header += [f"{stem}_est", f"{stem}_truth", f"{stem}_abs_err"]
    header += ["bp_time_s"]
    click.echo(",".join(header))

    errors: dict[str, list[float]] = {stem: [] for stem, _ in _EVAL_VITALS}
    bp_times = []
    for trace_path, truth_path in pairs:
        try:
            trace = read_trace_csv(trace_path)
            truth = read_ground_truth(truth_path)
            started = time.perf_counter()
            report = estimate_all(trace, config, estimator)
            bp_time_s = time.perf_counter() - started
        except FaceVitalsError as exc:
            _fail(EXIT_PIPELINE_FAULT, f"{trace_path.name}: {exc}")
        bp_times.append(bp_time_s)
        estimates = {
            "hr_bpm": report.hr,
            "rr_brpm": report.rr,
            "spo2_percent": report.spo2,
            "hrv_rmssd_ms": report.hrv,
        }
        row = [trace_path.name]
        for stem, truth_key in _EVAL_VITALS:
            est = estimates[stem].value
            ref = truth.get(truth_key)
            if est is None or ref is None:
                row += [_fmt(est), _fmt(ref), ""]
            else:
                err = abs(float(est) - float(ref))
                errors[stem].append(err)
                row += [_fmt(float(est)), _fmt(float(ref)), _fmt(err)]
        row.append(_fmt(bp_time_s))
        click.echo(",".join(row))

    summary = []
    for stem, _ in _EVAL_VITALS:
        if errors[stem]:
            mae = float(np.mean(errors[stem]))
            click.echo(f"# {stem}_mae={_fmt(mae)}")
            summary.append(f"{stem} MAE {mae:.3f}")
    mean_bp_time = float(np.mean(bp_times))
    click.echo(f"# bp_time_mean_s={_fmt(mean_bp_time)}")
    click.echo(
        f"{len(pairs)} file(s): " + "; ".join(summary)
        + f"; mean processing {mean_bp_time:.2f} s",
        err=True,
    )


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False, path_type=Path),
              default=None)
@click.option("--workers", type=int, default=None,
              help="Worker processes; default is (2 x cores) + 1.")
@click.option("--static-dir", type=click.Path(file_okay=False, path_type=Path),
              default=None, help="Directory of UI assets to serve at /.")
@click.option("--bp-coeffs", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None)
@click.option("--max-payload", type=int, default=None, help="Max upload bytes.")
def cmd_serve(host, port, data_dir, workers, static_dir, bp_coeffs, max_payload):
    """Run the HTTP service."""
    import os

    import uvicorn

    from .config import ENV_PREFIX, default_worker_count

    if workers is None:
        workers = default_worker_count()
    os.environ[ENV_PREFIX + "PORT"] = str(port)
    if data_dir is not None:
        os.environ[ENV_PREFIX + "DATA_DIR"] = str(data_dir)
    if static_dir is not None:
        os.environ[ENV_PREFIX + "STATIC_DIR"] = str(static_dir)
    if bp_coeffs is not None:
        os.environ[ENV_PREFIX + "BP_COEFFS"] = str(bp_coeffs)
    if max_payload is not None:
        os.environ[ENV_PREFIX + "MAX_PAYLOAD_BYTES"] = str(max_payload)
    os.environ[ENV_PREFIX + "WORKERS"] = str(workers)
    click.echo(
        f"serving on http://{host}:{port} with {workers} worker(s)", err=True
    )
    uvicorn.run(
        "facevitals.service:app_from_env",
        factory=True,
        host=host,
        port=port,
        workers=workers,
    )


if __name__ == "__main__":
    main()
