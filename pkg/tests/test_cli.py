"""CLI tests: process, simulate, evaluate, and the remote service path."""

from __future__ import annotations

import dataclasses
import json
import threading
import time

import numpy as np
import pytest
from click.testing import CliRunner

from facevitals.cli import main
from facevitals.simulate import SimSpec, synth_trace
from facevitals.traceio import (
    read_ground_truth,
    read_trace_csv,
    truth_path_for,
    write_ground_truth,
    write_trace_csv,
)

runner = CliRunner()


def parse_kv(output: str) -> dict[str, str]:
    values = {}
    for line in output.splitlines():
        if "=" in line and not line.startswith("#"):
            key, _, value = line.partition("=")
            values[key] = value
    return values


@pytest.fixture()
def trace_path(tmp_path):
    trace, _ = synth_trace(SimSpec())
    path = tmp_path / "clean.csv"
    write_trace_csv(trace, path)
    return path


@pytest.fixture()
def jumpy_trace_path(tmp_path):
    trace, _ = synth_trace(SimSpec())
    boxes = trace.boxes.copy()
    boxes[len(trace) // 2 :, 1] += 20.0
    write_trace_csv(
        dataclasses.replace(trace, boxes=boxes), tmp_path / "jumpy.csv"
    )
    return tmp_path / "jumpy.csv"


class TestProcess:
    def test_clean_trace_prints_report(self, trace_path):
        result = runner.invoke(main, ["process", str(trace_path)])
        assert result.exit_code == 0, result.output
        values = parse_kv(result.stdout)
        assert abs(float(values["hr_bpm"]) - 72.0) <= 2.0
        assert values["hr_bpm_valid"] == "true"
        assert values["stress_level"] == "normal"
        assert values["verdict"] == "ok"
        assert float(values["bp_time_s"]) > 0
        assert "HR" in result.stderr

    def test_chrominance_channel(self, trace_path):
        result = runner.invoke(
            main, ["process", str(trace_path), "--channel", "chrominance"]
        )
        assert result.exit_code == 0
        assert abs(float(parse_kv(result.stdout)["hr_bpm"]) - 72.0) <= 2.0

    def test_missing_file_is_bad_input(self, tmp_path):
        result = runner.invoke(main, ["process", str(tmp_path / "absent.csv")])
        assert result.exit_code == 2

    def test_garbage_csv_is_bad_input(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,trace\n")
        result = runner.invoke(main, ["process", str(bad)])
        assert result.exit_code == 2
        assert "error:" in result.stderr

    def test_motion_rejection_exits_3_with_quality(self, jumpy_trace_path):
        result = runner.invoke(main, ["process", str(jumpy_trace_path)])
        assert result.exit_code == 3
        values = parse_kv(result.stdout)
        assert values["verdict"] == "too_much_motion"
        assert float(values["max_displacement_px"]) >= 20.0
        assert "hr_bpm" not in values
        assert "rejected" in result.stderr

    def test_distance_gate_via_frame_dimensions(self, trace_path):
        result = runner.invoke(
            main,
            [
                "process",
                str(trace_path),
                "--frame-width",
                "640",
                "--frame-height",
                "480",
            ],
        )
        assert result.exit_code == 3
        assert parse_kv(result.stdout)["verdict"] == "too_far"

    def test_save_requires_server_url(self, trace_path):
        result = runner.invoke(main, ["process", str(trace_path), "--save"])
        assert result.exit_code == 2
        assert "--server-url" in result.stderr

    def test_video_requires_annotations(self, tmp_path):
        clip = tmp_path / "clip.mp4"
        clip.write_bytes(b"\x00" * 16)
        result = runner.invoke(main, ["process", str(clip)])
        assert result.exit_code == 2
        assert "annotation" in result.stderr

    def test_custom_bp_coefficients(self, trace_path, tmp_path):
        coeffs = tmp_path / "bp.coeffs"
        coeffs.write_text("sbp_intercept = 115\ndbp_intercept = 72\n")
        result = runner.invoke(
            main, ["process", str(trace_path), "--bp-coeffs", str(coeffs)]
        )
        assert result.exit_code == 0
        values = parse_kv(result.stdout)
        assert float(values["sbp_mmhg"]) == 115.0
        assert float(values["dbp_mmhg"]) == 72.0

    def test_broken_bp_coefficients_is_bad_input(self, trace_path, tmp_path):
        coeffs = tmp_path / "bp.coeffs"
        coeffs.write_text("sbp_intercept = house\n")
        result = runner.invoke(
            main, ["process", str(trace_path), "--bp-coeffs", str(coeffs)]
        )
        assert result.exit_code == 2


class TestSimulate:
    def test_writes_traces_and_truth_sidecars(self, tmp_path):
        out = tmp_path / "corpus"
        result = runner.invoke(main, ["simulate", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert result.stdout.splitlines() == ["trace_000.csv"]
        trace = read_trace_csv(out / "trace_000.csv")
        assert len(trace) == 900  # 30 s at 30 fps
        truth = read_ground_truth(truth_path_for(out / "trace_000.csv"))
        assert truth["hr_bpm"] == 72.0

    def test_corpus_is_deterministic(self, tmp_path):
        for name in ("a", "b"):
            result = runner.invoke(
                main,
                ["simulate", "--out", str(tmp_path / name), "--count", "2",
                 "--seed-base", "7"],
            )
            assert result.exit_code == 0
        for fname in ("trace_000.csv", "trace_001.csv"):
            assert (tmp_path / "a" / fname).read_bytes() == (
                tmp_path / "b" / fname
            ).read_bytes()

    def test_seed_base_changes_noisy_output(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"noise": {"white_sigma": 1.0}}))
        for name, base in (("a", "0"), ("b", "1")):
            result = runner.invoke(
                main,
                ["simulate", "--spec", str(spec), "--out", str(tmp_path / name),
                 "--seed-base", base],
            )
            assert result.exit_code == 0
        assert (tmp_path / "a" / "trace_000.csv").read_bytes() != (
            tmp_path / "b" / "trace_000.csv"
        ).read_bytes()

    def test_list_fields_sweep_the_grid(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"hr_bpm": [60.0, 90.0], "duration_s": 12.0}))
        out = tmp_path / "sweep"
        result = runner.invoke(
            main,
            ["simulate", "--spec", str(spec), "--count", "4", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        rates = [
            read_ground_truth(truth_path_for(out / f"trace_{i:03d}.csv"))["hr_bpm"]
            for i in range(4)
        ]
        assert rates == [60.0, 90.0, 60.0, 90.0]

    def test_bad_spec_json_is_bad_input(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text("{broken")
        result = runner.invoke(
            main, ["simulate", "--spec", str(spec), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2

    def test_non_object_spec_is_bad_input(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text("[1, 2]")
        result = runner.invoke(
            main, ["simulate", "--spec", str(spec), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2

    def test_invalid_spec_values_are_bad_input(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"fps": 0}))
        result = runner.invoke(
            main, ["simulate", "--spec", str(spec), "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2

    def test_zero_count_is_bad_input(self, tmp_path):
        result = runner.invoke(
            main, ["simulate", "--count", "0", "--out", str(tmp_path / "o")]
        )
        assert result.exit_code == 2


class TestEvaluate:
    def make_corpus(self, out, args=()):
        result = runner.invoke(main, ["simulate", "--out", str(out), *args])
        assert result.exit_code == 0, result.output

    def test_scores_against_sidecars(self, tmp_path):
        out = tmp_path / "corpus"
        self.make_corpus(out, ["--count", "3"])
        result = runner.invoke(main, ["evaluate", str(out)])
        assert result.exit_code == 0, result.output
        lines = result.stdout.splitlines()
        table = [line for line in lines if not line.startswith("#")]
        trailers = parse_kv(
            "\n".join(line[2:] for line in lines if line.startswith("# "))
        )
        header = table[0].split(",")
        assert header[0] == "file"
        assert "hr_bpm_est" in header and "hr_bpm_abs_err" in header
        assert len(table) == 4  # header + one row per trace
        assert float(trailers["hr_bpm_mae"]) <= 2.0
        assert float(trailers["bp_time_mean_s"]) > 0

    def test_trailer_mae_matches_table(self, tmp_path):
        out = tmp_path / "corpus"
        self.make_corpus(out, ["--count", "3"])
        result = runner.invoke(main, ["evaluate", str(out)])
        lines = result.stdout.splitlines()
        header = lines[0].split(",")
        column = header.index("hr_bpm_abs_err")
        rows = [line.split(",") for line in lines[1:] if not line.startswith("#")]
        errors = [float(row[column]) for row in rows if row[column]]
        trailers = parse_kv(
            "\n".join(line[2:] for line in lines if line.startswith("# "))
        )
        assert float(trailers["hr_bpm_mae"]) == pytest.approx(
            float(np.mean(errors)), abs=1e-12
        )

    def test_known_offset_yields_exact_mae(self, tmp_path):
        """One pair whose truth is 2 bpm off the estimate scores MAE 2.0."""
        out = tmp_path / "corpus"
        out.mkdir()
        trace, _ = synth_trace(SimSpec())
        trace_path = out / "trace_000.csv"
        write_trace_csv(trace, trace_path)

        probe = runner.invoke(main, ["process", str(trace_path)])
        estimate = float(parse_kv(probe.stdout)["hr_bpm"])
        write_ground_truth({"hr_bpm": estimate - 2.0}, truth_path_for(trace_path))

        result = runner.invoke(main, ["evaluate", str(out)])
        assert result.exit_code == 0, result.output
        trailers = parse_kv(
            "\n".join(
                line[2:] for line in result.stdout.splitlines()
                if line.startswith("# ")
            )
        )
        assert float(trailers["hr_bpm_mae"]) == 2.0

    def test_missing_truth_values_are_skipped(self, tmp_path):
        out = tmp_path / "corpus"
        out.mkdir()
        trace, _ = synth_trace(SimSpec())
        write_trace_csv(trace, out / "trace_000.csv")
        write_ground_truth({"hr_bpm": 72.0}, truth_path_for(out / "trace_000.csv"))
        result = runner.invoke(main, ["evaluate", str(out)])
        assert result.exit_code == 0
        trailers = parse_kv(
            "\n".join(
                line[2:] for line in result.stdout.splitlines()
                if line.startswith("# ")
            )
        )
        assert "hr_bpm_mae" in trailers
        assert "spo2_percent_mae" not in trailers

    def test_empty_corpus_is_bad_input(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        result = runner.invoke(main, ["evaluate", str(empty)])
        assert result.exit_code == 2
        assert "no (trace, truth) pairs" in result.stderr

    def test_trace_without_sidecar_is_not_a_pair(self, tmp_path):
        out = tmp_path / "corpus"
        out.mkdir()
        trace, _ = synth_trace(SimSpec(duration_s=12.0))
        write_trace_csv(trace, out / "orphan.csv")
        result = runner.invoke(main, ["evaluate", str(out)])
        assert result.exit_code == 2


@pytest.fixture()
def live_server(tmp_path):
    """A real uvicorn server on an ephemeral port, for the remote CLI path."""
    import uvicorn

    from facevitals.config import ServiceConfig
    from facevitals.service import create_app

    app = create_app(ServiceConfig(data_dir=tmp_path / "svc"))
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10.0
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=10.0)


class TestRemoteProcess:
    def test_process_and_save_through_server(self, trace_path, live_server):
        result = runner.invoke(
            main,
            ["process", str(trace_path), "--server-url", live_server, "--save"],
        )
        assert result.exit_code == 0, result.output
        values = parse_kv(result.stdout)
        assert abs(float(values["hr_bpm"]) - 72.0) <= 2.0
        assert values["process_token"]
        assert values["session_id"] == "1"

    def test_server_quality_rejection_maps_to_exit_3(
        self, jumpy_trace_path, live_server
    ):
        result = runner.invoke(
            main, ["process", str(jumpy_trace_path), "--server-url", live_server]
        )
        assert result.exit_code == 3
        assert "422" in result.stderr

    def test_unreachable_server_is_pipeline_fault(self, trace_path):
        result = runner.invoke(
            main,
            ["process", str(trace_path), "--server-url", "http://127.0.0.1:9"],
        )
        assert result.exit_code == 4


class TestMisc:
    def test_version_flag(self):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0

    def test_serve_help(self):
        result = runner.invoke(main, ["serve", "--help"])
        assert result.exit_code == 0
        assert "--port" in result.stdout
