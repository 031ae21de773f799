"""Synthetic trace and frame generator with known ground truth.

Generates color traces that embed a cardiac pulse, respiratory amplitude
modulation and configurable noise (white, illumination drift, motion
spikes), plus uniform-color rendered frames whose RoI means reproduce the
trace. Fixed seeds give bit-identical output, which makes these the test
oracle for the rest of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any, Iterator

import numpy as np

from .errors import InvalidInputError
from .roi import Frame, FrameAnnotation, FrameTrace

# second-harmonic fraction of the pulse waveform; gives asymmetric peaks
PULSE_HARMONIC = 0.3


@dataclass
class NoiseSpec:
    white_sigma: float = 0.0
    illumination_drift_per_s: float = 0.0
    motion_spike_rate_hz: float = 0.0
    motion_spike_amp: float = 0.0


@dataclass
class SimSpec:
    """Ground-truth recipe for one synthetic recording."""

    duration_s: float = 30.0
    fps: float = 30.0
    hr_bpm: float = 72.0
    rr_brpm: float = 15.0
    pulse_amplitude: tuple[float, float, float] = (0.5, 2.0, 1.0)
    dc_level: tuple[float, float, float] = (100.0, 100.0, 100.0)
    resp_modulation_depth: float = 0.2
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0
    frame_width: int = 64
    frame_height: int = 64
    box_jump_px: float = 0.0
    box_jump_at_s: float = 0.0

    def __post_init__(self):
        if isinstance(self.noise, dict):
            self.noise = NoiseSpec(**self.noise)
        self.pulse_amplitude = tuple(float(v) for v in self.pulse_amplitude)
        self.dc_level = tuple(float(v) for v in self.dc_level)
        if self.duration_s <= 0:
            raise InvalidInputError("duration_s must be positive")
        if self.fps <= 2.0 * self.hr_bpm / 60.0:
            raise InvalidInputError(
                f"fps {self.fps} violates Nyquist for hr {self.hr_bpm} bpm"
            )
        if not 0.0 <= self.resp_modulation_depth < 1.0:
            raise InvalidInputError("resp_modulation_depth must lie in [0, 1)")
        if len(self.pulse_amplitude) != 3 or len(self.dc_level) != 3:
            raise InvalidInputError("pulse_amplitude and dc_level need 3 channels")

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["pulse_amplitude"] = list(self.pulse_amplitude)
        payload["dc_level"] = list(self.dc_level)
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "SimSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise InvalidInputError(f"unknown simulation fields: {sorted(unknown)}")
        return cls(**payload)


@dataclass
class GroundTruth:
    """Vitals implied by a SimSpec, for evaluation sidecars."""

    hr_bpm: float
    rr_brpm: float
    hrv_ms: float
    spo2_ratio: float | None
    spo2_percent: float | None
    frame_width: int
    frame_height: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _ground_truth(spec: SimSpec) -> GroundTruth:
    amp_r, _, amp_b = spec.pulse_amplitude
    dc_r, _, dc_b = spec.dc_level
    ratio = None
    percent = None
    if amp_b > 0 and dc_b > 0 and dc_r > 0:
        ratio = (amp_r / dc_r) / (amp_b / dc_b)
        percent = min(100.0, (1.0 - 0.04 * ratio) * 100.0)
    return GroundTruth(
        hr_bpm=spec.hr_bpm,
        rr_brpm=spec.rr_brpm,
        hrv_ms=0.0,  # the synthetic pulse is perfectly regular
        spo2_ratio=ratio,
        spo2_percent=percent,
        frame_width=spec.frame_width,
        frame_height=spec.frame_height,
    )


def _boxes(spec: SimSpec, t: np.ndarray) -> np.ndarray:
    w, h = spec.frame_width, spec.frame_height
    box = np.tile(
        np.array([w / 4.0, h / 4.0, w / 2.0, h / 2.0]), (t.size, 1)
    )
    if spec.box_jump_px:
        box[t >= spec.box_jump_at_s, 0] += spec.box_jump_px
    return box


def synth_trace(spec: SimSpec) -> tuple[FrameTrace, GroundTruth]:
    """Generate a synthetic FrameTrace and its ground truth.

    Each channel carries ``dc + amp * (1 + depth*sin(2*pi*f_resp*t)) * p(t)``
    where ``p`` is a unit-baseline pulse waveform (fundamental plus a 0.3
    second harmonic) at the cardiac frequency, followed by illumination
    drift, white noise and Poisson motion spikes. Values are clipped to the
    8-bit range a camera would deliver.
    """
    n = int(round(spec.duration_s * spec.fps))
    if n < 2:
        raise InvalidInputError("spec yields fewer than 2 frames")
    t = np.arange(n) / spec.fps
    f_hr = spec.hr_bpm / 60.0
    f_rr = spec.rr_brpm / 60.0
    pulse = (
        1.0
        + np.sin(2.0 * np.pi * f_hr * t)
        + PULSE_HARMONIC * np.sin(4.0 * np.pi * f_hr * t)
    )
    am = 1.0 + spec.resp_modulation_depth * np.sin(2.0 * np.pi * f_rr * t)
    rng = np.random.default_rng(spec.seed)
    drift = spec.noise.illumination_drift_per_s * t

    spikes = np.zeros(n)
    if spec.noise.motion_spike_rate_hz > 0 and spec.noise.motion_spike_amp > 0:
        count = rng.poisson(spec.noise.motion_spike_rate_hz * spec.duration_s)
        for _ in range(count):
            start = rng.uniform(0.0, spec.duration_s)
            length = rng.uniform(0.1, 0.3)
            sign = 1.0 if rng.uniform() < 0.5 else -1.0
            mask = (t >= start) & (t < start + length)
            spikes[mask] += sign * spec.noise.motion_spike_amp

    channels = []
    for amp, dc in zip(spec.pulse_amplitude, spec.dc_level):
        values = dc + amp * am * pulse + drift + spikes
        if spec.noise.white_sigma > 0:
            values = values + rng.normal(0.0, spec.noise.white_sigma, n)
        channels.append(np.clip(values, 0.0, 255.0))
    mean_r, mean_g, mean_b = channels
    trace = FrameTrace(
        timestamps=t,
        mean_r=mean_r,
        mean_g=mean_g,
        mean_b=mean_b,
        brightness=(mean_r + mean_g + mean_b) / 3.0,
        boxes=_boxes(spec, t),
        nominal_fps=spec.fps,
    )
    return trace, _ground_truth(spec)


def render_frames(spec: SimSpec) -> Iterator[tuple[Frame, FrameAnnotation]]:
    """Render the trace as uniform-color frames plus annotations.

    Frame colors are the trace values quantized to 8 bits, so running the
    frames back through the RoI pipeline reproduces the trace within half a
    quantization step per channel.
    """
    trace, _ = synth_trace(spec)
    colors = np.rint(
        np.stack([trace.mean_r, trace.mean_g, trace.mean_b], axis=1)
    ).astype(np.uint8)
    for i in range(len(trace)):
        pixels = np.empty((spec.frame_height, spec.frame_width, 3), dtype=np.uint8)
        pixels[:, :] = colors[i]
        annotation = FrameAnnotation(
            frame_index=i,
            timestamp=float(trace.timestamps[i]),
            bounding_box=tuple(trace.boxes[i]),
        )
        yield Frame(pixels), annotation
