"""Frame-to-trace pipeline: RoI statistics, illumination compensation,
despiking and recording-quality gates.

The server consumes landmark/bounding-box annotations computed client-side;
no face detection happens here. Frames enter as decoded RGB arrays, and the
output is a ``FrameTrace`` (per-frame channel means) plus a
``QualityAssessment`` that tells the caller whether the recording is usable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import cv2
import numpy as np

from .errors import (
    InsufficientDataError,
    InvalidInputError,
    NoFaceError,
    UnusableRecordingError,
)

MAX_DISPLACEMENT_PX = 15.0
MIN_FACE_AREA_RATIO = 0.05
DARK_BRIGHTNESS = 60.0
MAX_FAILED_FRAME_FRACTION = 0.20
DESPIKE_WINDOW_S = 0.5

# landmark groups removed from the RoI in skin-mask mode
MASKED_REGIONS = ("left_eye", "right_eye", "mouth")


class RoiMode(Enum):
    FULL_BOX = "full_box"
    SKIN_MASK = "skin_mask"


class IlluminationPolicy(Enum):
    NEVER = "never"
    ON_DARK = "on_dark"
    ALWAYS = "always"


class QualityVerdict(Enum):
    OK = "ok"
    TOO_FAR = "too_far"
    TOO_MUCH_MOTION = "too_much_motion"
    TOO_DARK = "too_dark"


class MessageCode(Enum):
    """Guidance codes shown to the user; clients map codes to wording."""

    OK = "ok"
    TOO_MUCH_MOTION = "too_much_motion"
    TOO_FAR = "too_far"
    TOO_DARK = "too_dark"
    NO_FACE = "no_face"


#: suggested human wording per guidance code (clients may localize)
GUIDANCE_TEXT = {
    MessageCode.OK: "Looking good.",
    MessageCode.TOO_MUCH_MOTION: "Please stay steady.",
    MessageCode.TOO_FAR: "Please move closer to the camera.",
    MessageCode.TOO_DARK: "Please improve the lighting.",
    MessageCode.NO_FACE: "Please reposition so your face stays in view.",
}

_VERDICT_MESSAGES = {
    QualityVerdict.OK: MessageCode.OK,
    QualityVerdict.TOO_MUCH_MOTION: MessageCode.TOO_MUCH_MOTION,
    QualityVerdict.TOO_FAR: MessageCode.TOO_FAR,
    QualityVerdict.TOO_DARK: MessageCode.TOO_DARK,
}


@dataclass
class Frame:
    """Decoded RGB frame, 8 bits per channel, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise InvalidInputError("frame pixels must have shape (h, w, 3)")
        if self.pixels.shape[0] * self.pixels.shape[1] == 0:
            raise InvalidInputError("frame must contain at least one pixel")
        if self.pixels.dtype != np.uint8:
            self.pixels = np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class FrameAnnotation:
    """Client-computed face location for one frame.

    ``landmarks`` maps a region name (e.g. ``left_eye``) to a polygon of
    (x, y) pixel points; it is optional and only needed for skin-mask RoIs.
    """

    frame_index: int
    timestamp: float
    bounding_box: tuple[float, float, float, float]
    landmarks: Mapping[str, Sequence[tuple[float, float]]] | None = None

    def __post_init__(self):
        x, y, w, h = self.bounding_box
        if w <= 0 or h <= 0:
            raise InvalidInputError("bounding box must have positive size")

    @property
    def center(self) -> tuple[float, float]:
        x, y, w, h = self.bounding_box
        return (x + w / 2.0, y + h / 2.0)

    @property
    def area(self) -> float:
        _, _, w, h = self.bounding_box
        return self.bounding_box[2] * self.bounding_box[3]


@dataclass
class FrameTrace:
    """Per-frame RoI color means over time; the raw signal of the pipeline.

    Stored column-wise: ``timestamps`` are strictly increasing seconds,
    channel means and ``brightness`` live in [0, 255], ``boxes`` holds the
    per-frame bounding box as (x, y, w, h) rows.
    """

    timestamps: np.ndarray
    mean_r: np.ndarray
    mean_g: np.ndarray
    mean_b: np.ndarray
    brightness: np.ndarray
    boxes: np.ndarray
    nominal_fps: float

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.mean_r = np.asarray(self.mean_r, dtype=np.float64)
        self.mean_g = np.asarray(self.mean_g, dtype=np.float64)
        self.mean_b = np.asarray(self.mean_b, dtype=np.float64)
        self.brightness = np.asarray(self.brightness, dtype=np.float64)
        self.boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4)
        n = self.timestamps.size
        for name in ("mean_r", "mean_g", "mean_b", "brightness"):
            if getattr(self, name).size != n:
                raise InvalidInputError(f"{name} length must match timestamps")
        if self.boxes.shape[0] != n:
            raise InvalidInputError("boxes length must match timestamps")
        if n < 2:
            raise InsufficientDataError("a trace needs at least 2 frames")
        if not np.all(np.diff(self.timestamps) > 0):
            raise InvalidInputError("trace timestamps must be strictly increasing")
        for name in ("mean_r", "mean_g", "mean_b"):
            values = getattr(self, name)
            if np.any(values < 0) or np.any(values > 255):
                raise InvalidInputError(f"{name} must stay within [0, 255]")
        if not np.isfinite(self.nominal_fps) or self.nominal_fps <= 0:
            raise InvalidInputError("nominal_fps must be positive")

    def __len__(self):
        return self.timestamps.size

    @property
    def duration_s(self) -> float:
        return len(self) / self.nominal_fps

    def channel(self, name: str) -> np.ndarray:
        try:
            return {"r": self.mean_r, "g": self.mean_g, "b": self.mean_b}[name]
        except KeyError:
            raise InvalidInputError(f"unknown channel {name!r}") from None

    def annotations(self) -> list[FrameAnnotation]:
        """Reconstruct minimal annotations (box + timestamp) from the trace."""
        return [
            FrameAnnotation(i, float(t), tuple(box))
            for i, (t, box) in enumerate(zip(self.timestamps, self.boxes))
        ]


@dataclass
class QualityAssessment:
    """Recording quality gates mirrored from the capture guidance rules.

    ``face_area_ratio`` is None when the frame area is unknown (bare trace
    uploads); the distance gate is then skipped.
    """

    face_area_ratio: float | None
    max_displacement_px: float
    brightness_class: str
    verdict: QualityVerdict
    message_code: MessageCode

    @property
    def ok(self) -> bool:
        return self.verdict is QualityVerdict.OK

    def to_dict(self) -> dict:
        return {
            "face_area_ratio": self.face_area_ratio,
            "max_displacement_px": self.max_displacement_px,
            "brightness_class": self.brightness_class,
            "verdict": self.verdict.value,
            "message_code": self.message_code.value,
        }


def equalize_histogram(frame: Frame) -> Frame:
    """Per-channel histogram equalization.

    Each channel value is remapped to 255 times its cumulative-distribution
    position, stretching low-light frames across the full intensity range.
    """
    out = np.empty_like(frame.pixels)
    total = frame.width * frame.height
    for c in range(3):
        channel = frame.pixels[:, :, c]
        hist = np.bincount(channel.ravel(), minlength=256)
        cdf = np.cumsum(hist) / total
        lut = np.rint(cdf * 255.0).astype(np.uint8)
        out[:, :, c] = lut[channel]
    return Frame(out)


def _clip_box(box, width: int, height: int):
    x, y, w, h = box
    x0 = int(np.floor(max(0.0, x)))
    y0 = int(np.floor(max(0.0, y)))
    x1 = int(np.ceil(min(float(width), x + w)))
    y1 = int(np.ceil(min(float(height), y + h)))
    return x0, y0, x1, y1


def _skin_mask(annotation: FrameAnnotation, x0, y0, x1, y1) -> np.ndarray | None:
    if not annotation.landmarks:
        return None
    mask = np.ones((y1 - y0, x1 - x0), dtype=np.uint8)
    found = False
    for region in MASKED_REGIONS:
        points = annotation.landmarks.get(region)
        if points is None or len(points) < 3:
            continue
        poly = np.asarray(points, dtype=np.float64) - [x0, y0]
        cv2.fillPoly(mask, [np.rint(poly).astype(np.int32)], 0)
        found = True
    if not found:
        return None
    return mask.astype(bool)


def extract_channel_means(
    frame: Frame,
    annotation: FrameAnnotation,
    roi_mode: RoiMode = RoiMode.FULL_BOX,
) -> tuple[float, float, float, float]:
    """Mean R, G, B and brightness over the annotated RoI.

    In skin-mask mode the eye and mouth landmark polygons are excluded;
    without landmarks (or if masking empties the RoI) the full box is used.
    Raises ``NoFaceError`` when the box misses the frame entirely.
    """
    x0, y0, x1, y1 = _clip_box(annotation.bounding_box, frame.width, frame.height)
    if x1 <= x0 or y1 <= y0:
        raise NoFaceError("bounding box does not intersect the frame")
    roi = frame.pixels[y0:y1, x0:x1, :].astype(np.float64)
    mask = None
    if roi_mode is RoiMode.SKIN_MASK:
        mask = _skin_mask(annotation, x0, y0, x1, y1)
        if mask is not None and not mask.any():
            mask = None
    if mask is None:
        means = roi.reshape(-1, 3).mean(axis=0)
    else:
        means = roi[mask].mean(axis=0)
    brightness = float(means.mean())
    return float(means[0]), float(means[1]), float(means[2]), brightness


def assess_quality(
    annotations: Sequence[FrameAnnotation],
    frame_area: float | None,
    brightness_series: Sequence[float],
) -> QualityAssessment:
    """Judge a recording against the motion, distance and lighting gates.

    Verdict precedence: too much motion (box center jumps more than
    15 px between consecutive frames), then too far (median face area under
    5% of the frame), then too dark (median brightness under 60).
    """
    if len(annotations) < 2:
        raise InsufficientDataError("need at least 2 annotated frames")
    centers = np.array([a.center for a in annotations])
    displacement = float(np.max(np.hypot(*(np.diff(centers, axis=0).T))))
    ratio = None
    if frame_area:
        areas = np.array([a.area for a in annotations])
        ratio = float(np.median(areas) / frame_area)
    brightness = float(np.median(np.asarray(brightness_series, dtype=np.float64)))
    brightness_class = "dark" if brightness < DARK_BRIGHTNESS else "bright"

    if displacement > MAX_DISPLACEMENT_PX:
        verdict = QualityVerdict.TOO_MUCH_MOTION
    elif ratio is not None and ratio < MIN_FACE_AREA_RATIO:
        verdict = QualityVerdict.TOO_FAR
    elif brightness_class == "dark":
        verdict = QualityVerdict.TOO_DARK
    else:
        verdict = QualityVerdict.OK
    return QualityAssessment(
        face_area_ratio=ratio,
        max_displacement_px=displacement,
        brightness_class=brightness_class,
        verdict=verdict,
        message_code=_VERDICT_MESSAGES[verdict],
    )


#: MAD of a Gaussian is sigma/1.4826; this converts MADs to sigma units
MAD_TO_SIGMA = 1.4826


def hampel_despike(
    values: np.ndarray,
    window: int,
    n_mad: float = 3.0,
    mad_floor: float = 0.5,
) -> np.ndarray:
    """Sliding-median despiking: replace samples deviating more than
    ``n_mad`` robust standard deviations (scaled local MADs) from the
    window median.

    ``mad_floor`` keeps the threshold meaningful on quantized or flat
    segments where the local MAD collapses to zero. The first and last
    half-windows are left untouched: a mirrored or truncated window there
    would let edge slopes masquerade as spikes.
    """
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if window < 3 or n < window:
        return x.copy()
    window = window if window % 2 == 1 else window + 1
    if n < window:
        return x.copy()
    half = window // 2
    view = np.lib.stride_tricks.sliding_window_view(x, window)
    medians = np.median(view, axis=1)
    mad = np.median(np.abs(view - medians[:, None]), axis=1)
    threshold = n_mad * MAD_TO_SIGMA * np.maximum(mad, mad_floor)
    out = x.copy()
    center = x[half:n - half]
    spikes = np.abs(center - medians) > threshold
    out[half:n - half][spikes] = medians[spikes]
    return out


def despike_trace(trace: FrameTrace) -> FrameTrace:
    """Apply Hampel despiking to each channel series of a trace."""
    window = max(3, int(round(DESPIKE_WINDOW_S * trace.nominal_fps)))
    return FrameTrace(
        timestamps=trace.timestamps,
        mean_r=np.clip(hampel_despike(trace.mean_r, window), 0.0, 255.0),
        mean_g=np.clip(hampel_despike(trace.mean_g, window), 0.0, 255.0),
        mean_b=np.clip(hampel_despike(trace.mean_b, window), 0.0, 255.0),
        brightness=trace.brightness,
        boxes=trace.boxes,
        nominal_fps=trace.nominal_fps,
    )


def build_trace(
    frames: Iterable[tuple[Frame, FrameAnnotation]],
    roi_mode: RoiMode = RoiMode.FULL_BOX,
    illumination_policy: IlluminationPolicy = IlluminationPolicy.NEVER,
) -> tuple[FrameTrace, QualityAssessment]:
    """Fold an annotated frame stream into a despiked trace plus quality.

    Histogram equalization is applied per ``illumination_policy``
    (``on_dark``: only when the whole-frame brightness is under 60). Frames
    whose RoI misses the image are skipped; more than 20% such failures
    makes the recording unusable.
    """
    kept: list[tuple[float, float, float, float]] = []
    kept_annotations: list[FrameAnnotation] = []
    frame_area = None
    total = 0
    failed = 0
    for frame, annotation in frames:
        total += 1
        if frame_area is None:
            frame_area = float(frame.width * frame.height)
        if illumination_policy is IlluminationPolicy.ALWAYS:
            frame = equalize_histogram(frame)
        elif illumination_policy is IlluminationPolicy.ON_DARK:
            if float(frame.pixels.mean()) < DARK_BRIGHTNESS:
                frame = equalize_histogram(frame)
        try:
            means = extract_channel_means(frame, annotation, roi_mode)
        except NoFaceError:
            failed += 1
            continue
        kept.append(means)
        kept_annotations.append(annotation)
    if total == 0 or len(kept) < 2:
        raise InsufficientDataError("need at least 2 successfully annotated frames")
    if failed > MAX_FAILED_FRAME_FRACTION * total:
        raise UnusableRecordingError(
            f"{failed}/{total} frames had no usable face region"
        )
    timestamps = np.array([a.timestamp for a in kept_annotations])
    if not np.all(np.diff(timestamps) > 0):
        raise InvalidInputError("frame timestamps must be strictly increasing")
    nominal_fps = 1.0 / float(np.median(np.diff(timestamps)))
    values = np.array(kept, dtype=np.float64)
    trace = FrameTrace(
        timestamps=timestamps,
        mean_r=values[:, 0],
        mean_g=values[:, 1],
        mean_b=values[:, 2],
        brightness=values[:, 3],
        boxes=np.array([a.bounding_box for a in kept_annotations]),
        nominal_fps=nominal_fps,
    )
    trace = despike_trace(trace)
    quality = assess_quality(kept_annotations, frame_area, trace.brightness)
    return trace, quality
