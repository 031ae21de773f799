"""Vital-sign estimation from color traces.

The blood-volume pulse (BVP) is recovered from a channel of the face trace
by detrending, smoothing and bandpass filtering; heart rate comes from its
dominant spectral peak, heart-rate variability from successive inter-beat
differences, SpO2 from the red/blue AC-DC ratio, respiratory rate from the
low-frequency amplitude envelope, stress from calibrated heart-rate bands,
and blood pressure from pulse-shape features through a pluggable model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import scipy.signal

from .bp import BPEstimator, BPReading, load_estimator
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    InsufficientPeaksError,
    InvalidInputError,
)
from .roi import FrameTrace
from .signals import (
    DetrendConfig,
    Signal,
    bandpass,
    detect_peaks,
    detrend,
    estimate_spectrum,
    moving_average,
)

HR_BAND_HZ = (0.7, 4.0)
RR_BAND_HZ = (0.15, 0.35)
MIN_BVP_DURATION_S = 10.0
MIN_RR_DURATION_S = 30.0
IBI_RANGE_MS = (250.0, 2000.0)
IBI_MAX_DEVIATION = 0.30


class StressLevel(str, enum.Enum):
    RELAXED = "relaxed"
    NORMAL = "normal"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    VERY_HIGH = "very_high"
    EXTREME = "extreme"


#: lower heart-rate edge of each stress band above ``relaxed``
_STRESS_EDGES = (
    (110.0, StressLevel.EXTREME),
    (101.0, StressLevel.VERY_HIGH),
    (92.0, StressLevel.HIGH),
    (84.0, StressLevel.MEDIUM),
    (76.0, StressLevel.LOW),
    (67.0, StressLevel.NORMAL),
)


@dataclass(frozen=True)
class SpO2Calibration:
    """Affine pulse-oximetry calibration: fraction = a - b * ratio."""

    a: float = 1.0
    b: float = 0.04


@dataclass
class VitalsConfig:
    bvp_channel: str = "g"
    hr_band_hz: tuple[float, float] = HR_BAND_HZ
    rr_band_hz: tuple[float, float] = RR_BAND_HZ
    smoothing_window_s: float = 0.2
    peak_min_distance_s: float = 0.25
    peak_min_prominence: float = 0.3
    min_peak_to_median: float = 3.0
    rr_floor_fraction: float = 0.01
    spo2_calibration: SpO2Calibration = field(default_factory=SpO2Calibration)
    detrend: DetrendConfig = field(default_factory=DetrendConfig)


@dataclass
class Estimate:
    """A single vital with its validity flag."""

    value: float | None
    valid: bool
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"value": self.value, "valid": self.valid, "note": self.note}


@dataclass
class StressEstimate:
    level: str | None
    valid: bool
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"level": self.level, "valid": self.valid, "note": self.note}


@dataclass
class BPEstimate:
    systolic_mmhg: float | None
    diastolic_mmhg: float | None
    valid: bool
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "systolic_mmhg": self.systolic_mmhg,
            "diastolic_mmhg": self.diastolic_mmhg,
            "valid": self.valid,
            "note": self.note,
        }


@dataclass
class IBISequence:
    """Accepted inter-beat intervals and the beat times that close them."""

    intervals_ms: np.ndarray
    beat_times_s: np.ndarray

    def __post_init__(self):
        self.intervals_ms = np.asarray(self.intervals_ms, dtype=np.float64)
        self.beat_times_s = np.asarray(self.beat_times_s, dtype=np.float64)

    def __len__(self) -> int:
        return int(self.intervals_ms.size)


@dataclass
class ChannelComponents:
    """Pulsatile (AC) and baseline (DC) strength of one channel."""

    ac: float
    dc: float

    @property
    def perfusion(self) -> float:
        return self.ac / self.dc


@dataclass
class PulseFeatures:
    """Morphological pulse features consumed by blood-pressure models."""

    ibi_mean_ms: float
    ibi_std_ms: float
    peak_amp_mean: float
    rise_time_mean_s: float
    pulse_width_half_s: float
    hr_bpm: float

    def to_dict(self) -> dict[str, float]:
        return {
            "ibi_mean_ms": self.ibi_mean_ms,
            "ibi_std_ms": self.ibi_std_ms,
            "peak_amp_mean": self.peak_amp_mean,
            "rise_time_mean_s": self.rise_time_mean_s,
            "pulse_width_half_s": self.pulse_width_half_s,
            "hr_bpm": self.hr_bpm,
        }


@dataclass
class VitalsReport:
    hr: Estimate
    hrv: Estimate
    spo2: Estimate
    rr: Estimate
    stress: StressEstimate
    bp: BPEstimate

    def to_dict(self) -> dict[str, Any]:
        return {
            "hr_bpm": self.hr.to_dict(),
            "hrv_rmssd_ms": self.hrv.to_dict(),
            "spo2_percent": self.spo2.to_dict(),
            "rr_brpm": self.rr.to_dict(),
            "stress": self.stress.to_dict(),
            "blood_pressure": self.bp.to_dict(),
        }


#: accepted channel-mode spellings, mapped to a canonical key
CHANNEL_MODES = {
    "r": "r",
    "red": "r",
    "g": "g",
    "green": "g",
    "b": "b",
    "blue": "b",
    "chrom": "chrom",
    "chrominance": "chrom",
    "chrominance_combined": "chrom",
}


def _mode_values(trace: FrameTrace, mode: str) -> np.ndarray:
    """Series for a channel mode: a raw channel, or the chrominance combination.

    The chrominance mode normalizes each channel by its own mean (making it
    dimensionless) and combines them as g - r/2 - b/2, which cancels
    illumination changes common to all channels.
    """
    try:
        key = CHANNEL_MODES[mode]
    except KeyError:
        raise InvalidInputError(f"unknown channel mode {mode!r}") from None
    if key != "chrom":
        return trace.channel(key)
    channels = (trace.mean_g, trace.mean_r, trace.mean_b)
    means = [float(np.mean(c)) for c in channels]
    if any(m < 1e-9 for m in means):
        raise DegenerateInputError(
            "chrominance combination needs a nonzero baseline in every channel"
        )
    g, r, b = (c / m for c, m in zip(channels, means))
    return g - r / 2.0 - b / 2.0


def _uniform_channel(trace: FrameTrace, channel: str) -> Signal:
    """Resample one trace channel onto a uniform grid at the nominal rate."""
    values = _mode_values(trace, channel)
    t = trace.timestamps
    fps = trace.nominal_fps
    n = int(round((t[-1] - t[0]) * fps)) + 1
    grid = t[0] + np.arange(n) / fps
    samples = np.interp(grid, t, values)
    return Signal(samples=samples, sampling_rate=fps, start_time=float(t[0]))


def extract_bvp(
    trace: FrameTrace, config: VitalsConfig | None = None
) -> Signal:
    """Recover the blood-volume pulse from a trace channel.

    Detrends the channel, smooths it with a short moving average, bandpass
    filters to the cardiac band and removes the mean. A perfectly constant
    channel yields an all-zero pulse rather than numerical noise.
    """
    config = config or VitalsConfig()
    raw = _uniform_channel(trace, config.bvp_channel)
    if len(raw) < int(round(MIN_BVP_DURATION_S * raw.sampling_rate)):
        raise InsufficientDataError(
            f"need at least {MIN_BVP_DURATION_S:.0f} s for pulse extraction, "
            f"got {raw.duration_s:.1f} s"
        )
    if np.ptp(raw.samples) == 0.0:
        return raw.with_samples(np.zeros_like(raw.samples))
    x = detrend(raw, config.detrend)
    window = max(1, int(round(config.smoothing_window_s * raw.sampling_rate)))
    x = moving_average(x, window)
    x = bandpass(x, *config.hr_band_hz)
    return x.with_samples(x.samples - x.samples.mean())


def estimate_hr(bvp: Signal, config: VitalsConfig | None = None) -> Estimate:
    """Heart rate in bpm from the dominant cardiac-band frequency."""
    config = config or VitalsConfig()
    if len(bvp) < int(round(MIN_BVP_DURATION_S * bvp.sampling_rate)):
        raise InsufficientDataError(
            f"need at least {MIN_BVP_DURATION_S:.0f} s for heart rate, "
            f"got {bvp.duration_s:.1f} s"
        )
    try:
        spectrum = estimate_spectrum(bvp, band=config.hr_band_hz)
    except InsufficientDataError as exc:
        return Estimate(value=None, valid=False, note=str(exc))
    hr = spectrum.dominant_frequency * 60.0
    if spectrum.peak_to_median < config.min_peak_to_median:
        return Estimate(
            value=hr,
            valid=False,
            note="cardiac peak not clearly above the spectral floor",
        )
    return Estimate(value=hr, valid=True)


def compute_ibis(bvp: Signal, config: VitalsConfig | None = None) -> IBISequence:
    """Detect beats and return physiologically plausible inter-beat intervals.

    Intervals outside the plausible range are dropped, then intervals
    deviating more than 30% from a running median of recent accepted
    intervals are rejected as artefacts.
    """
    config = config or VitalsConfig()
    peaks = detect_peaks(
        bvp,
        min_distance_s=config.peak_min_distance_s,
        min_prominence=config.peak_min_prominence,
    )
    if len(peaks) < 2:
        raise InsufficientPeaksError(
            f"need at least 2 beats for intervals, found {len(peaks)}"
        )
    raw_ms = np.diff(peaks.peak_times) * 1000.0
    ends = peaks.peak_times[1:]
    in_range = (raw_ms >= IBI_RANGE_MS[0]) & (raw_ms <= IBI_RANGE_MS[1])
    candidates = raw_ms[in_range]
    candidate_ends = ends[in_range]
    if candidates.size == 0:
        raise InsufficientPeaksError("no intervals in the plausible range")
    accepted: list[float] = []
    accepted_ends: list[float] = []
    seed_median = float(np.median(candidates))
    for interval, end in zip(candidates, candidate_ends):
        reference = float(np.median(accepted[-5:])) if accepted else seed_median
        if abs(interval - reference) <= IBI_MAX_DEVIATION * reference:
            accepted.append(float(interval))
            accepted_ends.append(float(end))
    if not accepted:
        raise InsufficientPeaksError("all intervals rejected as artefacts")
    return IBISequence(
        intervals_ms=np.array(accepted), beat_times_s=np.array(accepted_ends)
    )


def rmssd(intervals_ms: np.ndarray) -> float:
    """Root mean square of successive inter-beat-interval differences."""
    intervals_ms = np.asarray(intervals_ms, dtype=np.float64)
    if intervals_ms.ndim != 1 or intervals_ms.size < 2:
        raise InsufficientDataError("RMSSD needs at least 2 intervals")
    return float(np.sqrt(np.mean(np.square(np.diff(intervals_ms)))))


def estimate_hrv(ibis: IBISequence) -> Estimate:
    """Heart-rate variability (RMSSD, ms) from accepted intervals."""
    if len(ibis) < 2:
        return Estimate(
            value=None, valid=False, note="need at least 2 intervals for RMSSD"
        )
    return Estimate(value=rmssd(ibis.intervals_ms), valid=True)


def compute_channel_components(
    trace: FrameTrace, channel: str, config: VitalsConfig | None = None
) -> ChannelComponents:
    """AC/DC decomposition of one channel.

    DC is the raw channel mean; AC is the standard deviation of the
    cardiac-band content.
    """
    config = config or VitalsConfig()
    raw = _uniform_channel(trace, channel)
    dc = float(np.mean(raw.samples))
    if abs(dc) < 1e-9:
        raise DegenerateInputError(f"channel {channel!r} has no baseline level")
    if np.ptp(raw.samples) == 0.0:
        return ChannelComponents(ac=0.0, dc=dc)
    pulsatile = bandpass(raw.with_samples(raw.samples - dc), *config.hr_band_hz)
    return ChannelComponents(ac=float(np.std(pulsatile.samples)), dc=dc)


def spo2_from_ratio(ratio: float, calibration: SpO2Calibration | None = None) -> float:
    """Oxygen saturation percentage from the red/infrared ratio-of-ratios."""
    calibration = calibration or SpO2Calibration()
    if ratio < 0:
        raise InvalidInputError("ratio-of-ratios cannot be negative")
    return (calibration.a - calibration.b * float(ratio)) * 100.0


def estimate_spo2(
    trace: FrameTrace, config: VitalsConfig | None = None
) -> Estimate:
    """SpO2 from the red and blue channels (blue standing in for infrared).

    Consumer cameras lack an infrared channel, so the blue channel is used
    as its proxy; absolute accuracy therefore depends on per-device
    calibration. Values are clamped to the clinically displayable range and
    flagged invalid when the raw result falls outside it.
    """
    config = config or VitalsConfig()
    red = compute_channel_components(trace, "r", config)
    blue = compute_channel_components(trace, "b", config)
    if red.dc <= 0 or blue.dc <= 0:
        return Estimate(value=None, valid=False, note="channel baseline missing")
    if blue.ac == 0.0 or red.ac == 0.0:
        return Estimate(
            value=None, valid=False, note="no pulsatile component in a channel"
        )
    ratio = red.perfusion / blue.perfusion
    raw_percent = spo2_from_ratio(ratio, config.spo2_calibration)
    clamped = float(min(max(raw_percent, 70.0), 100.0))
    if raw_percent < 70.0 or raw_percent > 100.0:
        return Estimate(
            value=clamped,
            valid=False,
            note=f"ratio {ratio:.2f} outside the calibrated range",
        )
    return Estimate(value=clamped, valid=True)


def estimate_rr(
    trace: FrameTrace, config: VitalsConfig | None = None
) -> Estimate:
    """Respiratory rate in breaths/min from the respiratory band.

    Uses a linear (not smoothness-based) detrend so drift is removed
    without touching the respiratory band, then bandpass filters and takes
    the dominant peak. Flagged invalid when respiratory-band energy is
    negligible next to the rest of the spectrum.
    """
    config = config or VitalsConfig()
    raw = _uniform_channel(trace, config.bvp_channel)
    if len(raw) < int(round(MIN_RR_DURATION_S * raw.sampling_rate)):
        raise InsufficientDataError(
            f"need at least {MIN_RR_DURATION_S:.0f} s for respiratory rate, "
            f"got {raw.duration_s:.1f} s"
        )
    t = np.arange(raw.samples.size) / raw.sampling_rate
    slope, intercept = np.polyfit(t, raw.samples, 1)
    leveled = raw.with_samples(raw.samples - (slope * t + intercept))
    if np.ptp(leveled.samples) == 0.0:
        return Estimate(value=None, valid=False, note="no respiratory modulation")
    resp = bandpass(leveled, *config.rr_band_hz)
    try:
        in_band = estimate_spectrum(resp, band=config.rr_band_hz)
        overall = estimate_spectrum(
            leveled, band=(0.05, raw.sampling_rate / 2.0 * 0.99)
        )
    except InsufficientDataError as exc:
        return Estimate(value=None, valid=False, note=str(exc))
    rr = in_band.dominant_frequency * 60.0
    floor = config.rr_floor_fraction * float(np.max(overall.magnitudes))
    if float(np.max(in_band.magnitudes)) < floor:
        return Estimate(
            value=rr, valid=False, note="no clear respiratory modulation"
        )
    if in_band.peak_to_median < config.min_peak_to_median:
        return Estimate(
            value=rr,
            valid=False,
            note="respiratory peak not clearly above the spectral floor",
        )
    return Estimate(value=rr, valid=True)


def classify_stress(hr_bpm: float) -> StressLevel:
    """Map heart rate onto calibrated stress bands.

    Bands are half-open: a rate equal to a boundary falls in the higher
    band (67 is ``normal``, 110 is ``extreme``).
    """
    if not np.isfinite(hr_bpm) or hr_bpm < 0:
        raise InvalidInputError(f"heart rate must be non-negative, got {hr_bpm}")
    for edge, level in _STRESS_EDGES:
        if hr_bpm >= edge:
            return level
    return StressLevel.RELAXED


def pulse_features(bvp: Signal, config: VitalsConfig | None = None) -> PulseFeatures:
    """Morphological features of the pulse for blood-pressure models."""
    config = config or VitalsConfig()
    x = bvp.samples
    fs = bvp.sampling_rate
    if np.ptp(x) == 0.0:
        raise DegenerateInputError("pulse is flat; no morphology to measure")
    distance = max(1, int(round(config.peak_min_distance_s * fs)))
    prominence = config.peak_min_prominence * float(np.ptp(x))
    peak_idx, _ = scipy.signal.find_peaks(x, distance=distance, prominence=prominence)
    if peak_idx.size < 3:
        raise InsufficientPeaksError(
            f"need at least 3 beats for pulse features, found {peak_idx.size}"
        )
    ibis = np.diff(peak_idx) / fs * 1000.0
    widths, _, _, _ = scipy.signal.peak_widths(x, peak_idx, rel_height=0.5)
    trough_idx, _ = scipy.signal.find_peaks(-x, distance=distance)
    rise_times = []
    for p in peak_idx:
        previous = trough_idx[trough_idx < p]
        if previous.size:
            rise_times.append((p - previous[-1]) / fs)
    rise_mean = float(np.mean(rise_times)) if rise_times else float(np.mean(ibis)) / 2000.0
    ibi_mean = float(np.mean(ibis))
    return PulseFeatures(
        ibi_mean_ms=ibi_mean,
        ibi_std_ms=float(np.std(ibis)),
        peak_amp_mean=float(np.mean(x[peak_idx])),
        rise_time_mean_s=rise_mean,
        pulse_width_half_s=float(np.mean(widths)) / fs,
        hr_bpm=60000.0 / ibi_mean,
    )


def estimate_bp(
    bvp: Signal,
    estimator: BPEstimator | None = None,
    config: VitalsConfig | None = None,
) -> BPEstimate:
    """Blood pressure via a pluggable model over pulse features."""
    estimator = estimator or load_estimator()
    try:
        features = pulse_features(bvp, config)
    except (InsufficientDataError, DegenerateInputError) as exc:
        return BPEstimate(
            systolic_mmhg=None, diastolic_mmhg=None, valid=False, note=str(exc)
        )
    reading: BPReading = estimator.predict(features.to_dict())
    return BPEstimate(
        systolic_mmhg=reading.systolic_mmhg,
        diastolic_mmhg=reading.diastolic_mmhg,
        valid=True,
    )


def estimate_all(
    trace: FrameTrace,
    config: VitalsConfig | None = None,
    bp_estimator: BPEstimator | None = None,
) -> VitalsReport:
    """Estimate every vital, downgrading per-vital failures to invalid flags.

    Nothing here raises for a vital that cannot be computed from the given
    trace; each estimate carries its own validity flag and note instead.
    """
    config = config or VitalsConfig()

    try:
        bvp = extract_bvp(trace, config)
    except (InsufficientDataError, DegenerateInputError) as exc:
        unavailable = str(exc)
        hr = Estimate(value=None, valid=False, note=unavailable)
        bvp = None
    else:
        hr = estimate_hr(bvp, config)

    if bvp is None:
        hrv = Estimate(value=None, valid=False, note="no pulse signal")
        bp = BPEstimate(
            systolic_mmhg=None, diastolic_mmhg=None, valid=False, note="no pulse signal"
        )
    else:
        try:
            hrv = estimate_hrv(compute_ibis(bvp, config))
        except (InsufficientDataError, DegenerateInputError) as exc:
            hrv = Estimate(value=None, valid=False, note=str(exc))
        bp = estimate_bp(bvp, bp_estimator, config)

    try:
        spo2 = estimate_spo2(trace, config)
    except (InsufficientDataError, DegenerateInputError) as exc:
        spo2 = Estimate(value=None, valid=False, note=str(exc))

    try:
        rr = estimate_rr(trace, config)
    except (InsufficientDataError, DegenerateInputError) as exc:
        rr = Estimate(value=None, valid=False, note=str(exc))

    if hr.valid and hr.value is not None:
        stress = StressEstimate(level=classify_stress(hr.value).value, valid=True)
    else:
        stress = StressEstimate(
            level=None, valid=False, note="stress needs a valid heart rate"
        )
    return VitalsReport(hr=hr, hrv=hrv, spo2=spo2, rr=rr, stress=stress, bp=bp)
