"""Contactless vital-sign estimation from face-video color traces.

The pipeline turns per-frame face-region color means into a blood-volume
pulse and derives heart rate, heart-rate variability, SpO2, respiratory
rate, a stress label and a model-based blood-pressure reading, with
quality gating, a synthetic-data simulator, persistence, an HTTP service
and a CLI on top.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegenerateInputError,
    FaceVitalsError,
    InsufficientDataError,
    InsufficientPeaksError,
    InvalidInputError,
    NoFaceError,
    StorageError,
    UnusableRecordingError,
)
from .signals import (
    DetrendConfig,
    DetrendMethod,
    PeakSeries,
    Signal,
    SpectrumEstimate,
    bandpass,
    detect_peaks,
    detrend,
    estimate_spectrum,
    moving_average,
)
from .roi import (
    Frame,
    FrameAnnotation,
    FrameTrace,
    IlluminationPolicy,
    MessageCode,
    QualityAssessment,
    QualityVerdict,
    RoiMode,
    assess_quality,
    build_trace,
    equalize_histogram,
    extract_channel_means,
)
from .simulate import GroundTruth, NoiseSpec, SimSpec, render_frames, synth_trace
from .vitals import (
    Estimate,
    IBISequence,
    PulseFeatures,
    SpO2Calibration,
    StressLevel,
    VitalsConfig,
    VitalsReport,
    classify_stress,
    compute_channel_components,
    compute_ibis,
    estimate_all,
    estimate_bp,
    estimate_hr,
    estimate_hrv,
    estimate_rr,
    estimate_spo2,
    extract_bvp,
    rmssd,
    spo2_from_ratio,
)
from .bp import AffineBPEstimator, BPReading, load_estimator, parse_coefficients
from .estimators import BVPExtractor, VitalSignsEstimator
from .storage import (
    ComputedVitals,
    Environment,
    GroundTruthVitals,
    Profile,
    SessionRecord,
    SessionStore,
)
from .traceio import read_trace_csv, write_trace_csv

__all__ = [
    "__version__",
    # errors
    "FaceVitalsError", "InvalidInputError", "InsufficientDataError",
    "InsufficientPeaksError", "DegenerateInputError", "NoFaceError",
    "UnusableRecordingError", "ConfigurationError", "StorageError",
    # signal core
    "Signal", "SpectrumEstimate", "PeakSeries", "DetrendConfig", "DetrendMethod",
    "detrend", "moving_average", "bandpass", "estimate_spectrum", "detect_peaks",
    # RoI pipeline
    "Frame", "FrameAnnotation", "FrameTrace", "QualityAssessment",
    "QualityVerdict", "MessageCode", "RoiMode", "IlluminationPolicy",
    "equalize_histogram", "extract_channel_means", "assess_quality", "build_trace",
    # simulator
    "SimSpec", "NoiseSpec", "GroundTruth", "synth_trace", "render_frames",
    # vitals
    "VitalsConfig", "VitalsReport", "Estimate", "IBISequence", "PulseFeatures",
    "SpO2Calibration", "StressLevel", "extract_bvp", "estimate_hr", "compute_ibis",
    "estimate_hrv", "rmssd", "compute_channel_components", "spo2_from_ratio",
    "estimate_spo2", "estimate_rr", "classify_stress", "estimate_bp", "estimate_all",
    # blood pressure
    "AffineBPEstimator", "BPReading", "load_estimator", "parse_coefficients",
    # sklearn-style wrappers
    "BVPExtractor", "VitalSignsEstimator",
    # storage
    "SessionStore", "SessionRecord", "ComputedVitals", "GroundTruthVitals",
    "Environment", "Profile",
    # trace files
    "read_trace_csv", "write_trace_csv",
]
