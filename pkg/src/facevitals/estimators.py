"""Scikit-learn style wrappers around the functional pipeline.

These adapters expose the trace-to-vitals pipeline through the familiar
``fit``/``transform``/``predict`` verbs with ``get_params`` support, so the
estimators compose with scikit-learn model selection and pipelines. ``X``
is a list of :class:`~facevitals.roi.FrameTrace` objects.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .bp import BPEstimator
from .roi import FrameTrace
from .signals import Signal
from .vitals import (
    VitalsConfig,
    VitalsReport,
    estimate_all,
    extract_bvp,
)


def _config_from_params(
    channel: str,
    hr_band_hz: tuple[float, float],
    rr_band_hz: tuple[float, float],
    smoothing_window_s: float,
    min_peak_to_median: float,
) -> VitalsConfig:
    return VitalsConfig(
        bvp_channel=channel,
        hr_band_hz=hr_band_hz,
        rr_band_hz=rr_band_hz,
        smoothing_window_s=smoothing_window_s,
        min_peak_to_median=min_peak_to_median,
    )


class BVPExtractor(TransformerMixin, BaseEstimator):
    """Transformer mapping traces to blood-volume-pulse signals."""

    def __init__(
        self,
        channel: str = "g",
        hr_band_hz: tuple[float, float] = (0.7, 4.0),
        rr_band_hz: tuple[float, float] = (0.15, 0.35),
        smoothing_window_s: float = 0.2,
        min_peak_to_median: float = 3.0,
    ):
        self.channel = channel
        self.hr_band_hz = hr_band_hz
        self.rr_band_hz = rr_band_hz
        self.smoothing_window_s = smoothing_window_s
        self.min_peak_to_median = min_peak_to_median

    def fit(self, X: list[FrameTrace], y=None) -> "BVPExtractor":
        # stateless: nothing is learned from the traces
        return self

    def transform(self, X: list[FrameTrace]) -> list[Signal]:
        config = _config_from_params(
            self.channel,
            self.hr_band_hz,
            self.rr_band_hz,
            self.smoothing_window_s,
            self.min_peak_to_median,
        )
        return [extract_bvp(trace, config) for trace in X]


class VitalSignsEstimator(BaseEstimator):
    """Estimator mapping traces to full vitals reports."""

    def __init__(
        self,
        channel: str = "g",
        hr_band_hz: tuple[float, float] = (0.7, 4.0),
        rr_band_hz: tuple[float, float] = (0.15, 0.35),
        smoothing_window_s: float = 0.2,
        min_peak_to_median: float = 3.0,
        bp_estimator: BPEstimator | None = None,
    ):
        self.channel = channel
        self.hr_band_hz = hr_band_hz
        self.rr_band_hz = rr_band_hz
        self.smoothing_window_s = smoothing_window_s
        self.min_peak_to_median = min_peak_to_median
        self.bp_estimator = bp_estimator

    def fit(self, X: list[FrameTrace], y=None) -> "VitalSignsEstimator":
        # stateless: estimation is fully determined by the parameters
        return self

    def predict(self, X: list[FrameTrace]) -> list[VitalsReport]:
        config = _config_from_params(
            self.channel,
            self.hr_band_hz,
            self.rr_band_hz,
            self.smoothing_window_s,
            self.min_peak_to_median,
        )
        return [estimate_all(trace, config, self.bp_estimator) for trace in X]
