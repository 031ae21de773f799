"""Signal-primitive tests: pinned hand-oracles plus algebraic properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facevitals.errors import InsufficientDataError, InvalidInputError
from facevitals.signals import (
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
    trend_cutoff_hz,
)

FS = 30.0


def tone(freq_hz, duration_s=60.0, fs=FS, amp=1.0):
    t = np.arange(int(round(duration_s * fs))) / fs
    return Signal(amp * np.sin(2 * np.pi * freq_hz * t), fs)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


finite_floats = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


class TestSignal:
    def test_duration_and_times(self):
        s = Signal(np.zeros(90), 30.0, start_time=2.0)
        assert s.duration_s == pytest.approx(3.0)
        assert s.times[0] == 2.0
        assert s.times[-1] == pytest.approx(2.0 + 89 / 30.0)
        assert len(s) == 90

    def test_with_samples_keeps_metadata(self):
        s = Signal(np.zeros(10), 25.0, start_time=1.5)
        s2 = s.with_samples(np.ones(4))
        assert s2.sampling_rate == 25.0 and s2.start_time == 1.5
        assert np.array_equal(s2.samples, np.ones(4))

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            Signal(np.zeros((2, 2)), 30.0)
        with pytest.raises(InvalidInputError):
            Signal([0.0, np.nan], 30.0)
        with pytest.raises(InvalidInputError):
            Signal([0.0, 1.0], 0.0)


class TestDetrend:
    def test_constant_maps_to_zeros(self):
        out = detrend(Signal([5.0, 5.0, 5.0, 5.0], FS))
        assert np.max(np.abs(out.samples)) < 1e-9

    def test_linear_ramp_removed(self):
        ramp = np.linspace(0.0, 1.0, 100)
        out = detrend(Signal(ramp, FS))
        assert np.max(np.abs(out.samples)) < 0.01  # residual < 1% of range

    def test_sine_plus_ramp_recovers_sine(self):
        t = np.arange(900) / FS
        clean = np.sin(2 * np.pi * 1.2 * t)
        out = detrend(Signal(clean + 0.5 * t + 3.0, FS))
        corr = np.corrcoef(out.samples, clean)[0, 1]
        assert corr > 0.99

    def test_output_mean_near_zero(self):
        rng = np.random.default_rng(7)
        x = rng.normal(50.0, 5.0, size=600) + 0.3 * np.arange(600)
        out = detrend(Signal(x, FS))
        assert abs(out.samples.mean()) < 1e-6 * x.std() + 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=450)
        once = detrend(Signal(x, FS))
        twice = detrend(once)
        scale = max(1.0, np.max(np.abs(once.samples)))
        assert np.max(np.abs(twice.samples - once.samples)) < 1e-9 * scale

    def test_moving_baseline_removes_affine(self):
        x = 0.5 * np.arange(200) / FS + 2.0
        cfg = DetrendConfig(method=DetrendMethod.MOVING_BASELINE)
        out = detrend(Signal(x, FS), cfg)
        assert np.max(np.abs(out.samples)) < 1e-9

    def test_preserves_length_and_rate(self):
        s = tone(1.0, duration_s=20.0)
        out = detrend(s)
        assert len(out) == len(s) and out.sampling_rate == s.sampling_rate

    def test_too_short_rejected(self):
        with pytest.raises(InvalidInputError):
            detrend(Signal([1.0, 2.0], FS))

    def test_bad_smoothness_rejected(self):
        with pytest.raises(InvalidInputError):
            DetrendConfig(smoothness=0.0)

    def test_cutoff_scales_with_rate(self):
        expected = 30.0 / math.pi * math.asin((16.0 * 300.0**2) ** -0.25)
        assert trend_cutoff_hz(300.0, 30.0) == pytest.approx(expected)
        assert trend_cutoff_hz(300.0, 60.0) == pytest.approx(2 * expected)


class TestMovingAverage:
    def test_window_one_is_identity(self):
        x = np.array([3.0, -1.0, 4.0, 1.0, 5.0])
        out = moving_average(Signal(x, FS), 1)
        assert np.array_equal(out.samples, x)

    def test_pinned_window_three(self):
        out = moving_average(Signal([1.0, 2.0, 3.0, 4.0, 5.0], FS), 3)
        assert np.allclose(out.samples, [1.5, 2.0, 3.0, 4.0, 4.5])

    def test_reduces_white_noise_stddev(self):
        reduced = 0
        for seed in range(100):
            x = np.random.default_rng(seed).normal(0.0, 1.0, size=300)
            out = moving_average(Signal(x, FS), 5)
            reduced += out.samples.std() < x.std()
        assert reduced == 100

    def test_window_bounds_enforced(self):
        s = Signal(np.zeros(10), FS)
        for bad in (0, -1, 11):
            with pytest.raises(InvalidInputError):
                moving_average(s, bad)
        with pytest.raises(InvalidInputError):
            moving_average(s, 2.5)

    @given(
        st.lists(finite_floats, min_size=2, max_size=80),
        st.integers(min_value=1, max_value=80),
        )
    @settings(max_examples=60, deadline=None)
    def test_output_bounded_by_input_range(self, values, window):
        x = np.asarray(values)
        window = min(window, x.size)
        out = moving_average(Signal(x, FS), window).samples
        assert np.all(out >= x.min() - 1e-9) and np.all(out <= x.max() + 1e-9)

    @given(
        st.lists(finite_floats, min_size=2, max_size=80),
        st.integers(min_value=1, max_value=80),
        )
    @settings(max_examples=60, deadline=None)
    def test_mean_shift_bounded_by_edge_effect(self, values, window):
        x = np.asarray(values)
        window = min(window, x.size)
        out = moving_average(Signal(x, FS), window).samples
        bound = np.ptp(x) * window / x.size + 1e-9
        assert abs(out.mean() - x.mean()) <= bound

    @given(
        st.floats(min_value=-5, max_value=5, allow_nan=False),
        st.floats(min_value=-100, max_value=100, allow_nan=False),
        st.integers(min_value=5, max_value=60),
        st.integers(min_value=0, max_value=12),
        )
    @settings(max_examples=60, deadline=None)
    def test_odd_window_preserves_affine_mean(self, slope, offset, n, half):
        window = min(2 * half + 1, n if n % 2 else n - 1)
        x = slope * np.arange(n) + offset
        out = moving_average(Signal(x, FS), window).samples
        scale = max(1.0, np.max(np.abs(x)))
        assert abs(out.mean() - x.mean()) < 1e-9 * scale


class TestBandpass:
    def test_inband_rr_tone_preserved(self):
        s = tone(0.25)
        out = bandpass(s, 0.15, 0.35)
        assert rms(out.samples) == pytest.approx(rms(s.samples), rel=0.10)

    def test_out_of_band_tone_rejected(self):
        s = tone(1.2)
        out = bandpass(s, 0.15, 0.35)
        assert rms(out.samples) < 0.1 * rms(s.samples)

    def test_zero_signal_stays_zero(self):
        out = bandpass(Signal(np.zeros(600), FS), 0.7, 4.0)
        assert np.max(np.abs(out.samples)) < 1e-12

    @pytest.mark.parametrize("freq", [0.35, 8.0])
    def test_hr_band_octave_attenuation(self, freq):
        s = tone(freq)
        out = bandpass(s, 0.7, 4.0)
        attenuation_db = 20 * math.log10(rms(out.samples) / rms(s.samples))
        assert attenuation_db < -20.0

    def test_hr_band_passband_flat(self):
        s = tone(1.5)
        out = bandpass(s, 0.7, 4.0)
        assert rms(out.samples) == pytest.approx(rms(s.samples), rel=0.10)

    def test_zero_phase_no_time_shift(self):
        freq = 1.5
        s = tone(freq, duration_s=30.0)
        out = bandpass(s, 0.7, 4.0)
        t = s.times
        in_phase = np.sum(out.samples * np.sin(2 * np.pi * freq * t))
        quadrature = np.sum(out.samples * np.cos(2 * np.pi * freq * t))
        phase_shift = math.atan2(quadrature, in_phase)
        assert abs(phase_shift) < 0.01  # radians

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=900)
        y = rng.normal(size=900)
        a, b = 2.5, -1.5
        combined = bandpass(Signal(a * x + b * y, FS), 0.7, 4.0).samples
        separate = (
            a * bandpass(Signal(x, FS), 0.7, 4.0).samples
            + b * bandpass(Signal(y, FS), 0.7, 4.0).samples
        )
        scale = np.max(np.abs(separate))
        assert np.max(np.abs(combined - separate)) < 1e-6 * scale

    def test_band_validation(self):
        s = tone(1.0, duration_s=10.0)
        for low, high in [(0.0, 1.0), (2.0, 1.0), (1.0, 15.0), (-1.0, 0.5)]:
            with pytest.raises(InvalidInputError):
                bandpass(s, low, high)

    def test_preserves_length(self):
        s = tone(1.0, duration_s=12.0)
        assert len(bandpass(s, 0.7, 4.0)) == len(s)


class TestEstimateSpectrum:
    def test_pure_tone_dominant_within_one_bin(self):
        s = tone(1.2, duration_s=30.0)
        est = estimate_spectrum(s, (0.7, 4.0))
        assert abs(est.dominant_frequency - 1.2) <= 1.0 / 30.0 + 1e-12

    def test_stronger_tone_wins(self):
        t = np.arange(900) / FS
        x = np.sin(2 * np.pi * 1.2 * t) + 0.3 * np.sin(2 * np.pi * 2.0 * t)
        est = estimate_spectrum(Signal(x, FS), (0.7, 4.0))
        assert abs(est.dominant_frequency - 1.2) <= 1.0 / 30.0 + 1e-12

    def test_constant_signal_rejected(self):
        with pytest.raises(InsufficientDataError):
            estimate_spectrum(Signal(np.full(300, 7.0), FS), (0.7, 4.0))

    def test_short_signal_rejected(self):
        with pytest.raises(InsufficientDataError):
            estimate_spectrum(tone(1.0, duration_s=1.5), (0.7, 4.0))

    def test_band_beyond_nyquist_rejected(self):
        with pytest.raises(InvalidInputError):
            estimate_spectrum(tone(1.0, duration_s=10.0), (0.7, 16.0))

    def test_dominant_matches_direct_dft_argmax(self):
        # brute-force oracle: explicit DFT sums on the shared rfft bin grid
        rng = np.random.default_rng(1)
        for _ in range(10):
            n = int(rng.integers(70, 300))
            fs = float(rng.uniform(10, 60))
            if n < 2 * fs:
                continue
            x = rng.normal(size=n)
            est = estimate_spectrum(Signal(x, fs), (0.7, 4.0))
            xm = x - x.mean()
            hann = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
            windowed = xm * hann
            freqs = np.fft.rfftfreq(n, d=1.0 / fs)
            mags = np.array(
                [
                    abs(np.sum(windowed * np.exp(-2j * np.pi * k * np.arange(n) / n)))
                    for k in range(freqs.size)
                ]
            )
            mask = (freqs >= 0.7) & (freqs <= 4.0)
            expected = freqs[mask][np.argmax(mags[mask])]
            assert est.dominant_frequency == expected

    def test_peak_to_median_ratio(self):
        est = SpectrumEstimate([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 9.0, 1.0], 3.0)
        assert est.peak_to_median == pytest.approx(9.0)
        sparse = SpectrumEstimate([1.0, 2.0, 3.0], [0.0, 0.0, 5.0], 3.0)
        assert math.isinf(sparse.peak_to_median)


class TestDetectPeaks:
    def test_sine_peaks_analytic(self):
        t = np.arange(1000) / 100.0
        peaks = detect_peaks(Signal(np.sin(2 * np.pi * t), 100.0), 0.5)
        assert 9 <= len(peaks) <= 11
        spacings = np.diff(peaks.peak_times)
        assert np.all(np.abs(spacings - 1.0) < 0.02)
        expected = 0.25 + np.arange(len(peaks))
        assert np.max(np.abs(peaks.peak_times - expected)) < 1e-6

    def test_monotone_ramp_has_no_peaks(self):
        peaks = detect_peaks(Signal(np.arange(100.0), 10.0), 0.5)
        assert len(peaks) == 0

    def test_min_distance_keeps_taller_bump(self):
        t = np.arange(0, 8, 0.01)
        x = np.exp(-(((t - 3) / 0.3) ** 2)) + 0.6 * np.exp(-(((t - 5) / 0.3) ** 2))
        peaks = detect_peaks(Signal(x, 100.0), 3.0)
        assert len(peaks) == 1
        assert peaks.peak_times[0] == pytest.approx(3.0, abs=0.02)
        assert peaks.peak_amplitudes[0] == pytest.approx(1.0, abs=0.01)

    def test_start_time_offsets_peak_times(self):
        t = np.arange(1000) / 100.0
        x = np.sin(2 * np.pi * t)
        base = detect_peaks(Signal(x, 100.0), 0.5)
        shifted = detect_peaks(Signal(x, 100.0, start_time=10.0), 0.5)
        assert np.allclose(shifted.peak_times, base.peak_times + 10.0)

    @given(st.floats(min_value=-100, max_value=100, allow_nan=False))
    @settings(max_examples=30, deadline=None)
    def test_invariant_under_constant_offset(self, offset):
        t = np.arange(600) / FS
        x = np.sin(2 * np.pi * 1.3 * t) + 0.2 * np.sin(2 * np.pi * 2.9 * t)
        base = detect_peaks(Signal(x, FS), 0.25)
        moved = detect_peaks(Signal(x + offset, FS), 0.25)
        assert np.allclose(moved.peak_times, base.peak_times)
        assert np.allclose(moved.peak_amplitudes, base.peak_amplitudes + offset)

    def test_unrefined_times_sit_on_sample_grid(self):
        t = np.arange(1000) / 100.0
        peaks = detect_peaks(Signal(np.sin(2 * np.pi * t), 100.0), 0.5, refine=False)
        on_grid = peaks.peak_times * 100.0
        assert np.allclose(on_grid, np.round(on_grid))

    def test_too_short_gives_empty_series(self):
        assert len(detect_peaks(Signal([1.0, 2.0], FS), 0.5)) == 0

    def test_bad_distance_rejected(self):
        with pytest.raises(InvalidInputError):
            detect_peaks(Signal(np.zeros(10), FS), 0.0)

    def test_peak_series_requires_increasing_times(self):
        with pytest.raises(InvalidInputError):
            PeakSeries([2.0, 1.0], [0.0, 0.0])
