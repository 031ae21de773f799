"""Blood-pressure estimation from pulse-shape features.

Blood pressure cannot be read directly from a color trace; it is predicted
from morphological features of the blood-volume pulse through a pluggable
estimator. The default is an affine model whose weights live in a small
text file, so a retrained model can be dropped in without code changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol

from .errors import ConfigurationError, InvalidInputError

#: feature names an estimator may consume, in canonical order
BP_FEATURE_NAMES = (
    "ibi_mean_ms",
    "ibi_std_ms",
    "peak_amp_mean",
    "rise_time_mean_s",
    "pulse_width_half_s",
    "hr_bpm",
)

SBP_RANGE = (80.0, 200.0)
DBP_RANGE = (40.0, 120.0)

_DEFAULT_RESOURCE = "bp_default.coeffs"


@dataclass(frozen=True)
class BPReading:
    systolic_mmhg: float
    diastolic_mmhg: float


class BPEstimator(Protocol):
    """Anything that maps pulse features to a pressure reading."""

    def predict(self, features: Mapping[str, float]) -> BPReading: ...


def _clamp(value: float, bounds: tuple[float, float]) -> float:
    return min(max(value, bounds[0]), bounds[1])


class AffineBPEstimator:
    """Weighted sum of pulse features plus an intercept, per pressure.

    Readings are clamped to physiological ranges and diastolic is kept
    strictly below systolic.
    """

    def __init__(
        self,
        sbp_weights: Mapping[str, float],
        dbp_weights: Mapping[str, float],
        sbp_intercept: float,
        dbp_intercept: float,
    ):
        for name in (*sbp_weights, *dbp_weights):
            if name not in BP_FEATURE_NAMES:
                raise ConfigurationError(f"unknown blood-pressure feature {name!r}")
        self.sbp_weights = dict(sbp_weights)
        self.dbp_weights = dict(dbp_weights)
        self.sbp_intercept = float(sbp_intercept)
        self.dbp_intercept = float(dbp_intercept)

    def predict(self, features: Mapping[str, float]) -> BPReading:
        missing = (set(self.sbp_weights) | set(self.dbp_weights)) - set(features)
        if missing:
            raise InvalidInputError(
                f"missing blood-pressure features: {sorted(missing)}"
            )
        sbp = self.sbp_intercept + sum(
            w * float(features[name]) for name, w in self.sbp_weights.items()
        )
        dbp = self.dbp_intercept + sum(
            w * float(features[name]) for name, w in self.dbp_weights.items()
        )
        sbp = _clamp(sbp, SBP_RANGE)
        dbp = _clamp(dbp, DBP_RANGE)
        if dbp >= sbp:
            dbp = _clamp(sbp - 10.0, DBP_RANGE)
        return BPReading(systolic_mmhg=sbp, diastolic_mmhg=dbp)


def parse_coefficients(text: str) -> AffineBPEstimator:
    """Build an affine estimator from ``name = value`` coefficient lines.

    Weight names are prefixed ``sbp_`` or ``dbp_`` followed by a feature
    name; ``sbp_intercept`` and ``dbp_intercept`` are required. ``#``
    comments and blank lines are ignored.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"line {lineno}: expected 'name = value', got {raw!r}"
            )
        name, _, value = line.partition("=")
        name = name.strip()
        try:
            values[name] = float(value.strip())
        except ValueError:
            raise ConfigurationError(
                f"line {lineno}: non-numeric value for {name!r}"
            ) from None
    sbp_weights: dict[str, float] = {}
    dbp_weights: dict[str, float] = {}
    intercepts: dict[str, float] = {}
    for name, value in values.items():
        if name in ("sbp_intercept", "dbp_intercept"):
            intercepts[name] = value
        elif name.startswith("sbp_"):
            sbp_weights[name[len("sbp_"):]] = value
        elif name.startswith("dbp_"):
            dbp_weights[name[len("dbp_"):]] = value
        else:
            raise ConfigurationError(
                f"coefficient {name!r} lacks an sbp_/dbp_ prefix"
            )
    for required in ("sbp_intercept", "dbp_intercept"):
        if required not in intercepts:
            raise ConfigurationError(f"missing {required}")
    return AffineBPEstimator(
        sbp_weights=sbp_weights,
        dbp_weights=dbp_weights,
        sbp_intercept=intercepts["sbp_intercept"],
        dbp_intercept=intercepts["dbp_intercept"],
    )


def load_estimator(path: str | Path | None = None) -> AffineBPEstimator:
    """Load coefficients from ``path``, or the packaged defaults."""
    if path is None:
        text = (
            resources.files("facevitals.data")
            .joinpath(_DEFAULT_RESOURCE)
            .read_text(encoding="utf-8")
        )
        return parse_coefficients(text)
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"coefficient file not found: {path}")
    return parse_coefficients(path.read_text(encoding="utf-8"))
