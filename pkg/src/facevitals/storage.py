"""Session persistence in a single-file embedded database.

One denormalized ``sessions`` table holds everything a measurement session
produced: computed vitals with validity flags, optional user-entered
reference values, recording environment and subject profile. A ``meta``
table stamps the schema version for future migrations. Floats are stored
as 8-byte reals, so save/load round-trips are lossless.
"""

from __future__ import annotations

import sqlite3
import threading
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import InvalidInputError, StorageError
from .vitals import StressLevel, VitalsReport

SCHEMA_VERSION = 1

BRIGHTNESS_VALUES = ("bright", "dark")
LIGHT_TYPE_VALUES = ("warm_white", "cool_white", "daylight")
ACTIVITY_VALUES = ("relaxed", "post_exercise")
SKIN_TONE_VALUES = ("white", "yellow", "brown", "dark")
STRESS_VALUES = tuple(level.value for level in StressLevel)


def _check_enum(name: str, value: str | None, allowed: tuple[str, ...]) -> None:
    if value is not None and value not in allowed:
        raise InvalidInputError(
            f"{name} must be one of {allowed}, got {value!r}"
        )


@dataclass
class ComputedVitals:
    """Computed vitals with their validity flags; values may be absent."""

    hr_bpm: float | None = None
    hr_valid: bool = False
    hrv_rmssd_ms: float | None = None
    hrv_valid: bool = False
    spo2_percent: float | None = None
    spo2_valid: bool = False
    rr_brpm: float | None = None
    rr_valid: bool = False
    sbp_mmhg: float | None = None
    dbp_mmhg: float | None = None
    bp_valid: bool = False
    stress_level: str | None = None
    stress_valid: bool = False

    def __post_init__(self):
        _check_enum("stress_level", self.stress_level, STRESS_VALUES)

    @classmethod
    def from_report(cls, report: VitalsReport) -> "ComputedVitals":
        return cls(
            hr_bpm=report.hr.value,
            hr_valid=report.hr.valid,
            hrv_rmssd_ms=report.hrv.value,
            hrv_valid=report.hrv.valid,
            spo2_percent=report.spo2.value,
            spo2_valid=report.spo2.valid,
            rr_brpm=report.rr.value,
            rr_valid=report.rr.valid,
            sbp_mmhg=report.bp.systolic_mmhg,
            dbp_mmhg=report.bp.diastolic_mmhg,
            bp_valid=report.bp.valid,
            stress_level=report.stress.level,
            stress_valid=report.stress.valid,
        )


@dataclass
class GroundTruthVitals:
    """User-entered reference vitals; every field optional.

    Reference HRV and RR are rarely available from consumer devices, so
    those fields exist but are usually left empty.
    """

    hr_bpm: float | None = None
    hrv_rmssd_ms: float | None = None
    spo2_percent: float | None = None
    rr_brpm: float | None = None
    sbp_mmhg: float | None = None
    dbp_mmhg: float | None = None
    stress_level: str | None = None

    def __post_init__(self):
        _check_enum("ground-truth stress_level", self.stress_level, STRESS_VALUES)

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))


@dataclass
class Environment:
    brightness: str | None = None
    light_type: str | None = None
    activity: str | None = None

    def __post_init__(self):
        _check_enum("brightness", self.brightness, BRIGHTNESS_VALUES)
        _check_enum("light_type", self.light_type, LIGHT_TYPE_VALUES)
        _check_enum("activity", self.activity, ACTIVITY_VALUES)

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))


@dataclass
class Profile:
    name: str | None = None
    age: int | None = None
    sex: str | None = None
    skin_tone: str | None = None
    ethnicity: str | None = None

    def __post_init__(self):
        _check_enum("skin_tone", self.skin_tone, SKIN_TONE_VALUES)
        if self.age is not None:
            self.age = int(self.age)
            if not 0 <= self.age <= 150:
                raise InvalidInputError(f"age out of range: {self.age}")

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))


@dataclass
class SessionRecord:
    """One persisted measurement session."""

    timestamp: float
    source_filename: str | None = None
    computed: ComputedVitals = field(default_factory=ComputedVitals)
    ground_truth: GroundTruthVitals | None = None
    environment: Environment | None = None
    profile: Profile | None = None
    id: int | None = None

    def __post_init__(self):
        self.timestamp = float(self.timestamp)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "timestamp": self.timestamp,
            "source_filename": self.source_filename,
            "computed": vars(self.computed).copy(),
            "ground_truth": (
                vars(self.ground_truth).copy() if self.ground_truth else None
            ),
            "environment": (
                vars(self.environment).copy() if self.environment else None
            ),
            "profile": vars(self.profile).copy() if self.profile else None,
        }

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "SessionRecord":
        def build(klass, value):
            if value is None:
                return None
            if not isinstance(value, dict):
                raise InvalidInputError(
                    f"{klass.__name__} section must be an object"
                )
            known = {f.name for f in fields(klass)}
            unknown = set(value) - known
            if unknown:
                raise InvalidInputError(
                    f"unknown {klass.__name__} fields: {sorted(unknown)}"
                )
            return klass(**value)

        if "timestamp" not in payload or payload["timestamp"] is None:
            raise InvalidInputError("session record needs a timestamp")
        return cls(
            timestamp=payload["timestamp"],
            source_filename=payload.get("source_filename"),
            computed=build(ComputedVitals, payload.get("computed")) or ComputedVitals(),
            ground_truth=build(GroundTruthVitals, payload.get("ground_truth")),
            environment=build(Environment, payload.get("environment")),
            profile=build(Profile, payload.get("profile")),
            id=payload.get("id"),
        )


_SCHEMA = """
CREATE TABLE IF NOT EXISTS sessions (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    timestamp REAL NOT NULL,
    source_filename TEXT,
    hr_bpm REAL, hr_valid INTEGER NOT NULL DEFAULT 0,
    hrv_rmssd_ms REAL, hrv_valid INTEGER NOT NULL DEFAULT 0,
    spo2_percent REAL, spo2_valid INTEGER NOT NULL DEFAULT 0,
    rr_brpm REAL, rr_valid INTEGER NOT NULL DEFAULT 0,
    sbp_mmhg REAL, dbp_mmhg REAL, bp_valid INTEGER NOT NULL DEFAULT 0,
    stress_level TEXT, stress_valid INTEGER NOT NULL DEFAULT 0,
    gt_hr_bpm REAL,
    gt_hrv_rmssd_ms REAL,
    gt_spo2_percent REAL,
    gt_rr_brpm REAL,
    gt_sbp_mmhg REAL,
    gt_dbp_mmhg REAL,
    gt_stress_level TEXT,
    env_brightness TEXT,
    env_light_type TEXT,
    env_activity TEXT,
    profile_name TEXT,
    profile_age INTEGER,
    profile_sex TEXT,
    profile_skin_tone TEXT,
    profile_ethnicity TEXT
);
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""

_COLUMNS = (
    "timestamp", "source_filename",
    "hr_bpm", "hr_valid", "hrv_rmssd_ms", "hrv_valid",
    "spo2_percent", "spo2_valid", "rr_brpm", "rr_valid",
    "sbp_mmhg", "dbp_mmhg", "bp_valid", "stress_level", "stress_valid",
    "gt_hr_bpm", "gt_hrv_rmssd_ms", "gt_spo2_percent", "gt_rr_brpm",
    "gt_sbp_mmhg", "gt_dbp_mmhg", "gt_stress_level",
    "env_brightness", "env_light_type", "env_activity",
    "profile_name", "profile_age", "profile_sex",
    "profile_skin_tone", "profile_ethnicity",
)


class SessionStore:
    """Thread-safe store over one database file (":memory:" for tests)."""

    def __init__(self, path: str | Path):
        self._path = str(path)
        self._lock = threading.Lock()
        try:
            self._conn = sqlite3.connect(self._path, check_same_thread=False)
            self._conn.executescript(_SCHEMA)
            self._conn.execute(
                "INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?)",
                (str(SCHEMA_VERSION),),
            )
            self._conn.commit()
        except sqlite3.Error as exc:
            raise StorageError(f"cannot open session store at {self._path}: {exc}")

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "SessionStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    @property
    def schema_version(self) -> int:
        row = self._conn.execute(
            "SELECT value FROM meta WHERE key = 'schema_version'"
        ).fetchone()
        return int(row[0])

    def save_session(self, record: SessionRecord) -> int:
        c = record.computed
        gt = record.ground_truth or GroundTruthVitals()
        env = record.environment or Environment()
        prof = record.profile or Profile()
        values = (
            record.timestamp, record.source_filename,
            c.hr_bpm, int(c.hr_valid), c.hrv_rmssd_ms, int(c.hrv_valid),
            c.spo2_percent, int(c.spo2_valid), c.rr_brpm, int(c.rr_valid),
            c.sbp_mmhg, c.dbp_mmhg, int(c.bp_valid),
            c.stress_level, int(c.stress_valid),
            gt.hr_bpm, gt.hrv_rmssd_ms, gt.spo2_percent, gt.rr_brpm,
            gt.sbp_mmhg, gt.dbp_mmhg, gt.stress_level,
            env.brightness, env.light_type, env.activity,
            prof.name, prof.age, prof.sex, prof.skin_tone, prof.ethnicity,
        )
        placeholders = ", ".join("?" for _ in _COLUMNS)
        sql = (
            f"INSERT INTO sessions ({', '.join(_COLUMNS)}) VALUES ({placeholders})"
        )
        with self._lock:
            try:
                cursor = self._conn.execute(sql, values)
                self._conn.commit()
            except sqlite3.Error as exc:
                raise StorageError(f"cannot save session: {exc}")
        record.id = int(cursor.lastrowid)
        return record.id

    def list_sessions(
        self, start: float | None = None, end: float | None = None
    ) -> list[SessionRecord]:
        """Sessions in insertion order, optionally within [start, end]."""
        sql = f"SELECT id, {', '.join(_COLUMNS)} FROM sessions"
        clauses = []
        args: list[float] = []
        if start is not None:
            clauses.append("timestamp >= ?")
            args.append(float(start))
        if end is not None:
            clauses.append("timestamp <= ?")
            args.append(float(end))
        if clauses:
            sql += " WHERE " + " AND ".join(clauses)
        sql += " ORDER BY id"
        try:
            rows = self._conn.execute(sql, args).fetchall()
        except sqlite3.Error as exc:
            raise StorageError(f"cannot list sessions: {exc}")
        return [self._row_to_record(row) for row in rows]

    @staticmethod
    def _row_to_record(row: tuple) -> SessionRecord:
        values = dict(zip(("id", *_COLUMNS), row))
        computed = ComputedVitals(
            hr_bpm=values["hr_bpm"], hr_valid=bool(values["hr_valid"]),
            hrv_rmssd_ms=values["hrv_rmssd_ms"], hrv_valid=bool(values["hrv_valid"]),
            spo2_percent=values["spo2_percent"], spo2_valid=bool(values["spo2_valid"]),
            rr_brpm=values["rr_brpm"], rr_valid=bool(values["rr_valid"]),
            sbp_mmhg=values["sbp_mmhg"], dbp_mmhg=values["dbp_mmhg"],
            bp_valid=bool(values["bp_valid"]),
            stress_level=values["stress_level"],
            stress_valid=bool(values["stress_valid"]),
        )
        ground_truth = GroundTruthVitals(
            hr_bpm=values["gt_hr_bpm"],
            hrv_rmssd_ms=values["gt_hrv_rmssd_ms"],
            spo2_percent=values["gt_spo2_percent"],
            rr_brpm=values["gt_rr_brpm"],
            sbp_mmhg=values["gt_sbp_mmhg"],
            dbp_mmhg=values["gt_dbp_mmhg"],
            stress_level=values["gt_stress_level"],
        )
        environment = Environment(
            brightness=values["env_brightness"],
            light_type=values["env_light_type"],
            activity=values["env_activity"],
        )
        profile = Profile(
            name=values["profile_name"],
            age=values["profile_age"],
            sex=values["profile_sex"],
            skin_tone=values["profile_skin_tone"],
            ethnicity=values["profile_ethnicity"],
        )
        return SessionRecord(
            timestamp=values["timestamp"],
            source_filename=values["source_filename"],
            computed=computed,
            ground_truth=None if ground_truth.is_empty() else ground_truth,
            environment=None if environment.is_empty() else environment,
            profile=None if profile.is_empty() else profile,
            id=values["id"],
        )
