"""Service configuration from defaults, environment variables, or flags.

Every knob has an ``FACEVITALS_``-prefixed environment variable so the
service can be configured without a config file, which suits container
deployments.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigurationError

ENV_PREFIX = "FACEVITALS_"
DEFAULT_MAX_PAYLOAD_BYTES = 100 * 1024 * 1024


def default_worker_count() -> int:
    """Recommended worker-pool size: (2 x cores) + 1."""
    return 2 * (os.cpu_count() or 1) + 1


@dataclass
class ServiceConfig:
    port: int = 8000
    data_dir: Path = Path("./facevitals-data")
    max_payload_bytes: int = DEFAULT_MAX_PAYLOAD_BYTES
    worker_count: int = 0  # 0 means "use default_worker_count()"
    bp_coeffs_path: Path | None = None
    static_dir: Path | None = None
    retain_uploads: bool = True

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if self.bp_coeffs_path is not None:
            self.bp_coeffs_path = Path(self.bp_coeffs_path)
        if self.static_dir is not None:
            self.static_dir = Path(self.static_dir)
        if self.worker_count == 0:
            self.worker_count = default_worker_count()
        if self.port <= 0 or self.port > 65535:
            raise ConfigurationError(f"port out of range: {self.port}")
        if self.max_payload_bytes <= 0:
            raise ConfigurationError("max_payload_bytes must be positive")
        if self.worker_count < 1:
            raise ConfigurationError("worker_count must be at least 1")

    @property
    def db_path(self) -> Path:
        return self.data_dir / "sessions.db"

    @property
    def upload_dir(self) -> Path:
        return self.data_dir / "uploads"


def _env(name: str) -> str | None:
    return os.environ.get(ENV_PREFIX + name)


def config_from_env(**overrides) -> ServiceConfig:
    """Build a ServiceConfig from FACEVITALS_* variables plus overrides."""
    values: dict = {}
    try:
        if (port := _env("PORT")) is not None:
            values["port"] = int(port)
        if (data_dir := _env("DATA_DIR")) is not None:
            values["data_dir"] = Path(data_dir)
        if (max_payload := _env("MAX_PAYLOAD_BYTES")) is not None:
            values["max_payload_bytes"] = int(max_payload)
        if (workers := _env("WORKERS")) is not None:
            values["worker_count"] = int(workers)
        if (coeffs := _env("BP_COEFFS")) is not None:
            values["bp_coeffs_path"] = Path(coeffs)
        if (static := _env("STATIC_DIR")) is not None:
            values["static_dir"] = Path(static)
        if (retain := _env("RETAIN_UPLOADS")) is not None:
            values["retain_uploads"] = retain.strip().lower() not in ("0", "false", "no")
    except ValueError as exc:
        raise ConfigurationError(f"bad environment configuration: {exc}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ServiceConfig(**values)
