"""Shared fixtures: simulated traces and a service client on a temp store."""

from __future__ import annotations

import pytest

from facevitals.config import ServiceConfig
from facevitals.simulate import SimSpec, synth_trace


@pytest.fixture()
def default_trace():
    """A clean 30 s / 30 fps trace at 72 bpm with its ground truth."""
    return synth_trace(SimSpec())


@pytest.fixture()
def service_client(tmp_path):
    """TestClient over a fresh app with an isolated data directory."""
    from fastapi.testclient import TestClient

    from facevitals.service import create_app

    app = create_app(ServiceConfig(data_dir=tmp_path / "svc"))
    with TestClient(app) as client:
        yield client
