import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from pipeline_builder import ensure_pipeline  # noqa: E402

from styleforge.fixtures import fixture_preset, fixture_track  # noqa: E402
from styleforge.simcore import CameraConfig, VehicleParams  # noqa: E402


@pytest.fixture(scope="session")
def pipeline():
    """Cached datasets, trained models and evaluation rollouts (slow to build)."""
    return ensure_pipeline()


@pytest.fixture(scope="session")
def train_geom():
    return fixture_track("train")


@pytest.fixture(scope="session")
def test_geom():
    return fixture_track("test")


@pytest.fixture(scope="session")
def camera():
    return CameraConfig()


@pytest.fixture(scope="session")
def vehicle():
    return VehicleParams()


@pytest.fixture(scope="session")
def preset_a():
    return fixture_preset("a")


@pytest.fixture(scope="session")
def preset_b():
    return fixture_preset("b")
