import os

os.environ.setdefault("ENV", "testing")

import pytest

from app.core.config import TestingSettings
from app.core.logging import configure_logging
from app.models.schemas import PotentialParams

configure_logging("WARNING")


@pytest.fixture
def params() -> PotentialParams:
    return PotentialParams(a=10.0, b=4.0, c=0.35)


@pytest.fixture
def harmonic() -> PotentialParams:
    return PotentialParams(a=1.0, b=0.0, c=0.0)


@pytest.fixture
def free() -> PotentialParams:
    return PotentialParams(a=0.0, b=0.0, c=0.0)


@pytest.fixture
def test_settings(tmp_path) -> TestingSettings:
    return TestingSettings(OUTPUT_DIR=str(tmp_path / "output"))
