import pytest

from ball.geometry import BallIntegration
from catalog.functions import TestFunction
from core.config import env_settings, settings_scope
from quadrature.ladder import ClassifierOptions, TruncationLadder
from service.storage_service import ArtifactStorageService


@pytest.fixture
def fast_settings():
    """Looser quadrature for tests that only need a few digits"""
    settings = env_settings().model_copy(update={"quad_tol": 1e-5, "max_cells": 20000})
    with settings_scope(settings):
        yield settings


@pytest.fixture
def halfplane_ladder():
    return TruncationLadder(base=2.0, min_exp=1, max_exp=8)


@pytest.fixture
def ball_ladder():
    return TruncationLadder(base=2.0, min_exp=1, max_exp=10, domain="ball")


@pytest.fixture
def disk_setup(ball_ladder):
    return BallIntegration(ladder=ball_ladder, tol=1e-6, max_cells=20000, seed=11)


@pytest.fixture
def options():
    return ClassifierOptions()


@pytest.fixture
def store(tmp_path):
    return ArtifactStorageService(tmp_path / "out", "0" * 64, 11)


@pytest.fixture
def power_shift():
    return TestFunction(kind="power_shift", a=2.0)


@pytest.fixture
def pure_power():
    return TestFunction(kind="pure_power", t=1.0)


@pytest.fixture
def ball_pole():
    return TestFunction(kind="ball_pole", s=1.0)
