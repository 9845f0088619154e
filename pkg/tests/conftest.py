import numpy as np
import pytest

from es_verify.config import AppConfig, load_config
from es_verify.domain import Box, EsParams
from es_verify.services.objectives import Objective, make_objective

SEED = 12345


class Spike(Objective):
    """Zero at the origin, one everywhere else: nothing ever improves on the origin."""

    name = "spike"

    def __init__(self, d: int = 2):
        super().__init__(d, Box.cube(1.0, d), {"d": d})

    def _values(self, points: np.ndarray) -> np.ndarray:
        return np.where(np.all(points == 0.0, axis=1), 0.0, 1.0)


class Broken(Objective):
    name = "broken"

    def __init__(self):
        super().__init__(1, Box.cube(1.0, 1))

    def _values(self, points: np.ndarray) -> np.ndarray:
        return np.full(points.shape[0], np.nan)


@pytest.fixture
def seed():
    return SEED


@pytest.fixture
def params():
    return EsParams.one_fifth()


@pytest.fixture
def sphere2():
    return make_objective("sphere:d=2")


@pytest.fixture
def spike():
    return Spike()


@pytest.fixture
def broken():
    return Broken()


@pytest.fixture
def app_config() -> AppConfig:
    return load_config()
