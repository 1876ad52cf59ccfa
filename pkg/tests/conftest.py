import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from src.core.models import (
    Detector,
    DomainGeometry,
    FeasibleBox,
    Point2,
    Scenario,
    SourceParams,
)
from src.likelihood.objective import FunctionObjective, ObjectiveContext
from src.transport.response import simulate_observations
from tests.helpers import square


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="запускать долгие приёмочные тесты на эталонном сценарии")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: долгий приёмочный тест (только с --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="нужен флаг --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_scenario():
    """Домен 100×100 с одним зданием и пятью детекторами."""
    geometry = DomainGeometry(
        bounds=(100.0, 100.0),
        buildings=(square(40.0, 40.0, 60.0, 60.0, sigma=0.1),),
        air_sigma_t=0.0093,
    )
    detectors = tuple(Detector(position=Point2(x=x, y=y))
                      for x, y in ((10, 10), (90, 10), (10, 90), (90, 90), (50, 20)))
    return Scenario(
        name='small',
        geometry=geometry,
        detectors=detectors,
        background=300.0,
        feasible_box=FeasibleBox(lower=(0.0, 0.0, 5e8), upper=(100.0, 100.0, 5e10)),
        true_source=SourceParams(x=30.0, y=70.0, s0=3e9),
        seed=1,
    )


@pytest.fixture
def small_observations(small_scenario):
    rng = np.random.Generator(np.random.Philox(7))
    return simulate_observations(small_scenario, small_scenario.true_source, 10, rng)


@pytest.fixture
def small_ctx(small_scenario, small_observations):
    return ObjectiveContext(small_scenario, small_observations, workers=1)


@pytest.fixture
def quadratic():
    """Σ(θ − (3, 4, 5))² на [0, 10]³."""
    center = np.array([3.0, 4.0, 5.0])
    box = FeasibleBox(lower=(0.0, 0.0, 0.0), upper=(10.0, 10.0, 10.0))
    return FunctionObjective(lambda v: float(np.sum((v - center) ** 2)), box, workers=1)


@pytest.fixture
def gaussian():
    """Отрицательный логарифм N((5, 5, 5), I) на [0, 10]³."""
    box = FeasibleBox(lower=(0.0, 0.0, 0.0), upper=(10.0, 10.0, 10.0))
    return FunctionObjective(lambda v: float(0.5 * np.sum((v - 5.0) ** 2)), box, workers=1)
