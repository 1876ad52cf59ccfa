import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import math

import numpy as np
import pytest

from src.core.exceptions import InvalidInputError, SingularConfigurationError
from src.core.models import Detector, DomainGeometry, Point2, SourceParams
from src.transport.response import (
    ResponseModel,
    assign_cross_sections,
    default_detector_area,
    detector_response,
    expected_counts,
    mean_count,
    simulate_observations,
)
from tests.helpers import square

UNIT_DETECTOR = Detector(position=Point2(x=10, y=0), face_area=1.0, efficiency=1.0, dwell_time=1.0)


def test_inverse_square_in_free_space():
    geom = DomainGeometry(bounds=(20, 20))
    theta = SourceParams(x=0, y=0, s0=4 * math.pi * 100)
    assert detector_response(UNIT_DETECTOR, theta, geom) == pytest.approx(1.0)


def test_air_attenuation():
    geom = DomainGeometry(bounds=(20, 20), air_sigma_t=0.1)
    theta = SourceParams(x=0, y=0, s0=4 * math.pi * 100)
    assert detector_response(UNIT_DETECTOR, theta, geom) == pytest.approx(math.exp(-1.0))


def test_source_on_detector_is_singular():
    geom = DomainGeometry(bounds=(20, 20))
    with pytest.raises(SingularConfigurationError):
        detector_response(UNIT_DETECTOR, SourceParams(x=10, y=0, s0=1e9), geom)


def test_mean_count_adds_background():
    geom = DomainGeometry(bounds=(20, 20))
    d = UNIT_DETECTOR.model_copy(update={'dwell_time': 2.0})
    theta = SourceParams(x=0, y=0, s0=4 * math.pi * 100)
    assert mean_count(d, theta, geom, background=300.0) == pytest.approx(2.0 + 600.0)


def test_expected_counts_matches_single_detector(small_scenario):
    theta = SourceParams(x=25.0, y=75.0, s0=2e9)
    vector = expected_counts(small_scenario, theta)
    single = [mean_count(d, theta, small_scenario.geometry, small_scenario.background)
              for d in small_scenario.detectors]
    assert vector == pytest.approx(single, rel=1e-12)


def test_response_cache_reuses_paths(small_scenario):
    """Повторное положение источника берётся из кеша, меняется только S0."""
    model = ResponseModel(small_scenario, cache_size=16)
    a = model.means(25.0, 75.0, 1e9)
    b = model.means(25.0, 75.0, 2e9)
    assert model.cache.hits == 1
    assert (b - model.background) == pytest.approx(2 * (a - model.background))


def test_simulate_is_reproducible(small_scenario):
    theta = small_scenario.true_source
    a = simulate_observations(small_scenario, theta, 10, np.random.Generator(np.random.Philox(5)))
    b = simulate_observations(small_scenario, theta, 10, np.random.Generator(np.random.Philox(5)))
    assert a == b
    assert (a.n_det, a.n_rep) == (5, 10)
    with pytest.raises(InvalidInputError):
        simulate_observations(small_scenario, theta, 0, np.random.default_rng(0))


def test_assign_cross_sections():
    buildings = [square(0, 0, 4, 4), square(10, 10, 20, 25), square(30, 0, 31, 9)]
    rng = np.random.Generator(np.random.Philox(11))
    out = assign_cross_sections(buildings, (1.0, 5.0), rng)
    for b in out:
        assert 1.0 - 1e-9 <= b.sigma_t * math.sqrt(b.area) <= 5.0 + 1e-9
    again = assign_cross_sections(buildings, (1.0, 5.0), np.random.Generator(np.random.Philox(11)))
    assert [b.sigma_t for b in out] == [b.sigma_t for b in again]
    with pytest.raises(InvalidInputError):
        assign_cross_sections([], (1.0, 5.0))


def test_default_detector_area():
    assert default_detector_area() == pytest.approx(math.pi * 0.0381 ** 2)
