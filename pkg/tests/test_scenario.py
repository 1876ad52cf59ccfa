import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json

import numpy as np
import pytest

from src.core.exceptions import CityGenerationError, ConfigurationError, InvalidInputError
from src.geometry.polygons import find_layout_problems, point_in_polygon
from src.scenario.city import generate_city
from src.scenario.scenario_file import (
    load_scenario,
    read_observations_csv,
    save_scenario,
    scenario_fingerprint,
    write_observations_csv,
)
from src.transport.response import simulate_observations
from tests.helpers import REFERENCE_CITY


def test_reference_city():
    scn = load_scenario(REFERENCE_CITY)
    assert len(scn.geometry.buildings) == 20
    assert len(scn.detectors) == 10
    assert (scn.true_source.x, scn.true_source.y, scn.true_source.s0) == (158.0, 98.0, 3.219e9)
    assert scn.feasible_box.contains(scn.true_source.as_array())
    assert all(b.sigma_t > 0 for b in scn.geometry.buildings)


def test_scenario_round_trip(tmp_path):
    scn = load_scenario(REFERENCE_CITY)
    path = save_scenario(scn, tmp_path / 'copy.json', provenance='копия')
    again = load_scenario(path)
    assert again == scn
    assert scenario_fingerprint(again) == scenario_fingerprint(scn)


def test_fingerprint_ignores_provenance_and_tracks_content(tmp_path, small_scenario):
    a = load_scenario(save_scenario(small_scenario, tmp_path / 'a.json', provenance='первый'))
    b = load_scenario(save_scenario(small_scenario, tmp_path / 'b.json', provenance='второй'))
    assert scenario_fingerprint(a) == scenario_fingerprint(b)
    changed = small_scenario.model_copy(update={'background': 301.0})
    assert scenario_fingerprint(changed) != scenario_fingerprint(small_scenario)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_scenario(tmp_path / 'absent.json')
    data = json.loads(open(REFERENCE_CITY, encoding='utf-8').read())
    data['schema_version'] = 99
    path = tmp_path / 'future.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    with pytest.raises(ConfigurationError):
        load_scenario(path)


def test_generate_city_is_reproducible(tmp_path):
    a = save_scenario(generate_city((250.0, 180.0), 30, seed=3), tmp_path / 'a.json')
    b = save_scenario(generate_city((250.0, 180.0), 30, seed=3), tmp_path / 'b.json')
    assert a.read_bytes() == b.read_bytes()
    c = generate_city((250.0, 180.0), 30, seed=4)
    assert scenario_fingerprint(c) != scenario_fingerprint(load_scenario(a))


def test_generated_city_layout():
    scn = generate_city((250.0, 180.0), 30, seed=5)
    buildings = scn.geometry.buildings
    assert len(buildings) == 30
    assert find_layout_problems(scn.geometry.bounds, buildings) == []
    for d in scn.detectors:
        assert not any(point_in_polygon(d.position, b) for b in buildings)
    assert not any(point_in_polygon(scn.true_source.position, b) for b in buildings)
    for b in buildings:
        assert 1.0 - 1e-9 <= b.sigma_t * np.sqrt(b.area) <= 5.0 + 1e-9


def test_free_space_city():
    scn = generate_city((100.0, 100.0), 0, seed=1, n_detectors=4)
    assert scn.geometry.buildings == ()
    assert len(scn.detectors) == 4


def test_generation_failure():
    with pytest.raises(CityGenerationError) as info:
        generate_city((50.0, 50.0), 200, seed=1)
    assert info.value.placed < 200
    with pytest.raises(InvalidInputError):
        generate_city((50.0, 50.0), -1, seed=1)


def test_observations_csv(tmp_path, small_scenario):
    obs = simulate_observations(small_scenario, small_scenario.true_source, 4,
                                np.random.Generator(np.random.Philox(2)))
    path = write_observations_csv(obs, tmp_path / 'obs.csv')
    assert read_observations_csv(path) == obs
    with pytest.raises(ConfigurationError):
        read_observations_csv(tmp_path / 'absent.csv')
