import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json

import numpy as np
import pytest

import src.main as main_module
from src.config.settings import settings
from src.core.models import ChainSet
from src.main import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from src.modules.mcmc.chains import write_chains_csv
from tests.helpers import REFERENCE_CITY


@pytest.fixture(autouse=True)
def log_dir(tmp_path, monkeypatch):
    monkeypatch.setattr(settings, 'LOG_DIR', str(tmp_path / 'logs'))


def test_generate_and_simulate(tmp_path):
    city = tmp_path / 'city.json'
    assert main(['generate', '--seed', '1', '--buildings', '5', '--out', str(city)]) == EXIT_OK
    assert city.exists()
    obs = tmp_path / 'obs.csv'
    assert main(['simulate', '--scenario', str(city), '--n-rep', '3', '--out', str(obs)]) == EXIT_OK
    assert obs.read_text(encoding='utf-8').startswith('detector,rep_1,rep_2,rep_3')


def test_optimize(tmp_path):
    code = main(['optimize', '--scenario', REFERENCE_CITY, '--method', 'sa', '--max-evaluations', '32',
                 '--seeds', '0', '--name', 'cli', '--output-dir', str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / 'cli' / 'results.csv').exists()


def test_configuration_errors(tmp_path):
    missing = str(tmp_path / 'absent.json')
    assert main(['optimize', '--scenario', missing, '--method', 'sa', '--max-evaluations', '10',
                 '--seeds', '0']) == EXIT_CONFIG
    assert main(['sample', '--scenario', REFERENCE_CITY, '--method', 'sa', '--max-evaluations', '10',
                 '--seeds', '0']) == EXIT_CONFIG
    assert main(['optimize', '--scenario', REFERENCE_CITY, '--method', 'dream', '--seeds', '0']) == EXIT_CONFIG
    assert main(['optimize', '--scenario', REFERENCE_CITY, '--seeds', '0']) == EXIT_CONFIG
    assert main(['report']) == EXIT_CONFIG


def test_usage_error_exits_with_two():
    with pytest.raises(SystemExit) as info:
        main(['generate'])
    assert info.value.code == 2


def test_runtime_error(monkeypatch, tmp_path):
    def boom(*args, **kwargs):
        raise RuntimeError("сбой")

    monkeypatch.setattr(main_module, 'run_experiment', boom)
    code = main(['optimize', '--scenario', REFERENCE_CITY, '--method', 'sa', '--max-evaluations', '10',
                 '--seeds', '0', '--output-dir', str(tmp_path)])
    assert code == EXIT_RUNTIME


def test_generation_failure_is_runtime_error(tmp_path):
    code = main(['generate', '--seed', '1', '--width', '50', '--height', '50', '--buildings', '200',
                 '--out', str(tmp_path / 'x.json')])
    assert code == EXIT_RUNTIME


def test_diagnose(tmp_path):
    rng = np.random.default_rng(0)
    chains = ChainSet(method='dream', samples=rng.normal(size=(2, 300, 3)), log_posteriors=np.zeros((2, 300)))
    path = write_chains_csv(chains, tmp_path / 'chains.csv')
    out = tmp_path / 'diag.json'
    assert main(['diagnose', '--chains', str(path), '--burn-in', '50', '--out', str(out)]) == EXIT_OK
    data = json.loads(out.read_text(encoding='utf-8'))
    assert len(data['geweke_z']) == 3
    assert len(data['gelman_rubin']) == 3


def test_sample_rejects_optimizer_stopping_flags(tmp_path):
    """Флаги останова оптимизатора принимаются парсером, но для семплера — ошибка конфигурации."""
    code = main(['sample', '--scenario', REFERENCE_CITY, '--method', 'dram', '--max-evaluations', '10',
                 '--seeds', '0', '--output-dir', str(tmp_path)])
    assert code == EXIT_CONFIG
    assert not (tmp_path / 'dram').exists()


def _reject_constant(name):
    raise ValueError(f"недопустимая константа {name}")


def test_diagnose_writes_strict_json_for_constant_parameter(tmp_path, capsys):
    """Для постоянного параметра NaN-диагностики записываются как null."""
    rng = np.random.default_rng(1)
    samples = rng.normal(size=(2, 200, 3))
    samples[:, :, 2] = 7.0
    chains = ChainSet(method='dram', samples=samples, log_posteriors=np.zeros((2, 200)))
    path = write_chains_csv(chains, tmp_path / 'chains.csv')
    out = tmp_path / 'diag.json'
    assert main(['diagnose', '--chains', str(path), '--out', str(out)]) == EXIT_OK

    data = json.loads(out.read_text(encoding='utf-8'), parse_constant=_reject_constant)
    assert data['gelman_rubin'][2] is None
    assert data['geweke_z'][2] is None
    printed = capsys.readouterr().out
    assert 'NaN' not in printed
