import sys
import os
# Добавляем корень проекта (project-root) в PYTHONPATH
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import pandas as pd
import pytest

from src.core.exceptions import ConfigurationError, ReportError
from src.experiments.report import report
from src.experiments.runner import ExperimentConfig, load_experiment, run_experiment
from src.modules import build_config

SA_FAST = {'n_starts': 8, 'initial_temperatures': [50.0, 50.0, 20.0]}


def experiment(tmp_path, **kwargs):
    data = dict(name='fast', method='sa+if', config=SA_FAST, stopping={'max_evaluations': 200},
                implicit_filtering={'budget': 50}, seeds=[0, 1], output_dir=str(tmp_path))
    data.update(kwargs)
    return ExperimentConfig(**data)


def test_experiment_config_validation(tmp_path):
    assert experiment(tmp_path, seeds=[], n_seeds=3).seeds == [0, 1, 2]
    assert experiment(tmp_path, method='SA+IF').method == 'sa+if'
    with pytest.raises(ValueError):
        experiment(tmp_path, method='tabu')
    with pytest.raises(ValueError):
        experiment(tmp_path, seeds=[1, 1])
    with pytest.raises(ValueError):
        experiment(tmp_path, stopping=None)
    # Семплерам блок stopping не нужен
    assert experiment(tmp_path, method='dream', stopping=None).global_method is None


def test_load_experiment_files(tmp_path):
    root = os.path.join(os.path.dirname(__file__), '..', 'experiments')
    for name in sorted(os.listdir(root)):
        assert load_experiment(os.path.join(root, name)).name
    bad = tmp_path / 'bad.yaml'
    bad.write_text("method: sa\nseeds: [0]\n", encoding='utf-8')
    with pytest.raises(ConfigurationError):
        load_experiment(bad)


def test_target_baselines_match_hybrid_files():
    """Базовые прогоны до целевого J используют ту же конфигурацию, что и глобальный этап гибрида."""
    root = os.path.join(os.path.dirname(__file__), '..', 'experiments')
    for method in ('sa', 'ps', 'ga'):
        hybrid = load_experiment(os.path.join(root, f'{method}_if.yaml'))
        baseline = load_experiment(os.path.join(root, f'{method}_target.yaml'))
        assert baseline.method == hybrid.global_method == method
        assert baseline.config == hybrid.config
        assert baseline.target == hybrid.target
        assert baseline.stopping.resolve_stall_window(3) is None

    sa = build_config('sa', load_experiment(os.path.join(root, 'sa_if.yaml')).config)
    assert sa.initial_temperatures == (240.0, 180.0, 100.0)
    assert sa.reanneal_interval == 30


def test_hybrid_experiment_outputs(tmp_path, small_scenario):
    table, path = run_experiment(small_scenario, experiment(tmp_path))
    assert path == tmp_path / 'fast' / 'results.csv'
    assert table['seed'].tolist() == [0, 1, 'median', 'mean']
    runs = table.iloc[:2]
    assert (runs['n_evaluations'] >= 200).all()
    assert runs['fingerprint'].nunique() == 1
    assert (tmp_path / 'fast' / 'trace_seed0.csv').exists()
    trace = pd.read_csv(tmp_path / 'fast' / 'trace_seed1.csv')
    assert set(trace['stage']) == {'global', 'local'}


def test_experiment_is_reproducible(tmp_path, small_scenario):
    a, _ = run_experiment(small_scenario, experiment(tmp_path / 'a'))
    b, _ = run_experiment(small_scenario, experiment(tmp_path / 'b'))
    pd.testing.assert_frame_equal(a.drop(columns='wall_time'), b.drop(columns='wall_time'))


def test_sampler_experiment_outputs(tmp_path, small_scenario):
    exp = experiment(tmp_path, name='dream', method='dream', stopping=None, seeds=[3],
                     config={'n_chains': 7, 'n_iterations': 40})
    table, _ = run_experiment(small_scenario, exp)
    out = tmp_path / 'dream'
    for name in ('chains_seed3.csv', 'hist_seed3.csv', 'summary_seed3.csv', 'rtrace_seed3.csv'):
        assert (out / name).exists()
    assert table.iloc[0]['n_evaluations'] > 0


def test_incompatible_experiment(tmp_path, small_scenario):
    exp = experiment(tmp_path, method='dream', stopping=None, config={'n_chains': 5, 'n_pairs': 3})
    with pytest.raises(ConfigurationError):
        run_experiment(small_scenario, exp)
    no_truth = small_scenario.model_copy(update={'true_source': None})
    with pytest.raises(ConfigurationError):
        run_experiment(no_truth, experiment(tmp_path))


def test_report(tmp_path, small_scenario):
    _, hybrid_path = run_experiment(small_scenario, experiment(tmp_path, name='hybrid'))
    _, global_path = run_experiment(small_scenario, experiment(tmp_path, name='global', method='sa'))
    out = report([hybrid_path.parent, global_path], tmp_path / 'report')
    table = out['table']
    assert table['method'].tolist() == ['sa', 'sa+if']
    assert table['n_seeds'].tolist() == [2, 2]
    assert not out['traces'].empty
    assert (tmp_path / 'report' / 'report_table.csv').exists()


def test_report_errors(tmp_path, small_scenario):
    with pytest.raises(ReportError):
        report([])
    with pytest.raises(ReportError):
        report([tmp_path / 'missing'])
    _, path = run_experiment(small_scenario, experiment(tmp_path, seeds=[0]))
    other = tmp_path / 'other'
    other.mkdir()
    df = pd.read_csv(path)
    df['fingerprint'] = 'another-scenario'
    df.to_csv(other / 'results.csv', index=False)
    with pytest.raises(ReportError):
        report([path, other])
