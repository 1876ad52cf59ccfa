# src/experiments/runner.py

"""
runner.py

Запуск экспериментов по YAML-описанию:
  - ExperimentConfig — метод (sa | ps | ga | sa+if | ps+if | ga+if | dram | dream | nelder-mead),
    блок параметров метода, критерии останова, параметры неявной фильтрации и Ω₀,
    список seed и каталог результатов;
  - run_experiment — по строке results.csv на seed (ошибки локализации, число
    вычислений, время) и строки-сводки median/mean; для оптимизаторов — трассы
    trace_seed<k>.csv, для семплеров — цепочки, гистограммы и трасса R.
Все файлы, кроме столбца wall_time, однозначно определяются сценарием,
описанием эксперимента и seed.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.config.settings import settings
from src.core.configs import StoppingCriteria, SubdomainSpec
from src.core.exceptions import ConfigurationError
from src.core.models import ChainSet, ObservationSet, OptResult, Scenario, SourceParams
from src.likelihood.objective import ObjectiveContext
from src.modules import build_config, get_optimizer, get_sampler
from src.modules.hybrid.pipeline import derive_target_objective, hybrid_run, make_subdomain
from src.modules.local_opt.simplex import nelder_mead_run
from src.modules.mcmc.chains import gelman_rubin_frame, histograms, summarize_chains, write_chains_csv
from src.scenario.scenario_file import read_observations_csv, scenario_fingerprint
from src.transport.response import simulate_observations

logger = logging.getLogger(__name__)

GLOBAL_METHODS = ('sa', 'ps', 'ga')
HYBRID_METHODS = ('sa+if', 'ps+if', 'ga+if')
SAMPLER_METHODS = ('dram', 'dream')
METHODS = GLOBAL_METHODS + HYBRID_METHODS + SAMPLER_METHODS + ('nelder-mead',)

RESULT_COLUMNS = [
    'method', 'seed', 'x', 'y', 's0', 'error_x', 'error_y', 'rel_error_s0', 'best_objective',
    'n_evaluations', 'termination_reason', 'budget_exhausted', 'contains_truth',
    'target_objective', 'wall_time', 'fingerprint',
]


class TargetDerivation(BaseModel):
    """Опорное целевое значение J: длинный SA + неявная фильтрация + запас."""
    evaluations: int = Field(50_000, ge=1)
    margin: float = 1.0
    seed: int = 0


class ExperimentConfig(BaseModel):
    name: str = 'experiment'
    method: str
    config: Dict[str, Any] = Field(default_factory=dict)
    stopping: Optional[StoppingCriteria] = None
    implicit_filtering: Dict[str, Any] = Field(default_factory=dict)
    subdomain: SubdomainSpec = Field(default_factory=SubdomainSpec)
    seeds: List[int] = Field(default_factory=list)
    n_seeds: Optional[int] = Field(None, ge=1)
    n_rep: int = Field(10, ge=1)
    observations: Optional[str] = None
    observation_seed: int = 0
    target: Optional[TargetDerivation] = None
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)

    @field_validator('method')
    @classmethod
    def _known_method(cls, v: str) -> str:
        key = v.strip().lower()
        if key not in METHODS:
            raise ValueError(f"неизвестный метод '{v}', допустимы: {', '.join(METHODS)}")
        return key

    @model_validator(mode='after')
    def _check(self) -> 'ExperimentConfig':
        if not self.seeds:
            if self.n_seeds is None:
                raise ValueError("нужно задать seeds или n_seeds")
            self.seeds = list(range(self.n_seeds))
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seed в списке должны быть различными")
        if self.method in GLOBAL_METHODS + HYBRID_METHODS and self.stopping is None:
            raise ValueError(f"для метода {self.method} нужен блок stopping")
        return self

    @property
    def global_method(self) -> Optional[str]:
        if self.method in GLOBAL_METHODS:
            return self.method
        if self.method in HYBRID_METHODS:
            return self.method.split('+')[0]
        return None


def load_experiment(path: Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Файл эксперимента не найден: {path}")
    data = yaml.safe_load(path.read_text(encoding='utf-8')) or {}
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ConfigurationError(f"Некорректный файл эксперимента {path}: {e}") from e


def load_observations(scenario: Scenario, experiment: ExperimentConfig) -> ObservationSet:
    """Наблюдения из CSV или синтетические (по истинному источнику и observation_seed)."""
    if experiment.observations:
        obs = read_observations_csv(Path(experiment.observations))
    else:
        if scenario.true_source is None:
            raise ConfigurationError("в сценарии нет истинного источника и не задан файл наблюдений")
        rng = np.random.Generator(np.random.Philox(experiment.observation_seed))
        obs = simulate_observations(scenario, scenario.true_source, experiment.n_rep, rng)
    if obs.n_det != len(scenario.detectors):
        raise ConfigurationError(f"наблюдения для {obs.n_det} детекторов, в сценарии {len(scenario.detectors)}")
    return obs


def check_experiment(scenario: Scenario, experiment: ExperimentConfig) -> None:
    """
    Проверки совместимости метода и сценария до запуска.

    Raises:
        ConfigurationError: несовместимость или некорректные параметры метода.
    """
    if experiment.global_method:
        build_config(experiment.global_method, experiment.config)
    elif experiment.method in SAMPLER_METHODS:
        build_config(experiment.method, experiment.config)
    if experiment.method in HYBRID_METHODS:
        build_config('if', experiment.implicit_filtering)
    if experiment.method == 'dream':
        cfg = build_config('dream', experiment.config)
        if cfg.n_chains < 2 * cfg.n_pairs + 1:
            raise ConfigurationError(f"DREAM: {cfg.n_chains} цепочек мало для δ={cfg.n_pairs}")
    truth = scenario.true_source
    if truth is not None and not scenario.feasible_box.contains(truth.as_array()):
        raise ConfigurationError("истинный источник вне допустимой области сценария")


def _errors(theta: SourceParams, truth: Optional[SourceParams]) -> Dict[str, Any]:
    row: Dict[str, Any] = {'x': theta.x, 'y': theta.y, 's0': theta.s0}
    if truth is None:
        row.update(error_x=np.nan, error_y=np.nan, rel_error_s0=np.nan)
    else:
        row.update(error_x=abs(theta.x - truth.x), error_y=abs(theta.y - truth.y),
                   rel_error_s0=abs(theta.s0 - truth.s0) / truth.s0)
    return row


def trace_frame(result: OptResult, stage: str = '') -> pd.DataFrame:
    """История оптимизации в табличном виде; spread раскладывается на три столбца."""
    rows = []
    for rec in result.trace:
        row = rec.model_dump(exclude={'spread'})
        spread = rec.spread or (np.nan, np.nan, np.nan)
        row.update(spread_x=spread[0], spread_y=spread[1], spread_s0=spread[2])
        rows.append(row)
    df = pd.DataFrame(rows)
    df.insert(0, 'stage', stage or result.method)
    return df


def _run_optimizer(ctx: ObjectiveContext, experiment: ExperimentConfig, stopping: Optional[StoppingCriteria],
                   rng: np.random.Generator, out: Path, seed: int) -> Dict[str, Any]:
    truth = ctx.scenario.true_source
    method = experiment.method
    if method in HYBRID_METHODS:
        optimizer = get_optimizer(experiment.global_method, experiment.config)
        report = hybrid_run(ctx, optimizer, stopping, build_config('if', experiment.implicit_filtering),
                            experiment.subdomain, rng)
        traces = pd.concat([trace_frame(report.global_result, 'global'),
                            trace_frame(report.local_result, 'local')], ignore_index=True)
        final = report.local_result
        row = {
            'n_evaluations': report.n_evaluations,
            'contains_truth': report.contains_truth,
            'budget_exhausted': report.budget_exhausted,
            'termination_reason': f"{report.global_result.termination_reason}+{final.termination_reason}",
        }
    elif method == 'nelder-mead':
        budget = stopping.max_evaluations if stopping and stopping.max_evaluations else 2000
        final = nelder_mead_run(ctx, rng, max_evaluations=budget)
        traces = None
        row = {'n_evaluations': final.n_evaluations, 'contains_truth': None,
               'budget_exhausted': final.budget_exhausted, 'termination_reason': final.termination_reason}
    else:
        final = get_optimizer(method, experiment.config).run(ctx, stopping, rng)
        traces = trace_frame(final)
        contains = None
        if truth is not None:
            # Попала бы истина в Ω₀, построенную вокруг результата глобального этапа
            omega0 = make_subdomain(final.best_theta, experiment.subdomain, ctx.scenario.feasible_box)
            contains = omega0.contains(truth.as_array())
        row = {'n_evaluations': final.n_evaluations, 'contains_truth': contains,
               'budget_exhausted': final.budget_exhausted, 'termination_reason': final.termination_reason}
    if traces is not None and not traces.empty:
        traces.to_csv(out / f"trace_seed{seed}.csv", index=False)
    row.update(_errors(final.best_theta, truth))
    row['best_objective'] = final.best_objective
    return row


def _run_sampler(ctx: ObjectiveContext, experiment: ExperimentConfig, rng: np.random.Generator,
                 out: Path, seed: int) -> Dict[str, Any]:
    sampler = get_sampler(experiment.method, experiment.config)
    chains: ChainSet = sampler.run(ctx, rng)
    write_chains_csv(chains, out / f"chains_seed{seed}.csv")
    histograms(chains).to_csv(out / f"hist_seed{seed}.csv", index=False)
    summarize_chains(chains).to_csv(out / f"summary_seed{seed}.csv", index=False)
    r_frame = gelman_rubin_frame(chains)
    if r_frame is not None:
        r_frame.to_csv(out / f"rtrace_seed{seed}.csv", index=False)

    mean = chains.retained().reshape(-1, 3).mean(axis=0)
    theta = SourceParams(x=float(mean[0]), y=float(mean[1]), s0=float(max(mean[2], 0.0)))
    row = _errors(theta, ctx.scenario.true_source)
    row.update(
        n_evaluations=chains.n_evaluations,
        best_objective=float(-np.max(chains.log_posteriors)),
        termination_reason=f"acceptance={chains.acceptance_rate():.4f}",
        budget_exhausted=False,
        contains_truth=None,
    )
    return row


def summary_rows(df: pd.DataFrame) -> pd.DataFrame:
    """Строки-сводки: медианы и средние числовых столбцов."""
    numeric = ['error_x', 'error_y', 'rel_error_s0', 'best_objective', 'n_evaluations', 'wall_time']
    rows = []
    for label, fn in (('median', np.median), ('mean', np.mean)):
        row = {c: float(fn(df[c].astype(float))) for c in numeric}
        row.update(method=df['method'].iloc[0], seed=label, fingerprint=df['fingerprint'].iloc[0])
        rows.append(row)
    return pd.DataFrame(rows)


def run_experiment(scenario: Scenario, experiment: ExperimentConfig,
                   seeds: Optional[List[int]] = None) -> Tuple[pd.DataFrame, Path]:
    """
    Прогон эксперимента по всем seed.

    Returns:
        (таблица результатов вместе со строками-сводками, путь к results.csv)

    Raises:
        ConfigurationError: несовместимость метода и сценария (до любого запуска).
    """
    seeds = list(seeds) if seeds is not None else experiment.seeds
    check_experiment(scenario, experiment)
    observations = load_observations(scenario, experiment)
    fingerprint = scenario_fingerprint(scenario)
    out = Path(experiment.output_dir) / experiment.name
    out.mkdir(parents=True, exist_ok=True)
    ctx = ObjectiveContext(scenario, observations)

    stopping = experiment.stopping
    target_value = None
    if experiment.target is not None and stopping is not None and stopping.target_objective is None:
        rng = np.random.Generator(np.random.Philox(experiment.target.seed))
        target_value = derive_target_objective(ctx, rng, experiment.target.evaluations, experiment.target.margin)
        stopping = stopping.model_copy(update={'target_objective': target_value})
    elif stopping is not None:
        target_value = stopping.target_objective

    logger.info(f"[experiment] '{experiment.name}': метод {experiment.method}, seed {seeds}, "
                f"сценарий {scenario.name} ({fingerprint[:12]})")
    rows = []
    for seed in seeds:
        ctx.reset_counter()
        rng = np.random.Generator(np.random.Philox(seed))
        started = time.perf_counter()
        if experiment.method in SAMPLER_METHODS:
            row = _run_sampler(ctx, experiment, rng, out, seed)
        else:
            row = _run_optimizer(ctx, experiment, stopping, rng, out, seed)
        row.update(method=experiment.method, seed=seed, target_objective=target_value,
                   wall_time=time.perf_counter() - started, fingerprint=fingerprint)
        logger.info(f"[experiment] seed={seed}: ошибки ({row['error_x']:.4g} м, {row['error_y']:.4g} м, "
                    f"{row['rel_error_s0']:.3%}), вычислений {row['n_evaluations']}")
        rows.append(row)

    df = pd.DataFrame(rows, columns=RESULT_COLUMNS)
    table = pd.concat([df, summary_rows(df)], ignore_index=True)[RESULT_COLUMNS]
    path = out / 'results.csv'
    table.to_csv(path, index=False)
    logger.info(f"[experiment] Результаты сохранены: {path}")
    return table, path
