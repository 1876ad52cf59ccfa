# src/modules/global_opt/genetic.py

"""
genetic.py

Генетический алгоритм с прямым (вещественным) кодированием:
  - элита: r_e лучших особей переходят без изменений и повторно не вычисляются;
  - скрещивание: λ·θ1 + (1 − λ)·θ2, λ ∼ U(0, 1) покомпонентно;
  - мутация: λ·θ + (1 − λ)·ε, ε ∼ U(Ω).
Родители выбираются рулеткой по рангу: вес ∝ 1/√ранга, ранг 1 — наименьшее J.
Все потомки — выпуклые комбинации допустимых точек, поэтому остаются в Ω.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from src.core.configs import GAConfig, StoppingCriteria
from src.core.interfaces import ObjectiveInterface, OptimizerInterface
from src.core.models import FeasibleBox, OptResult, TraceRecord
from src.modules.global_opt.stopping import StopMonitor, build_result, population_record

logger = logging.getLogger(__name__)


def ga_crossover(parent1: np.ndarray, parent2: np.ndarray, lam: np.ndarray) -> np.ndarray:
    return lam * parent1 + (1.0 - lam) * parent2


def ga_mutate(parent: np.ndarray, lam: np.ndarray, sample: np.ndarray) -> np.ndarray:
    return lam * parent + (1.0 - lam) * sample


def selection_weights(size: int) -> np.ndarray:
    """Вероятности выбора по рангу (0 — лучший)."""
    w = 1.0 / np.sqrt(np.arange(1, size + 1, dtype=float))
    return w / w.sum()


def ga_next_generation(population: np.ndarray, fitness: np.ndarray, config: GAConfig,
                       box: FeasibleBox, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Следующее поколение того же размера.

    Returns:
        (новая популяция, значения J элиты): первые r_e строк — элита в порядке
        возрастания J.
    """
    order = np.argsort(fitness, kind='stable')
    ranked = population[order]
    weights = selection_weights(len(ranked))
    elites = ranked[:config.elite_count].copy()
    children = [elites]

    for _ in range(config.crossover_count):
        j1, j2 = rng.choice(len(ranked), size=2, replace=False, p=weights)
        lam = rng.uniform(size=3)
        children.append(ga_crossover(ranked[j1], ranked[j2], lam)[None, :])

    for _ in range(config.mutation_count):
        j = rng.choice(len(ranked), p=weights)
        lam = rng.uniform(size=3)
        children.append(ga_mutate(ranked[j], lam, box.sample(rng))[None, :])

    return np.vstack(children), fitness[order][:config.elite_count].copy()


def ga_run(objective: ObjectiveInterface, config: GAConfig, stopping: StoppingCriteria,
           rng: np.random.Generator) -> OptResult:
    """Генетический алгоритм; элита не перевычисляется (P − r_e вычислений на поколение)."""
    box = objective.box
    monitor = StopMonitor(stopping, objective, 'ga')
    logger.info(f"[ga] Старт: P={config.population}, r_e={config.elite_count}, "
                f"r_c={config.crossover_count}, r_m={config.mutation_count}")

    pop = box.sample(rng, config.population)
    values = objective.evaluate_many(pop)
    best_idx = int(np.argmin(values))
    best_vec, best = pop[best_idx].copy(), float(values[best_idx])
    trace: List[TraceRecord] = [population_record(0, monitor.used, best, values, pop, objective)]
    generation = 0

    while monitor.check(best, generation) is None:
        generation += 1
        pop, elite_values = ga_next_generation(pop, values, config, box, rng)
        r_e = config.elite_count
        fresh = objective.evaluate_many(pop[r_e:]) if len(pop) > r_e else np.zeros(0)
        values = np.concatenate([elite_values, fresh])

        idx = int(np.argmin(values))
        if values[idx] < best:
            best, best_vec = float(values[idx]), pop[idx].copy()
        trace.append(population_record(generation, monitor.used, best, values, pop, objective))
        logger.debug(f"[ga] Поколение {generation}: J={best:.6g}")

    logger.info(f"[ga] Останов ({monitor.reason}): J={best:.6g}, вычислений {monitor.used}, поколений {generation}")
    return build_result('ga', objective, best_vec, best, monitor, trace, iterations=generation)


class GeneticAlgorithm(OptimizerInterface):
    name = 'ga'

    def __init__(self, config: Optional[GAConfig] = None):
        self.config = config or GAConfig(population=16)

    def run(self, objective: ObjectiveInterface, stopping: StoppingCriteria,
            rng: np.random.Generator) -> OptResult:
        return ga_run(objective, self.config, stopping, rng)
