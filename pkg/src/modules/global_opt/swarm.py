# src/modules/global_opt/swarm.py

"""
swarm.py

Рой частиц с адаптивной окрестностью и инерцией.

На каждой итерации частица выбирает N случайных соседей и тянется к лучшему из их
личных рекордов. Если глобальный рекорд улучшился, счётчик неудач c уменьшается,
окрестность сбрасывается до Ns, а инерция W удваивается (c < 2) или делится
пополам (c > 5). Иначе c растёт, а окрестность увеличивается на Ns (не больше P − 1).
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from src.core.configs import PSConfig, StoppingCriteria
from src.core.interfaces import ObjectiveInterface, OptimizerInterface
from src.core.models import FeasibleBox, OptResult, TraceRecord
from src.modules.global_opt.stopping import (
    StopMonitor,
    build_result,
    population_record,
    relative_change,
)

logger = logging.getLogger(__name__)

# Застой: столько итераций подряд без заметного улучшения лучшего J
PS_STALL_WINDOW = 20


def ps_update(position: np.ndarray, velocity: np.ndarray, personal_best: np.ndarray,
              neighborhood_best: np.ndarray, inertia: float, config: PSConfig,
              box: FeasibleBox, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    v' = W·v + y1·u1·(p − θ) + y2·u2·(g − θ); θ' = clip(θ + v').
    По зажатым координатам скорость обнуляется.

    Returns:
        (новая скорость, новая позиция, позиция не изменилась)
    """
    position = np.asarray(position, dtype=float)
    u1 = np.asarray(rng.uniform(size=3), dtype=float)
    u2 = np.asarray(rng.uniform(size=3), dtype=float)
    v_new = (inertia * np.asarray(velocity, dtype=float)
             + config.self_weight * u1 * (personal_best - position)
             + config.social_weight * u2 * (neighborhood_best - position))
    raw = position + v_new
    pos_new = np.clip(raw, box.lower_array, box.upper_array)
    v_new = np.where(pos_new != raw, 0.0, v_new)
    return v_new, pos_new, bool(np.array_equal(pos_new, position))


def adapt_swarm(improved: bool, inertia: float, stall: int, neighborhood: int,
                config: PSConfig) -> Tuple[float, int, int]:
    """
    Обновление параметров роя после итерации.

    Returns:
        (W, c, N)
    """
    lo, hi = config.inertia_range
    if improved:
        stall = max(0, stall - 1)
        neighborhood = config.min_neighborhood
        if stall < 2:
            inertia *= 2.0
        elif stall > 5:
            inertia /= 2.0
        inertia = min(max(inertia, lo), hi)
    else:
        stall += 1
        neighborhood = min(neighborhood + config.min_neighborhood, config.swarm_size - 1)
    return inertia, stall, neighborhood


def _neighborhood_best(i: int, size: int, pbest: np.ndarray, pvalues: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    others = np.delete(np.arange(pbest.shape[0]), i)
    chosen = rng.choice(others, size=min(size, others.size), replace=False)
    # При равенстве побеждает меньший индекс
    chosen = np.sort(chosen)
    return pbest[chosen[int(np.argmin(pvalues[chosen]))]]


def ps_run(objective: ObjectiveInterface, config: PSConfig, stopping: StoppingCriteria,
           rng: np.random.Generator) -> OptResult:
    """Рой частиц: равномерная инициализация, P вычислений на итерацию."""
    box = objective.box
    P = config.swarm_size
    lo, hi = box.lower_array, box.upper_array
    monitor = StopMonitor(stopping, objective, 'ps')
    window = stopping.resolve_stall_window(PS_STALL_WINDOW)
    logger.info(f"[ps] Старт: рой {P}, Ns={config.min_neighborhood}, W={config.inertia}")

    pos = box.sample(rng, P)
    vel = rng.uniform(lo, hi, size=(P, 3)) - 0.5 * (lo + hi)
    values = objective.evaluate_many(pos)
    pbest, pvalues = pos.copy(), values.copy()
    best_idx = int(np.argmin(values))
    best_vec, best = pos[best_idx].copy(), float(values[best_idx])

    inertia, stall, neighborhood = config.inertia, 0, config.min_neighborhood
    history: List[float] = [best]
    trace: List[TraceRecord] = [population_record(0, monitor.used, best, values, pos, objective)]
    iteration = 0
    stalled = False

    while monitor.check(best, iteration, stalled) is None:
        iteration += 1
        for i in range(P):
            g = _neighborhood_best(i, neighborhood, pbest, pvalues, rng)
            vel[i], pos[i], _ = ps_update(pos[i], vel[i], pbest[i], g, inertia, config, box, rng)
        values = objective.evaluate_many(pos)

        better = values < pvalues
        pbest[better], pvalues[better] = pos[better], values[better]
        idx = int(np.argmin(pvalues))
        improved = pvalues[idx] < best
        if improved:
            best, best_vec = float(pvalues[idx]), pbest[idx].copy()
        inertia, stall, neighborhood = adapt_swarm(improved, inertia, stall, neighborhood, config)

        history.append(best)
        if window is not None and len(history) > window:
            stalled = relative_change(history[-window - 1], best) < stopping.stall_tolerance
        trace.append(population_record(iteration, monitor.used, best, values, pos, objective))
        logger.debug(f"[ps] Итерация {iteration}: J={best:.6g}, W={inertia:.3g}, c={stall}, N={neighborhood}")

    logger.info(f"[ps] Останов ({monitor.reason}): J={best:.6g}, вычислений {monitor.used}, итераций {iteration}")
    return build_result('ps', objective, best_vec, best, monitor, trace, iterations=iteration)


class ParticleSwarm(OptimizerInterface):
    name = 'ps'

    def __init__(self, config: Optional[PSConfig] = None):
        self.config = config or PSConfig()

    def run(self, objective: ObjectiveInterface, stopping: StoppingCriteria,
            rng: np.random.Generator) -> OptResult:
        return ps_run(objective, self.config, stopping, rng)
