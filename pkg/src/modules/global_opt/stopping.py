# src/modules/global_opt/stopping.py

"""
stopping.py

Общие части глобальных оптимизаторов:
  - StopMonitor — проверка критериев останова (бюджет вычислений, итерации,
    целевое значение, застой) с учётом вычислений, сделанных только этим запуском;
  - population_record — запись истории (лучшее и среднее J, размах популяции);
  - build_result — сборка OptResult.
"""

import logging
from typing import List, Optional

import numpy as np

from src.config.settings import settings
from src.core.configs import StoppingCriteria
from src.core.interfaces import ObjectiveInterface
from src.core.models import OptResult, TraceRecord

logger = logging.getLogger(__name__)

BUDGET_REASONS = ('max_evaluations', 'max_iterations')


class StopMonitor:
    """
    Следит за критериями останова одного запуска оптимизатора.
    Если в StoppingCriteria нет бюджетного критерия, применяется
    settings.DEFAULT_MAX_EVALUATIONS.
    """

    def __init__(self, stopping: StoppingCriteria, objective: ObjectiveInterface, tag: str):
        self.stopping = stopping
        self.objective = objective
        self.tag = tag
        self.start = objective.n_evaluations
        self.max_evaluations = stopping.max_evaluations
        if not stopping.has_budget:
            self.max_evaluations = settings.DEFAULT_MAX_EVALUATIONS
            logger.warning(f"[{tag}] Бюджетный критерий не задан: ограничение "
                           f"{self.max_evaluations} вычислений")
        self.reason: Optional[str] = None

    @property
    def used(self) -> int:
        return self.objective.n_evaluations - self.start

    def check(self, best: float, iteration: int, stalled: bool = False) -> Optional[str]:
        """Возвращает причину останова или None. Порядок проверок фиксирован."""
        s = self.stopping
        if s.target_objective is not None and best <= s.target_objective:
            self.reason = 'target_objective'
        elif stalled:
            self.reason = 'stall'
        elif self.max_evaluations is not None and self.used >= self.max_evaluations:
            self.reason = 'max_evaluations'
        elif s.max_iterations is not None and iteration >= s.max_iterations:
            self.reason = 'max_iterations'
        return self.reason

    @property
    def budget_exhausted(self) -> bool:
        return self.reason in BUDGET_REASONS


def relative_change(old: float, new: float) -> float:
    return abs(old - new) / max(1.0, abs(new))


def population_record(iteration: int, n_evaluations: int, best: float, values: np.ndarray,
                      points: np.ndarray, objective: ObjectiveInterface) -> TraceRecord:
    """Запись истории для популяционного метода; размах — в физических единицах."""
    finite = values[np.isfinite(values)]
    physical = np.array([objective.unscale(p) for p in points])
    spread = physical.max(axis=0) - physical.min(axis=0)
    return TraceRecord(
        iteration=iteration,
        n_evaluations=n_evaluations,
        best=float(best),
        mean=float(finite.mean()) if finite.size else float('inf'),
        spread=tuple(float(s) for s in spread),
    )


def build_result(method: str, objective: ObjectiveInterface, best_vec: np.ndarray, best: float,
                 monitor: StopMonitor, trace: List[TraceRecord], **extra) -> OptResult:
    return OptResult(
        method=method,
        best_theta=objective.to_source(best_vec),
        best_vector=tuple(float(v) for v in best_vec),
        best_objective=float(best),
        n_evaluations=monitor.used,
        trace=trace,
        termination_reason=monitor.reason or '',
        budget_exhausted=monitor.budget_exhausted,
        extra=extra,
    )
