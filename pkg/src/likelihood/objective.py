# src/likelihood/objective.py

"""
objective.py

Правдоподобие и целевые функции:
  - log_likelihood: логарифм пуассоновского правдоподобия (с константой −Σ log v!);
  - neg_log_objective: J = ½ Σ_i Σ_j [−v_ij·log f_i + f_i];
  - ols_objective: Σ_ij (v_ij − f_i)²;
  - ObjectiveContext: адаптер для оптимизаторов и семплеров (масштабированные
    координаты, счётчик вычислений, параллельная оценка популяций, лог-апостериорная
    плотность с равномерным априорным распределением на Ω);
  - FunctionObjective: тот же интерфейс для произвольной функции (тестовые задачи).

Масштабированные координаты: (x, y, S0 / intensity_scale).
"""

import logging
import threading
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln

from src.core.exceptions import ConfigurationError, SingularConfigurationError
from src.core.interfaces import ObjectiveInterface
from src.core.models import FeasibleBox, ObservationSet, Scenario, SourceParams
from src.core.parallel import evaluate_many
from src.transport.response import ResponseModel

logger = logging.getLogger(__name__)

ThetaLike = Union[SourceParams, Sequence[float], np.ndarray]


class EvaluationCounter:
    """Потокобезопасный монотонный счётчик."""

    def __init__(self):
        self._value = 0
        self._lock = threading.Lock()

    def increment(self) -> None:
        with self._lock:
            self._value += 1

    def reset(self) -> None:
        with self._lock:
            self._value = 0

    @property
    def value(self) -> int:
        return self._value


class ObjectiveContext(ObjectiveInterface):
    """
    Сценарий + наблюдения + счётчик вычислений прямой модели.

    Вызов ctx(vec) возвращает J в масштабированной точке vec; для вырожденных точек
    (нулевые средние, совпадение источника с детектором) — +inf.
    """

    def __init__(self, scenario: Scenario, observations: ObservationSet,
                 workers: Optional[int] = None, cache_size: Optional[int] = None):
        if observations.n_det != len(scenario.detectors):
            raise ConfigurationError(
                f"число строк наблюдений ({observations.n_det}) не совпадает с числом "
                f"детекторов ({len(scenario.detectors)})"
            )
        self.scenario = scenario
        self.observations = observations
        self.workers = workers
        self.model = ResponseModel(scenario, cache_size=cache_size)
        self.counts = observations.as_array()
        self.sums = self.counts.sum(axis=1).astype(float)
        self.n_rep = observations.n_rep
        self.log_factorial = float(gammaln(self.counts + 1.0).sum())
        self.scale = scenario.intensity_scale
        self.degenerate = False
        self._counter = EvaluationCounter()
        self._box = scenario.scaled_box()

    # --- координаты -------------------------------------------------------

    @property
    def box(self) -> FeasibleBox:
        return self._box

    @property
    def n_evaluations(self) -> int:
        return self._counter.value

    def reset_counter(self) -> None:
        self._counter.reset()

    def to_source(self, vec: Sequence[float]) -> SourceParams:
        v = np.asarray(vec, dtype=float)
        return SourceParams(x=float(v[0]), y=float(v[1]), s0=float(v[2] * self.scale))

    def to_vector(self, theta: SourceParams) -> np.ndarray:
        return np.array([theta.x, theta.y, theta.s0 / self.scale], dtype=float)

    def _physical(self, theta: ThetaLike) -> np.ndarray:
        if isinstance(theta, SourceParams):
            return theta.as_array()
        v = np.asarray(theta, dtype=float)
        return np.array([v[0], v[1], v[2] * self.scale])

    # --- прямая модель ----------------------------------------------------

    def means(self, theta: ThetaLike) -> np.ndarray:
        """Средние отсчёты f_i. Каждый вызов — одно вычисление прямой модели."""
        x, y, s0 = self._physical(theta)
        self._counter.increment()
        return self.model.means(x, y, s0)

    def _degenerate(self, f: np.ndarray) -> bool:
        if np.any(f <= 0):
            if not self.degenerate:
                logger.warning("[likelihood] Неположительное среднее отсчётов: правдоподобие вырождено")
            self.degenerate = True
            return True
        return False

    def log_likelihood(self, theta: ThetaLike) -> float:
        f = self.means(theta)
        if self._degenerate(f):
            return -np.inf
        return float(np.sum(self.sums * np.log(f)) - self.n_rep * np.sum(f) - self.log_factorial)

    def neg_log_objective(self, theta: ThetaLike) -> float:
        f = self.means(theta)
        if self._degenerate(f):
            return np.inf
        return float(0.5 * np.sum(-self.sums * np.log(f) + self.n_rep * f))

    def ols_objective(self, theta: ThetaLike) -> float:
        f = self.means(theta)
        return float(np.sum((self.counts - f[:, None]) ** 2))

    # --- адаптеры для поиска ---------------------------------------------

    def __call__(self, vec: Sequence[float]) -> float:
        try:
            return self.neg_log_objective(np.asarray(vec, dtype=float))
        except SingularConfigurationError as e:
            logger.warning(f"[likelihood] {e}; J = +inf")
            return np.inf

    def ols(self, vec: Sequence[float]) -> float:
        try:
            return self.ols_objective(np.asarray(vec, dtype=float))
        except SingularConfigurationError as e:
            logger.warning(f"[likelihood] {e}; OLS = +inf")
            return np.inf

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return evaluate_many(self, points, self.workers)

    def log_posterior(self, vec: Sequence[float]) -> float:
        """
        Логарифм апостериорной плотности с равномерным априорным на Ω
        (с точностью до константы). Вне Ω возвращает -inf без вычисления модели.
        """
        v = np.asarray(vec, dtype=float)
        if not self._box.contains(v):
            return -np.inf
        try:
            return self.log_likelihood(v)
        except SingularConfigurationError as e:
            logger.warning(f"[likelihood] {e}; log π = -inf")
            return -np.inf

    def log_posterior_many(self, points: np.ndarray) -> np.ndarray:
        return evaluate_many(self.log_posterior, points, self.workers)


class FunctionObjective(ObjectiveInterface):
    """
    Обёртка произвольной функции fn(vec) с тем же интерфейсом, что и ObjectiveContext.
    Для семплеров fn трактуется как отрицательный логарифм плотности:
    log_posterior(vec) = −fn(vec) внутри box.
    """

    def __init__(self, fn: Callable[[np.ndarray], float], box: FeasibleBox,
                 scale: float = 1.0, workers: Optional[int] = None):
        self.fn = fn
        self._box = box
        self.scale = scale
        self.workers = workers
        self._counter = EvaluationCounter()

    @property
    def box(self) -> FeasibleBox:
        return self._box

    @property
    def n_evaluations(self) -> int:
        return self._counter.value

    def reset_counter(self) -> None:
        self._counter.reset()

    def __call__(self, vec: Sequence[float]) -> float:
        self._counter.increment()
        return float(self.fn(np.asarray(vec, dtype=float)))

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return evaluate_many(self, points, self.workers)

    def to_source(self, vec: Sequence[float]) -> SourceParams:
        v = np.asarray(vec, dtype=float)
        return SourceParams(x=float(v[0]), y=float(v[1]), s0=float(v[2] * self.scale))

    def to_vector(self, theta: SourceParams) -> np.ndarray:
        return np.array([theta.x, theta.y, theta.s0 / self.scale], dtype=float)

    def log_posterior(self, vec: Sequence[float]) -> float:
        v = np.asarray(vec, dtype=float)
        if not self._box.contains(v):
            return -np.inf
        return -self(v)

    def log_posterior_many(self, points: np.ndarray) -> np.ndarray:
        return evaluate_many(self.log_posterior, points, self.workers)


def log_likelihood(ctx: ObjectiveContext, theta: ThetaLike) -> float:
    """log π(V|θ). SourceParams — в физических единицах, вектор — в масштабированных."""
    return ctx.log_likelihood(theta)


def neg_log_objective(ctx: ObjectiveContext, theta: ThetaLike) -> float:
    """J(θ). SourceParams — в физических единицах, вектор — в масштабированных."""
    return ctx.neg_log_objective(theta)


def ols_objective(ctx: ObjectiveContext, theta: ThetaLike) -> float:
    """Сумма квадратов невязок отсчётов."""
    return ctx.ols_objective(theta)
