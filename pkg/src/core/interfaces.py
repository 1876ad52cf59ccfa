# src/core/interfaces.py

"""
interfaces.py

Интерфейсы (абстрактные базовые классы) для целевых функций, оптимизаторов и семплеров.
Каждый подкласс должен реализовать указанные методы.
"""

from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from src.core.configs import StoppingCriteria
from src.core.models import ChainSet, FeasibleBox, OptResult, SourceParams


class ObjectiveInterface(ABC):
    """
    Целевая функция в масштабированных координатах (x, y, S0/scale).
    Каждый вызов увеличивает счётчик вычислений ровно на 1.
    """

    @property
    @abstractmethod
    def box(self) -> FeasibleBox:
        """Допустимая область в масштабированных координатах."""
        raise NotImplementedError

    @property
    @abstractmethod
    def n_evaluations(self) -> int:
        raise NotImplementedError

    @abstractmethod
    def __call__(self, vec: Sequence[float]) -> float:
        """
        Вычисляет J в точке vec.

        Returns:
            float: значение J; +inf для вырожденных точек.
        """
        raise NotImplementedError

    @abstractmethod
    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Вычисляет J для каждой строки points, с сохранением порядка."""
        raise NotImplementedError

    @abstractmethod
    def to_source(self, vec: Sequence[float]) -> SourceParams:
        """Переводит масштабированный вектор в физические параметры источника."""
        raise NotImplementedError

    def unscale(self, vec: Sequence[float]) -> np.ndarray:
        return self.to_source(vec).as_array()


class OptimizerInterface(ABC):
    """
    Интерфейс для оптимизатора (SA, PS, GA и т.д.).
    """
    name: str = ''

    @abstractmethod
    def run(self, objective: ObjectiveInterface, stopping: StoppingCriteria,
            rng: np.random.Generator) -> OptResult:
        """
        Минимизирует objective в её допустимой области.

        Args:
            objective: целевая функция со счётчиком вычислений.
            stopping: критерии останова.
            rng: генератор случайных чисел (используется только в вызывающем потоке).

        Returns:
            OptResult: лучшая точка, значение, число вычислений и история.
        """
        raise NotImplementedError


class SamplerInterface(ABC):
    """
    Интерфейс для MCMC-семплера (DRAM, DREAM).
    """
    name: str = ''

    @abstractmethod
    def run(self, target, rng: np.random.Generator,
            start: Optional[SourceParams] = None) -> ChainSet:
        """
        Строит цепочки по апостериорному распределению.

        Args:
            target: объект с методом log_posterior(vec) и свойством box.
            rng: генератор случайных чисел.
            start: начальная точка (для одноцепочечных методов).

        Returns:
            ChainSet: цепочки в физических единицах.
        """
        raise NotImplementedError
