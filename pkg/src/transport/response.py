# src/transport/response.py

"""
response.py

Модель отклика детекторов и генерация синтетических наблюдений:
  - detector_response: f̂ = S0·Δt·ε·A / (4π r²) · exp(−τ), τ — оптическая толщина пути;
  - mean_count: f̂ + B·Δt;
  - ResponseModel: векторизованный расчёт по всем детекторам сценария с LRU-кешем
    оптических толщин по позиции источника;
  - simulate_observations: пуассоновские отсчёты n_det × n_rep;
  - assign_cross_sections: сечения зданий по случайной оптической толщине,
    смещённой в сторону больших зданий.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.cache.cache import LRUCache
from src.config.settings import settings
from src.core.exceptions import InvalidInputError, SingularConfigurationError
from src.core.models import (
    DEFAULT_FACE_AREA,
    Building,
    Detector,
    DomainGeometry,
    ObservationSet,
    Scenario,
    SourceParams,
)
from src.geometry.polygons import build_edge_index, optical_depths

logger = logging.getLogger(__name__)

MIN_DISTANCE = 1e-6


def default_detector_area() -> float:
    """Площадь круглой грани 3-дюймового детектора, м²."""
    return DEFAULT_FACE_AREA


def _check_distance(r: float) -> None:
    if r < MIN_DISTANCE:
        raise SingularConfigurationError(
            f"источник совпадает с детектором (расстояние {r:.3e} м < {MIN_DISTANCE} м)"
        )


def detector_response(d: Detector, theta: SourceParams, geom: DomainGeometry) -> float:
    """
    Ожидаемое число отсчётов от источника за время экспозиции детектора.

    Raises:
        SingularConfigurationError: источник ближе 1e-6 м к детектору.
    """
    dx, dy = d.position.x - theta.x, d.position.y - theta.y
    r = math.hypot(dx, dy)
    _check_distance(r)
    depth = float(optical_depths(build_edge_index(geom), (theta.x, theta.y),
                                 np.array([[d.position.x, d.position.y]]))[0])
    return theta.s0 * d.dwell_time * d.efficiency * d.face_area / (4.0 * math.pi * r * r) * math.exp(-depth)


def mean_count(d: Detector, theta: SourceParams, geom: DomainGeometry, background: float) -> float:
    """Среднее число отсчётов детектора: отклик источника плюс фон за время экспозиции."""
    return detector_response(d, theta, geom) + background * d.dwell_time


class ResponseModel:
    """
    Векторизованная модель отклика всех детекторов сценария.

    Оптические толщины зависят только от (x, y) источника и кешируются в LRUCache,
    поэтому изменение одной интенсивности не требует трассировки.
    """

    def __init__(self, scenario: Scenario, cache_size: Optional[int] = None):
        self.scenario = scenario
        self.index = build_edge_index(scenario.geometry)
        self.positions = np.array([[d.position.x, d.position.y] for d in scenario.detectors], dtype=float)
        self.gain = np.array(
            [d.dwell_time * d.efficiency * d.face_area / (4.0 * math.pi) for d in scenario.detectors],
            dtype=float,
        )
        self.background = np.array([scenario.background * d.dwell_time for d in scenario.detectors], dtype=float)
        size = settings.PATH_CACHE_MAXSIZE if cache_size is None else cache_size
        self.cache = LRUCache(maxsize=size)

    @property
    def n_det(self) -> int:
        return int(self.positions.shape[0])

    def depths(self, x: float, y: float) -> Tuple[np.ndarray, np.ndarray]:
        """(оптические толщины, квадраты расстояний) до всех детекторов."""
        key = (float(x), float(y))
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        r2 = (self.positions[:, 0] - x) ** 2 + (self.positions[:, 1] - y) ** 2
        _check_distance(math.sqrt(float(r2.min())))
        tau = optical_depths(self.index, key, self.positions)
        value = (tau, r2)
        self.cache.set(key, value)
        return value

    def source_counts(self, x: float, y: float, s0: float) -> np.ndarray:
        """f̂ для всех детекторов."""
        tau, r2 = self.depths(x, y)
        return s0 * self.gain / r2 * np.exp(-tau)

    def means(self, x: float, y: float, s0: float) -> np.ndarray:
        """f̂ + B·Δt для всех детекторов."""
        return self.source_counts(x, y, s0) + self.background


def expected_counts(scenario: Scenario, theta: SourceParams) -> np.ndarray:
    """Средние отсчёты по всем детекторам сценария (без кеша)."""
    return ResponseModel(scenario, cache_size=0).means(theta.x, theta.y, theta.s0)


def simulate_observations(scn: Scenario, theta_true: SourceParams, n_rep: int,
                          rng: np.random.Generator) -> ObservationSet:
    """
    Пуассоновские наблюдения: каждый элемент — независимая выборка со средним
    соответствующего детектора.

    Raises:
        InvalidInputError: n_rep < 1.
        SingularConfigurationError: источник совпадает с детектором.
    """
    if n_rep < 1:
        raise InvalidInputError("n_rep должно быть не меньше 1")
    means = expected_counts(scn, theta_true)
    counts = rng.poisson(lam=np.repeat(means[:, None], n_rep, axis=1))
    logger.info(f"[scenario] Сгенерированы наблюдения {counts.shape[0]}×{counts.shape[1]}, "
                f"средние отсчёты {means.min():.1f}…{means.max():.1f}")
    return ObservationSet.from_array(counts)


def assign_cross_sections(buildings: Sequence[Building], target_mfp_range: Tuple[float, float] = (1.0, 5.0),
                          rng: Optional[np.random.Generator] = None) -> List[Building]:
    """
    Задаёт сечения зданий: sigma_t = τ / √площади, где τ = lo + (hi − lo)·u^(1/w),
    u ∼ U(0, 1), а вес w = 2·(ранг + 1)/(n + 1) растёт с рангом площади здания.

    Raises:
        InvalidInputError: пустой список или здание нулевой площади.
    """
    if not buildings:
        raise InvalidInputError("список зданий пуст")
    lo, hi = target_mfp_range
    if lo < 0 or hi < lo:
        raise InvalidInputError(f"некорректный диапазон оптической толщины: {target_mfp_range}")
    rng = rng if rng is not None else np.random.default_rng()

    areas = np.array([b.area for b in buildings], dtype=float)
    if np.any(areas <= 0):
        raise InvalidInputError("здание нулевой площади")
    ranks = np.empty(len(areas), dtype=int)
    ranks[np.argsort(areas, kind='stable')] = np.arange(len(areas))
    weights = 2.0 * (ranks + 1) / (len(areas) + 1)

    u = rng.uniform(size=len(areas))
    tau = lo + (hi - lo) * u ** (1.0 / weights)
    return [
        b.model_copy(update={'sigma_t': float(t / math.sqrt(a))})
        for b, t, a in zip(buildings, tau, areas)
    ]
