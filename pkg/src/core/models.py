# src/core/models.py

"""
models.py

Определения Pydantic-моделей данных проекта:
  - геометрия домена: Point2, Building, DomainGeometry, PathSegments;
  - физика и данные: Detector, SourceParams, FeasibleBox, Scenario, ObservationSet;
  - результаты: TraceRecord, OptResult, HybridReport, ChainSet, DiagnosticsReport.

Модели данных геометрии и сценария неизменяемы (frozen): их безопасно читать из
многих потоков одновременно.
"""

import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from shapely.geometry import LinearRing, Polygon

Vector3 = Tuple[float, float, float]

# Круглая грань NaI-детектора 3" (диаметр 0.0762 м)
DEFAULT_FACE_AREA = math.pi * 0.0381 ** 2
DEFAULT_INTENSITY_SCALE = 5e8


class Point2(BaseModel):
    """Точка на плоскости, метры."""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float

    @model_validator(mode='before')
    @classmethod
    def _from_pair(cls, data: Any) -> Any:
        # Разрешаем задавать точку парой [x, y]
        if isinstance(data, (list, tuple)) and len(data) == 2:
            return {'x': data[0], 'y': data[1]}
        return data

    @field_validator('x', 'y')
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("координаты точки должны быть конечными")
        return v

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


class Building(BaseModel):
    """
    Здание: простой полигон с макроскопическим полным сечением sigma_t (1/м).
    Вершины задаются по порядку обхода, без повторения первой вершины в конце.
    """
    model_config = ConfigDict(frozen=True)

    vertices: Tuple[Point2, ...]
    sigma_t: float = Field(0.0, ge=0.0)

    @field_validator('vertices')
    @classmethod
    def _valid_polygon(cls, v: Tuple[Point2, ...]) -> Tuple[Point2, ...]:
        if len(v) >= 2 and v[0] == v[-1]:
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("у здания должно быть не меньше 3 вершин")
        coords = [(p.x, p.y) for p in v]
        if Polygon(coords).area <= 1e-12:
            raise ValueError("полигон здания имеет нулевую площадь")
        if not LinearRing(coords).is_simple:
            raise ValueError("полигон здания самопересекается")
        return v

    @property
    def coords(self) -> np.ndarray:
        return np.array([(p.x, p.y) for p in self.vertices], dtype=float)

    @property
    def area(self) -> float:
        return self.to_shapely().area

    def to_shapely(self) -> Polygon:
        return Polygon([(p.x, p.y) for p in self.vertices])


class DomainGeometry(BaseModel):
    """
    Двумерный домен [0, X] × [0, Y] с набором непересекающихся зданий.
    Промежутки между зданиями — воздух с сечением air_sigma_t.
    """
    model_config = ConfigDict(frozen=True)

    bounds: Tuple[float, float]
    buildings: Tuple[Building, ...] = ()
    air_sigma_t: float = Field(0.0, ge=0.0)

    @field_validator('bounds')
    @classmethod
    def _positive_bounds(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] <= 0 or v[1] <= 0:
            raise ValueError("размеры домена должны быть положительными")
        return v

    @model_validator(mode='after')
    def _check_layout(self) -> 'DomainGeometry':
        # geometry импортирует models, поэтому импорт отложенный
        from src.geometry.polygons import find_layout_problems

        problems = find_layout_problems(self.bounds, self.buildings)
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def contains(self, p: Point2) -> bool:
        return 0.0 <= p.x <= self.bounds[0] and 0.0 <= p.y <= self.bounds[1]


class PathSegments(BaseModel):
    """Путь луча: список (длина, сечение) и полная длина."""
    model_config = ConfigDict(frozen=True)

    segments: Tuple[Tuple[float, float], ...] = ()
    total_length: float = Field(0.0, ge=0.0)

    @model_validator(mode='after')
    def _consistent(self) -> 'PathSegments':
        if any(length < 0 for length, _ in self.segments):
            raise ValueError("длины сегментов не могут быть отрицательными")
        total = sum(length for length, _ in self.segments)
        if self.segments and abs(total - self.total_length) > 1e-9 * max(1.0, self.total_length):
            raise ValueError("сумма длин сегментов не совпадает с total_length")
        return self


class Detector(BaseModel):
    """Точечный детектор: площадь грани, эффективность и время экспозиции."""
    model_config = ConfigDict(frozen=True)

    position: Point2
    face_area: float = Field(DEFAULT_FACE_AREA, gt=0.0)
    efficiency: float = Field(0.62, ge=0.0, le=1.0)
    dwell_time: float = Field(1.0, gt=0.0)


class SourceParams(BaseModel):
    """Параметры источника θ = (x, y, S0): положение (м) и активность (Бк)."""
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    s0: float = Field(..., ge=0.0)

    @property
    def position(self) -> Point2:
        return Point2(x=self.x, y=self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.s0], dtype=float)


class FeasibleBox(BaseModel):
    """
    Допустимая область Ω = [l1,u1] × [l2,u2] × [l3,u3].
    В сценарии хранится в физических единицах (м, м, Бк); оптимизаторы получают
    её в масштабированном виде (третья координата делится на intensity_scale).
    """
    model_config = ConfigDict(frozen=True)

    lower: Vector3
    upper: Vector3

    @model_validator(mode='after')
    def _ordered(self) -> 'FeasibleBox':
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("нижняя граница должна быть строго меньше верхней по каждой координате")
        return self

    @property
    def lower_array(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=float)

    @property
    def upper_array(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return self.upper_array - self.lower_array

    def contains(self, vec, tol: float = 0.0) -> bool:
        v = np.asarray(vec, dtype=float)
        return bool(np.all(v >= self.lower_array - tol) and np.all(v <= self.upper_array + tol))

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        shape = (3,) if size is None else (size, 3)
        return rng.uniform(self.lower_array, self.upper_array, size=shape)


class Scenario(BaseModel):
    """
    Полное описание задачи: геометрия, детекторы, фон (отсчёты/с),
    допустимая область в физических единицах и масштаб интенсивности.
    """
    model_config = ConfigDict(frozen=True)

    name: str = 'scenario'
    geometry: DomainGeometry
    detectors: Tuple[Detector, ...]
    background: float = Field(300.0, ge=0.0)
    feasible_box: FeasibleBox
    intensity_scale: float = Field(DEFAULT_INTENSITY_SCALE, gt=0.0)
    true_source: Optional[SourceParams] = None
    seed: Optional[int] = None

    @model_validator(mode='after')
    def _check(self) -> 'Scenario':
        if not self.detectors:
            raise ValueError("в сценарии должен быть хотя бы один детектор")
        for idx, d in enumerate(self.detectors):
            if not self.geometry.contains(d.position):
                raise ValueError(f"детектор #{idx} находится вне домена")
        return self

    def scaled_box(self) -> FeasibleBox:
        """Допустимая область в масштабированных координатах (x, y, S0/scale)."""
        lo, hi = self.feasible_box.lower, self.feasible_box.upper
        s = self.intensity_scale
        return FeasibleBox(lower=(lo[0], lo[1], lo[2] / s), upper=(hi[0], hi[1], hi[2] / s))


class ObservationSet(BaseModel):
    """Матрица отсчётов n_det × n_rep (неотрицательные целые)."""
    model_config = ConfigDict(frozen=True)

    counts: Tuple[Tuple[int, ...], ...]

    @field_validator('counts')
    @classmethod
    def _rectangular(cls, v: Tuple[Tuple[int, ...], ...]) -> Tuple[Tuple[int, ...], ...]:
        if not v or not v[0]:
            raise ValueError("матрица наблюдений пуста")
        width = len(v[0])
        for row in v:
            if len(row) != width:
                raise ValueError("строки матрицы наблюдений разной длины")
            if any(c < 0 for c in row):
                raise ValueError("отсчёты не могут быть отрицательными")
        return v

    @classmethod
    def from_array(cls, matrix) -> 'ObservationSet':
        arr = np.asarray(matrix)
        return cls(counts=tuple(tuple(int(c) for c in row) for row in arr))

    @property
    def n_det(self) -> int:
        return len(self.counts)

    @property
    def n_rep(self) -> int:
        return len(self.counts[0])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


class TraceRecord(BaseModel):
    """
    Одна запись истории оптимизации.
    Для популяционных методов заполняются mean и spread (размах по координатам,
    в физических единицах); для неявной фильтрации — scale, gradient_norm и
    line_search_reductions (-1: отказ шаблона, maxitarm: неудача линейного поиска).
    """
    iteration: int
    n_evaluations: int
    best: float
    mean: Optional[float] = None
    spread: Optional[Vector3] = None
    scale: Optional[float] = None
    gradient_norm: Optional[float] = None
    line_search_reductions: Optional[int] = None


class OptResult(BaseModel):
    """Результат оптимизации. best_theta — в физических единицах."""
    method: str
    best_theta: SourceParams
    best_vector: Vector3
    best_objective: float
    n_evaluations: int
    trace: List[TraceRecord] = Field(default_factory=list)
    termination_reason: str = ''
    budget_exhausted: bool = False
    extra: Dict[str, Any] = Field(default_factory=dict)


class HybridReport(BaseModel):
    """Отчёт двухэтапного гибридного метода (глобальный поиск + неявная фильтрация)."""
    global_result: OptResult
    subdomain: FeasibleBox
    local_result: OptResult
    n_evaluations: int
    contains_truth: Optional[bool] = None
    wide_subdomain: bool = False
    budget_exhausted: bool = False

    @model_validator(mode='after')
    def _counts(self) -> 'HybridReport':
        if self.n_evaluations != self.global_result.n_evaluations + self.local_result.n_evaluations:
            raise ValueError("n_evaluations должно быть суммой этапов")
        return self

    @property
    def best_theta(self) -> SourceParams:
        return self.local_result.best_theta

    @property
    def best_objective(self) -> float:
        return self.local_result.best_objective


class ChainSet(BaseModel):
    """
    Набор цепочек MCMC.
      - samples: массив (цепочки × итерации × 3) в физических единицах;
      - log_posteriors: (цепочки × итерации);
      - burn_in: число первых итераций, отбрасываемых при анализе;
      - acceptance: счётчики 'stage1', 'stage2', 'rejected';
      - outliers: (итерация, цепочка) замен выбросов;
      - gelman_rubin_trace: (итерации × 3), для DREAM.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    method: str
    samples: np.ndarray
    log_posteriors: np.ndarray
    burn_in: int = 0
    acceptance: Dict[str, int] = Field(default_factory=dict)
    outliers: List[Tuple[int, int]] = Field(default_factory=list)
    gelman_rubin_trace: Optional[np.ndarray] = None
    crossover_probabilities: Optional[List[float]] = None
    n_evaluations: int = 0

    @property
    def n_chains(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n_iterations(self) -> int:
        return int(self.samples.shape[1])

    def retained(self) -> np.ndarray:
        """Выборки после отбрасывания burn-in: (цепочки × итерации × 3)."""
        return self.samples[:, self.burn_in:, :]

    def acceptance_rate(self) -> float:
        total = sum(self.acceptance.get(k, 0) for k in ('stage1', 'stage2', 'rejected'))
        if total == 0:
            return 0.0
        return (self.acceptance.get('stage1', 0) + self.acceptance.get('stage2', 0)) / total


class DiagnosticsReport(BaseModel):
    """Диагностики сходимости по каждому параметру."""
    model_config = ConfigDict(ser_json_inf_nan='null')

    geweke_z: List[float]
    geweke_score: List[float]
    gelman_rubin: Optional[List[float]] = None
    effective_sample_size: List[float] = Field(default_factory=list)
    stationarity_index: int = 0
    degenerate: List[str] = Field(default_factory=list)
