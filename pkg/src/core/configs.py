# src/core/configs.py

"""
configs.py

Pydantic-модели параметров методов:
  - StoppingCriteria — критерии останова глобальных оптимизаторов;
  - SAConfig, PSConfig, GAConfig — имитация отжига, рой частиц, генетический алгоритм;
  - IFConfig — неявная фильтрация;
  - SubdomainSpec — полуширины подобласти Ω₀ для гибридного метода;
  - DRAMConfig, DREAMConfig — MCMC-семплеры.

Значения по умолчанию — рабочие настройки для эталонного сценария.
"""

import math
from typing import Any, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

Vector3 = Tuple[float, float, float]


class StoppingCriteria(BaseModel):
    """
    Критерии останова. Срабатывает ПЕРВЫЙ выполненный критерий.
      - max_evaluations: бюджет вызовов целевой функции;
      - max_iterations: число итераций (поколений);
      - target_objective: остановка при J ≤ target;
      - stall_window / stall_tolerance: застой (относительное изменение меньше
        stall_tolerance на протяжении stall_window окон; для SA окно считается
        в интервалах повторного отжига, для PS — в итерациях). Если окно не задано,
        берётся значение метода (SA — 3, PS — 20); 0 отключает проверку застоя.
    """
    max_evaluations: Optional[int] = Field(None, ge=1)
    max_iterations: Optional[int] = Field(None, ge=1)
    target_objective: Optional[float] = None
    stall_window: Optional[int] = Field(None, ge=0)
    stall_tolerance: float = Field(1e-6, gt=0.0)

    @model_validator(mode='after')
    def _any_enabled(self) -> 'StoppingCriteria':
        if (self.max_evaluations is None and self.max_iterations is None
                and self.target_objective is None and not self.stall_window):
            raise ValueError("должен быть задан хотя бы один критерий останова")
        return self

    @property
    def has_budget(self) -> bool:
        return self.max_evaluations is not None or self.max_iterations is not None

    def resolve_stall_window(self, method_default: int) -> Optional[int]:
        """Окно застоя для метода: None, если проверка отключена."""
        if self.stall_window is None:
            return method_default
        return self.stall_window or None


class SAConfig(BaseModel):
    """Имитация отжига с несколькими параллельными траекториями."""
    initial_temperatures: Vector3 = (240.0, 180.0, 99.0)
    reanneal_interval: int = Field(50, ge=1)
    cooling_base: float = Field(0.95, gt=0.0, lt=1.0)
    n_starts: int = Field(16, ge=1)
    fd_delta: float = Field(1e-3, gt=0.0)

    @field_validator('initial_temperatures')
    @classmethod
    def _positive(cls, v: Vector3) -> Vector3:
        if any(t <= 0 for t in v):
            raise ValueError("начальные температуры должны быть положительными")
        return v


class PSConfig(BaseModel):
    """Рой частиц с адаптивной окрестностью и инерцией."""
    swarm_size: int = Field(16, ge=2)
    min_neighborhood: int = Field(4, ge=1)
    inertia: float = 1.1
    inertia_range: Tuple[float, float] = (0.1, 1.1)
    self_weight: float = Field(1.49, ge=0.0)
    social_weight: float = Field(1.49, ge=0.0)

    @model_validator(mode='after')
    def _check(self) -> 'PSConfig':
        lo, hi = self.inertia_range
        if not 0 < lo <= hi:
            raise ValueError("inertia_range должен быть интервалом положительных чисел")
        if not lo <= self.inertia <= hi:
            raise ValueError(f"inertia должна лежать в [{lo}, {hi}]")
        if self.min_neighborhood >= self.swarm_size:
            raise ValueError("min_neighborhood должен быть меньше swarm_size")
        return self


class GAConfig(BaseModel):
    """
    Генетический алгоритм с прямым кодированием.
    Если размеры групп не заданы, они вычисляются по размеру популяции:
    r_e = floor(0.05·P) + 1, r_c = floor(0.2·(P − r_e)), r_m = P − r_e − r_c.
    """
    population: int = Field(16, ge=2)
    elite_count: int = Field(..., ge=1)
    crossover_count: int = Field(..., ge=0)
    mutation_count: int = Field(..., ge=0)

    @model_validator(mode='before')
    @classmethod
    def _fill_counts(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        p = int(data.get('population', 16))
        elite = data.get('elite_count')
        if elite is None:
            elite = int(math.floor(0.05 * p)) + 1
            data['elite_count'] = elite
        if data.get('crossover_count') is None:
            data['crossover_count'] = int(0.2 * (p - int(elite)))
        if data.get('mutation_count') is None:
            data['mutation_count'] = p - int(elite) - int(data['crossover_count'])
        return data

    @model_validator(mode='after')
    def _sum(self) -> 'GAConfig':
        if self.elite_count + self.crossover_count + self.mutation_count != self.population:
            raise ValueError("elite_count + crossover_count + mutation_count должно равняться population")
        return self

    @classmethod
    def from_population(cls, population: int) -> 'GAConfig':
        return cls(population=population)


class IFConfig(BaseModel):
    """Неявная фильтрация: бюджет, итерации, линейный поиск и шкалы шаблона."""
    budget: int = Field(300, ge=1)
    maxit: int = Field(50, ge=1)
    maxitarm: int = Field(3, ge=0)
    tau_factor: float = Field(1.2e-20, ge=0.0)
    beta: float = Field(1.0, gt=0.0)
    h0: float = Field(0.5, gt=0.0, le=1.0)
    h_min: float = Field(2.0 ** -15, gt=0.0)
    active_epsilon: float = Field(1e-6, ge=0.0)

    @model_validator(mode='after')
    def _scales(self) -> 'IFConfig':
        if self.h_min >= self.h0:
            raise ValueError("h_min должен быть меньше h0")
        return self

    def scales(self) -> List[float]:
        """Последовательность шкал h0, h0/2, … не меньше h_min."""
        out = []
        h = self.h0
        while h >= self.h_min:
            out.append(h)
            h /= 2.0
        return out


class SubdomainSpec(BaseModel):
    """Полуширины Ω₀ в физических единицах (м, м, Бк)."""
    half_widths: Vector3 = (10.0, 10.0, 1e10)

    @field_validator('half_widths')
    @classmethod
    def _positive(cls, v: Vector3) -> Vector3:
        if any(a <= 0 for a in v):
            raise ValueError("полуширины подобласти должны быть положительными")
        return v


class DRAMConfig(BaseModel):
    """
    Адаптивный Метрополис с отложенным отклонением.
    initial_covariance задаётся в масштабированных координатах; если не задана,
    используется diag(|θ⁰·cov_fraction|²).
    """
    n_iterations: int = Field(10_000, ge=1)
    burn_in: int = Field(3000, ge=0)
    adapt_interval: int = Field(100, ge=2)
    scale: float = Field(2.38 ** 2 / 3, gt=0.0)
    dr_scale: float = Field(0.2, gt=0.0, lt=1.0)
    initial_covariance: Optional[List[List[float]]] = None
    cov_fraction: float = Field(0.05, gt=0.0)
    regularization: float = Field(1e-10, ge=0.0)
    delayed_rejection: bool = True

    @field_validator('initial_covariance')
    @classmethod
    def _spd(cls, v: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
        if v is None:
            return v
        m = np.asarray(v, dtype=float)
        if m.shape != (3, 3) or not np.allclose(m, m.T):
            raise ValueError("initial_covariance должна быть симметричной матрицей 3×3")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValueError("initial_covariance должна быть положительно определённой")
        return v


class DREAMConfig(BaseModel):
    """
    DREAM: P параллельных цепочек с дифференциальной эволюцией предложений.
      - n_pairs δ — число пар доноров;
      - jump_rate γ — по умолчанию 2.38/√6; при standard_jump=True используется
        2.38/√(2·δ·d'), где d' — число обновляемых координат;
      - perturbation b — E ∼ U(−b, b); noise b* — ε ∼ N(0, b*);
      - n_crossover — уровни CR = {1/n, 2/n, …, 1}, адаптируемые на burn-in.
    """
    n_chains: int = Field(10, ge=2)
    n_iterations: int = Field(10_000, ge=1)
    n_pairs: int = Field(3, ge=1)
    jump_rate: Optional[float] = Field(None, ge=0.0)
    standard_jump: bool = False
    perturbation: float = Field(0.05, ge=0.0)
    noise: float = Field(1e-6, ge=0.0)
    n_crossover: int = Field(3, ge=1)
    burn_in_fraction: float = Field(0.25, ge=0.0, lt=1.0)
    outlier_interval: int = Field(10, ge=1)
    iqr_multiplier: float = Field(2.0, gt=0.0)
    delayed_rejection: bool = True
    dr_scale: float = Field(0.2, gt=0.0, lt=1.0)
    gelman_rubin_fraction: float = Field(0.5, gt=0.0, le=1.0)

    @property
    def gamma(self) -> float:
        if self.jump_rate is not None:
            return self.jump_rate
        return 2.38 / math.sqrt(6.0)

    def crossover_levels(self) -> np.ndarray:
        return np.arange(1, self.n_crossover + 1, dtype=float) / self.n_crossover
