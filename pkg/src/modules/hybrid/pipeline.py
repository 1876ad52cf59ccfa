# src/modules/hybrid/pipeline.py

"""
pipeline.py

Двухэтапный гибридный метод:
  1. глобальный оптимизатор (SA, PS или GA) с ранним остановом → псевдооптимум θ**;
  2. подобласть Ω₀ = [θ** − a, θ** + a] ∩ Ω;
  3. неявная фильтрация в Ω₀ из θ**.
Также derive_target_objective — опорное целевое значение для останова по J
(длинный SA + полировка неявной фильтрацией).
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from src.core.configs import IFConfig, SAConfig, StoppingCriteria, SubdomainSpec
from src.core.interfaces import OptimizerInterface
from src.core.models import FeasibleBox, HybridReport, SourceParams
from src.modules.global_opt.annealing import sa_run
from src.modules.local_opt.implicit_filtering import if_run

logger = logging.getLogger(__name__)


def make_subdomain(theta_star: SourceParams, a: Union[SubdomainSpec, Sequence[float]],
                   omega: FeasibleBox) -> FeasibleBox:
    """
    Ω₀ = [θ* − a, θ* + a] ∩ Ω; все величины в физических единицах.
    Подобласть обрезается по границе Ω, но не сдвигается.
    """
    half = np.asarray(a.half_widths if isinstance(a, SubdomainSpec) else a, dtype=float)
    center = theta_star.as_array()
    lower = np.maximum(center - half, omega.lower_array)
    upper = np.minimum(center + half, omega.upper_array)
    return FeasibleBox(lower=tuple(float(v) for v in lower), upper=tuple(float(v) for v in upper))


def _scaled(box: FeasibleBox, scale: float) -> FeasibleBox:
    lo, hi = box.lower, box.upper
    return FeasibleBox(lower=(lo[0], lo[1], lo[2] / scale), upper=(hi[0], hi[1], hi[2] / scale))


def hybrid_run(ctx, optimizer: OptimizerInterface, stopping: StoppingCriteria,
               if_config: Optional[IFConfig] = None, a: Optional[SubdomainSpec] = None,
               rng: Optional[np.random.Generator] = None,
               true_source: Optional[SourceParams] = None) -> HybridReport:
    """
    Глобальный этап до первого выполненного критерия останова, затем неявная
    фильтрация в Ω₀ из θ**. Исчерпание бюджета первого этапа не фатально: оно
    отмечается в отчёте флагами budget_exhausted и wide_subdomain.
    """
    if_config = if_config or IFConfig()
    a = a or SubdomainSpec()
    rng = rng if rng is not None else np.random.default_rng()

    logger.info(f"[hybrid] Этап 1: {optimizer.name}")
    global_result = optimizer.run(ctx, stopping, rng)
    theta_star = global_result.best_theta

    omega0 = make_subdomain(theta_star, a, ctx.scenario.feasible_box)
    scaled0 = _scaled(omega0, ctx.scale)
    logger.info(f"[hybrid] θ** = ({theta_star.x:.3f}, {theta_star.y:.3f}, {theta_star.s0:.4g}); "
                f"Ω₀ = {omega0.lower} … {omega0.upper}")

    local_result = if_run(ctx, global_result.best_vector, if_config, box=scaled0)

    truth = true_source or ctx.scenario.true_source
    contains = None
    if truth is not None:
        contains = omega0.contains(truth.as_array())
        if not contains:
            logger.warning("[hybrid] Истинный источник не попал в Ω₀")

    report = HybridReport(
        global_result=global_result,
        subdomain=omega0,
        local_result=local_result,
        n_evaluations=global_result.n_evaluations + local_result.n_evaluations,
        contains_truth=contains,
        wide_subdomain=global_result.budget_exhausted,
        budget_exhausted=global_result.budget_exhausted,
    )
    logger.info(f"[hybrid] Итог: J={local_result.best_objective:.6g}, вычислений "
                f"{global_result.n_evaluations} + {local_result.n_evaluations}")
    return report


def derive_target_objective(ctx, rng: np.random.Generator, evaluations: int = 50_000,
                            margin: float = 1.0, sa_config: Optional[SAConfig] = None,
                            if_config: Optional[IFConfig] = None) -> float:
    """
    Опорное значение J для останова по цели: длинный SA на Ω, полировка неявной
    фильтрацией и абсолютный запас margin.
    """
    stopping = StoppingCriteria(max_evaluations=evaluations, stall_window=0)
    result = sa_run(ctx, sa_config or SAConfig(), stopping, rng)
    polished = if_run(ctx, result.best_vector, if_config or IFConfig(budget=2000))
    best = min(result.best_objective, polished.best_objective)
    logger.info(f"[hybrid] Опорный минимум J={best:.6g}; цель {best + margin:.6g}")
    return best + margin
