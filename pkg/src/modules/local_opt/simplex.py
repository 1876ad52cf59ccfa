# src/modules/local_opt/simplex.py

"""
simplex.py

Симплекс Нелдера–Мида (scipy.optimize.minimize) в единичном кубе коробки и
стартовая точка для DRAM: грубый перебор по решётке + Нелдер–Мид на OLS-невязке;
nelder_mead_run — Нелдер–Мид как самостоятельный метод экспериментов.
"""

import logging
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from src.core.interfaces import ObjectiveInterface
from src.core.models import FeasibleBox, OptResult
from src.core.parallel import evaluate_many
from src.modules.local_opt.implicit_filtering import project

logger = logging.getLogger(__name__)


def nelder_mead(fn: Callable[[np.ndarray], float], theta0: Sequence[float], box: FeasibleBox,
                max_evaluations: int = 2000, xatol: float = 1e-6, initial_step: float = 0.05) -> np.ndarray:
    """
    Минимизация fn симплексом из θ0 с проекцией на коробку.
    Останов по диаметру симплекса (xatol в координатах единичного куба)
    или по числу вычислений.
    """
    lo, width = box.lower_array, box.widths
    z0 = (project(theta0, box) - lo) / width

    simplex = [z0]
    for i in range(z0.size):
        v = z0.copy()
        v[i] += initial_step if v[i] + initial_step <= 1.0 else -initial_step
        simplex.append(v)

    def unit_fn(z: np.ndarray) -> float:
        return float(fn(lo + np.clip(z, 0.0, 1.0) * width))

    res = minimize(
        unit_fn, z0, method='Nelder-Mead',
        bounds=[(0.0, 1.0)] * z0.size,
        options={'xatol': xatol, 'fatol': np.inf, 'maxfev': max_evaluations,
                 'initial_simplex': np.array(simplex)},
    )
    logger.debug(f"[nelder-mead] {res.message}; вычислений {res.nfev}, f={res.fun:.6g}")
    return project(lo + np.clip(res.x, 0.0, 1.0) * width, box)


def lattice_search(fn: Callable[[np.ndarray], float], box: FeasibleBox, points_per_axis: int = 21,
                   intensity_levels: int = 5, batch: Optional[Callable] = None) -> np.ndarray:
    """Лучшая точка регулярной решётки: points_per_axis² позиций × intensity_levels интенсивностей."""
    xs = np.linspace(box.lower[0], box.upper[0], points_per_axis)
    ys = np.linspace(box.lower[1], box.upper[1], points_per_axis)
    ss = np.geomspace(max(box.lower[2], 1e-12), box.upper[2], intensity_levels)
    grid = np.array(np.meshgrid(xs, ys, ss, indexing='ij')).reshape(3, -1).T
    values = batch(grid) if batch is not None else np.array([fn(p) for p in grid])
    return grid[int(np.argmin(values))]


def ols_start(ctx, points_per_axis: int = 21, intensity_levels: int = 5) -> np.ndarray:
    """
    Стартовая точка для DRAM: минимум OLS-невязки (масштабированные координаты).
    """
    start = lattice_search(ctx.ols, ctx.box, points_per_axis, intensity_levels,
                           batch=lambda pts: evaluate_many(ctx.ols, pts, ctx.workers))
    theta = nelder_mead(ctx.ols, start, ctx.box)
    logger.info(f"[nelder-mead] OLS-старт: {ctx.to_source(theta)}")
    return theta


def nelder_mead_run(objective: ObjectiveInterface, rng: np.random.Generator,
                    theta0: Optional[Sequence[float]] = None, max_evaluations: int = 2000) -> OptResult:
    """
    Нелдер–Мид как самостоятельный метод: из θ0 или из случайной точки Ω.
    Используется как базовая линия для сравнения с гибридными методами.
    """
    start = objective.n_evaluations
    box = objective.box
    theta0 = box.sample(rng) if theta0 is None else np.asarray(theta0, dtype=float)
    theta = nelder_mead(objective, theta0, box, max_evaluations=max_evaluations)
    value = float(objective(theta))
    used = objective.n_evaluations - start
    reason = 'max_evaluations' if used >= max_evaluations else 'xatol'
    logger.info(f"[nelder-mead] Останов ({reason}): J={value:.6g}, вычислений {used}")
    return OptResult(
        method='nelder-mead',
        best_theta=objective.to_source(theta),
        best_vector=tuple(float(v) for v in theta),
        best_objective=value,
        n_evaluations=used,
        termination_reason=reason,
        budget_exhausted=(reason == 'max_evaluations'),
    )
