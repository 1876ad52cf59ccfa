# src/modules/local_opt/implicit_filtering.py

"""
implicit_filtering.py

Неявная фильтрация для негладкой минимизации с ограничениями-коробкой.

Внешний цикл уменьшает шкалу шаблона h вдвое, пока h ≥ h_min и не исчерпан бюджет.
Внутренний цикл на фиксированной h:
  1. опрос шаблона θ ± h·e_i (недопустимые точки пропускаются);
  2. отказ шаблона (ни одна точка не лучше текущей) завершает цикл;
  3. проекционный квазиньютоновский шаг (BFGS на ε-неактивных координатах);
  4. линейный поиск λ = β·2^−m, m = 0…maxitarm, с простым убыванием; при неудаче —
     лучшая точка шаблона.
Все вычисления идут в координатах единичного куба данной коробки, поэтому одна h
подходит для всех трёх параметров. Значения опроса шаблона повторно используются
для разностного градиента.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.core.configs import IFConfig
from src.core.interfaces import ObjectiveInterface
from src.core.models import FeasibleBox, OptResult, TraceRecord

logger = logging.getLogger(__name__)

STENCIL_FAILURE = -1


def project(theta: Sequence[float], box: FeasibleBox) -> np.ndarray:
    """Покомпонентная проекция на коробку: max(l, min(θ, u))."""
    return np.clip(np.asarray(theta, dtype=float), box.lower_array, box.upper_array)


def _stencil(theta: np.ndarray, h: float, box: FeasibleBox):
    """Допустимые точки шаблона: список (координата, знак, точка)."""
    out = []
    for i in range(theta.size):
        for sign in (1.0, -1.0):
            p = theta.copy()
            p[i] += sign * h
            if box.lower[i] <= p[i] <= box.upper[i]:
                out.append((i, sign, p))
    return out


def _gradient_from_poll(theta: np.ndarray, fc: float, h: float, poll, values: np.ndarray) -> np.ndarray:
    grad = np.zeros(theta.size)
    sides = {}
    for (i, sign, _), v in zip(poll, values):
        sides[(i, sign)] = v
    for i in range(theta.size):
        fp, fm = sides.get((i, 1.0)), sides.get((i, -1.0))
        if fp is not None and fm is not None:
            grad[i] = (fp - fm) / (2.0 * h)
        elif fp is not None:
            grad[i] = (fp - fc) / h
        elif fm is not None:
            grad[i] = (fc - fm) / h
    return grad


def stencil_gradient(fn: Callable[[np.ndarray], float], theta: Sequence[float], h: float,
                     box: FeasibleBox, fc: Optional[float] = None) -> np.ndarray:
    """
    Разностный градиент по шаблону: центральная разность, односторонняя при одной
    недопустимой точке, 0 — если недопустимы обе.
    """
    theta = np.asarray(theta, dtype=float)
    poll = _stencil(theta, h, box)
    values = np.array([fn(p) for _, _, p in poll], dtype=float)
    if fc is None and len(poll) < 2 * theta.size:
        fc = fn(theta)
    return _gradient_from_poll(theta, fc if fc is not None else 0.0, h, poll, values)


def _active_set(theta: np.ndarray, grad: np.ndarray, box: FeasibleBox, eps: float) -> np.ndarray:
    at_lower = (theta - box.lower_array <= eps) & (grad > 0)
    at_upper = (box.upper_array - theta <= eps) & (grad < 0)
    return at_lower | at_upper


def _bfgs_update(R: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """BFGS-обновление модели Гессе; при нарушении условия кривизны — единичная матрица."""
    ys = float(y @ s)
    if ys <= 0 or not np.isfinite(ys):
        return np.eye(R.shape[0])
    Rs = R @ s
    sRs = float(s @ Rs)
    if sRs <= 0:
        return np.eye(R.shape[0])
    return R - np.outer(Rs, Rs) / sRs + np.outer(y, y) / ys


def quasi_newton_direction(R: np.ndarray, grad: np.ndarray, active: np.ndarray) -> np.ndarray:
    """
    Направление d: на неактивных координатах решает R_II d = −g_I,
    на активных — антиградиент.
    """
    d = -grad.copy()
    free = ~active
    if free.any():
        R_ff = R[np.ix_(free, free)]
        try:
            d[free] = np.linalg.solve(R_ff, -grad[free])
        except np.linalg.LinAlgError:
            d[free] = -grad[free]
    return d


class _Budget:
    def __init__(self, evaluate, limit: int):
        self.evaluate = evaluate
        self.limit = limit
        self.used = 0

    @property
    def left(self) -> int:
        return self.limit - self.used

    def __call__(self, points: np.ndarray) -> np.ndarray:
        self.used += len(points)
        return self.evaluate(points)


def if_inner(evaluate, theta: np.ndarray, fc: float, h: float, config: IFConfig, box: FeasibleBox,
             budget: _Budget, trace: List[TraceRecord], iteration0: int = 0,
             eval_offset: int = 0) -> Tuple[np.ndarray, float, int, str]:
    """
    Внутренний цикл на фиксированной шкале h.

    Args:
        evaluate: функция партии точек → значения.

    Returns:
        (θ', J', число итераций, причина завершения); J' ≤ fc всегда.
    """
    tau = config.tau_factor * abs(fc)
    R = np.eye(theta.size)
    prev: Optional[Tuple[np.ndarray, np.ndarray]] = None

    for it in range(config.maxit):
        if budget.left <= 0:
            return theta, fc, it, 'budget'
        poll = _stencil(theta, h, box)
        values = budget(np.array([p for _, _, p in poll])) if poll else np.zeros(0)
        grad = _gradient_from_poll(theta, fc, h, poll, values)
        gnorm = float(np.linalg.norm(grad))

        if values.size == 0 or float(values.min()) >= fc:
            trace.append(TraceRecord(iteration=iteration0 + it + 1, n_evaluations=eval_offset + budget.used,
                                     best=fc, scale=h, gradient_norm=gnorm,
                                     line_search_reductions=STENCIL_FAILURE))
            return theta, fc, it + 1, 'stencil_failure'
        k_min = int(np.argmin(values))
        theta_min, f_min = poll[k_min][2], float(values[k_min])

        if np.linalg.norm(theta - project(theta - grad, box)) < tau * h:
            return theta, fc, it, 'gradient'

        if prev is not None:
            R = _bfgs_update(R, theta - prev[0], grad - prev[1])
        active = _active_set(theta, grad, box, config.active_epsilon)
        if np.any(active):
            R[np.ix_(active, ~active)] = 0.0
            R[np.ix_(~active, active)] = 0.0
            R[active, active] = 1.0
        direction = quasi_newton_direction(R, grad, active)
        prev = (theta.copy(), grad.copy())

        reductions = config.maxitarm
        accepted = False
        for m in range(config.maxitarm + 1):
            if budget.left <= 0:
                break
            lam = config.beta * 2.0 ** (-m)
            trial = project(theta + lam * direction, box)
            f_trial = float(budget(trial[None, :])[0])
            if f_trial < fc:
                theta, fc, reductions, accepted = trial, f_trial, m, True
                break
        if not accepted:
            theta, fc = theta_min.copy(), f_min

        trace.append(TraceRecord(iteration=iteration0 + it + 1, n_evaluations=eval_offset + budget.used,
                                 best=fc, scale=h, gradient_norm=gnorm, line_search_reductions=reductions))
    return theta, fc, config.maxit, 'maxit'


def if_run(objective: ObjectiveInterface, theta0: Sequence[float], config: Optional[IFConfig] = None,
           box: Optional[FeasibleBox] = None) -> OptResult:
    """
    Неявная фильтрация из θ0 (масштабированные координаты) в коробке box
    (по умолчанию objective.box).
    """
    config = config or IFConfig()
    box = box or objective.box
    lo, width = box.lower_array, box.widths
    unit = FeasibleBox(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0))

    def evaluate(points: np.ndarray) -> np.ndarray:
        return objective.evaluate_many(lo + np.atleast_2d(points) * width)

    start = objective.n_evaluations
    budget = _Budget(evaluate, config.budget)
    z = project((np.asarray(theta0, dtype=float) - lo) / width, unit)
    fc = float(budget(z[None, :])[0])
    logger.info(f"[if] Старт: J={fc:.6g}, бюджет {config.budget}, шкалы {config.h0}…{config.h_min:.3g}")

    trace: List[TraceRecord] = []
    reason = 'scales_exhausted'
    iterations = 0
    for h in config.scales():
        if budget.left <= 0:
            reason = 'budget'
            break
        z, fc, n_it, inner_reason = if_inner(evaluate, z, fc, h, config, unit, budget, trace, iterations)
        iterations += n_it
        logger.debug(f"[if] h={h:.3g}: J={fc:.6g}, {inner_reason}, вычислений {budget.used}")
    else:
        reason = 'scales_exhausted' if budget.left > 0 else 'budget'

    best_vec = lo + z * width
    logger.info(f"[if] Останов ({reason}): J={fc:.6g}, вычислений {objective.n_evaluations - start}")
    return OptResult(
        method='if',
        best_theta=objective.to_source(best_vec),
        best_vector=tuple(float(v) for v in best_vec),
        best_objective=fc,
        n_evaluations=objective.n_evaluations - start,
        trace=trace,
        termination_reason=reason,
        budget_exhausted=(reason == 'budget'),
        extra={'iterations': iterations},
    )
