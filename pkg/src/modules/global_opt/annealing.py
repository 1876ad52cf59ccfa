# src/modules/global_opt/annealing.py

"""
annealing.py

Имитация отжига с повторным отжигом (reannealing) и несколькими траекториями.

Траектории идут синхронно: на каждой итерации все кандидаты вычисляются одной
параллельной партией, а случайные числа берутся только в вызывающем потоке,
поэтому результат не зависит от числа потоков.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.core.configs import SAConfig, StoppingCriteria
from src.core.interfaces import ObjectiveInterface, OptimizerInterface
from src.core.models import FeasibleBox, OptResult, TraceRecord
from src.modules.global_opt.stopping import StopMonitor, build_result, population_record

logger = logging.getLogger(__name__)

# Застой: столько интервалов повторного отжига подряд без смещения траектории
SA_STALL_WINDOW = 3

EPS = np.finfo(float).eps


def sa_propose(theta_old: np.ndarray, temperatures: Sequence[float], box: FeasibleBox,
               rng: np.random.Generator) -> np.ndarray:
    """
    Кандидат θ̃ = θ + r·T, r ∼ U(−1, 1). Недопустимый кандидат заменяется на
    α·clip(θ̃) + (1 − α)·θ, α ∼ U(0, 1).
    """
    theta_old = np.asarray(theta_old, dtype=float)
    r = np.asarray(rng.uniform(-1.0, 1.0, size=3), dtype=float)
    cand = theta_old + r * np.asarray(temperatures, dtype=float)
    if box.contains(cand):
        return cand
    bar = np.clip(cand, box.lower_array, box.upper_array)
    alpha = float(rng.uniform())
    return alpha * bar + (1.0 - alpha) * theta_old


def sa_accept_probability(j_new: float, j_old: float, temperatures: Sequence[float]) -> float:
    """1 для спуска, иначе 1/(1 + exp(ΔJ / max T))."""
    if j_new < j_old:
        return 1.0
    t_max = max(float(np.max(temperatures)), EPS)
    return float(expit(-(j_new - j_old) / t_max))


def anneal_temperatures(t0: np.ndarray, k: np.ndarray, cooling_base: float = 0.95) -> np.ndarray:
    """T_i = T_i⁰ · base^k_i."""
    return np.asarray(t0, dtype=float) * cooling_base ** np.asarray(k, dtype=float)


def reanneal_counters(t0: np.ndarray, temperatures: np.ndarray, sensitivities: np.ndarray) -> np.ndarray:
    """k_i = ln(T_i⁰/T_i · max_j s_j / s_i); нулевые s_i заменяются на машинный эпсилон."""
    s = np.maximum(np.abs(np.asarray(sensitivities, dtype=float)), EPS)
    ratio = np.asarray(t0, dtype=float) / np.asarray(temperatures, dtype=float) * (s.max() / s)
    return np.log(ratio)


def sa_anneal_and_reanneal(t0: np.ndarray, temperatures: np.ndarray, k: np.ndarray,
                           accepted_count: int, reanneal_interval: int,
                           sensitivities: Optional[np.ndarray] = None,
                           cooling_base: float = 0.95) -> Tuple[np.ndarray, np.ndarray, bool]:
    """
    Шаг охлаждения траектории.
    Если accepted_count кратно reanneal_interval и переданы чувствительности,
    счётчики k пересчитываются (повторный отжиг), иначе k увеличивается на 1.

    Returns:
        (новые температуры, новые k, был ли повторный отжиг)
    """
    reanneal = (sensitivities is not None and accepted_count > 0
                and accepted_count % reanneal_interval == 0)
    if reanneal:
        k_new = reanneal_counters(t0, temperatures, sensitivities)
    else:
        k_new = np.asarray(k, dtype=float) + 1.0
    return anneal_temperatures(t0, k_new, cooling_base), k_new, reanneal


def _fd_points(theta: np.ndarray, delta: float, box: FeasibleBox) -> Tuple[np.ndarray, np.ndarray]:
    """Точки θ ± δ·e_i для конечных разностей (назад, если вперёд выходит из Ω)."""
    pts, steps = [], []
    for i in range(3):
        step = delta if theta[i] + delta <= box.upper[i] else -delta
        p = theta.copy()
        p[i] += step
        pts.append(p)
        steps.append(step)
    return np.array(pts), np.array(steps)


def sa_run(objective: ObjectiveInterface, config: SAConfig, stopping: StoppingCriteria,
           rng: np.random.Generator) -> OptResult:
    """
    P независимых траекторий из равномерных стартов; останов, когда критерий выполнен
    хотя бы для одной траектории. n_evaluations суммирует все траектории.
    """
    box = objective.box
    P = config.n_starts
    t0 = np.asarray(config.initial_temperatures, dtype=float)
    monitor = StopMonitor(stopping, objective, 'sa')
    stall_window = stopping.resolve_stall_window(SA_STALL_WINDOW)
    logger.info(f"[sa] Старт: {P} траекторий, T0={tuple(t0)}, r_p={config.reanneal_interval}")

    theta = box.sample(rng, P)
    values = objective.evaluate_many(theta)
    k = np.ones((P, 3))
    temps = np.tile(t0, (P, 1))
    accepted = np.zeros(P, dtype=int)
    stall_counts = np.zeros(P, dtype=int)
    last_reanneal: List[Optional[np.ndarray]] = [None] * P

    best_idx = int(np.argmin(values))
    best_vec, best = theta[best_idx].copy(), float(values[best_idx])
    trace: List[TraceRecord] = [population_record(0, monitor.used, best, values, theta, objective)]
    iteration = 0
    stalled = False

    while monitor.check(best, iteration, stalled) is None:
        iteration += 1
        candidates = np.array([sa_propose(theta[i], temps[i], box, rng) for i in range(P)])
        cand_values = objective.evaluate_many(candidates)
        u = rng.uniform(size=P)

        accepted_now = np.zeros(P, dtype=bool)
        for i in range(P):
            p = sa_accept_probability(cand_values[i], values[i], temps[i])
            if cand_values[i] < values[i] or u[i] < p:
                theta[i], values[i] = candidates[i], cand_values[i]
                accepted[i] += 1
                accepted_now[i] = True

        # Повторный отжиг: чувствительности всех нуждающихся траекторий считаются одной партией
        due = [i for i in range(P)
               if accepted_now[i] and accepted[i] % config.reanneal_interval == 0]
        sens = {}
        if due:
            fd = [_fd_points(theta[i], config.fd_delta, box) for i in due]
            fd_values = objective.evaluate_many(np.vstack([pts for pts, _ in fd]))
            for n, i in enumerate(due):
                vals = fd_values[3 * n:3 * n + 3]
                sens[i] = np.abs((vals - values[i]) / fd[n][1])

        for i in range(P):
            temps[i], k[i], reannealed = sa_anneal_and_reanneal(
                t0, temps[i], k[i], accepted[i], config.reanneal_interval,
                sens.get(i), config.cooling_base,
            )
            if reannealed:
                logger.debug(f"[sa] Траектория {i}: повторный отжиг, k={np.round(k[i], 3).tolist()}")
                prev = last_reanneal[i]
                if prev is not None:
                    change = np.linalg.norm(theta[i] - prev) / max(1.0, np.linalg.norm(prev))
                    stall_counts[i] = stall_counts[i] + 1 if change < stopping.stall_tolerance else 0
                last_reanneal[i] = theta[i].copy()

        idx = int(np.argmin(values))
        if values[idx] < best:
            best, best_vec = float(values[idx]), theta[idx].copy()
        if stall_window is not None:
            stalled = bool(np.any(stall_counts >= stall_window))
        trace.append(population_record(iteration, monitor.used, best, values, theta, objective))

    logger.info(f"[sa] Останов ({monitor.reason}): J={best:.6g}, вычислений {monitor.used}, итераций {iteration}")
    return build_result('sa', objective, best_vec, best, monitor, trace,
                        iterations=iteration, accepted=int(accepted.sum()))


class SimulatedAnnealing(OptimizerInterface):
    name = 'sa'

    def __init__(self, config: Optional[SAConfig] = None):
        self.config = config or SAConfig()

    def run(self, objective: ObjectiveInterface, stopping: StoppingCriteria,
            rng: np.random.Generator) -> OptResult:
        return sa_run(objective, self.config, stopping, rng)
