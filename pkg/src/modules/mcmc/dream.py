# src/modules/mcmc/dream.py

"""
dream.py

DREAM: P цепочек, предложения по разностям состояний других цепочек.

  - кандидат θ* = θ_i + (1 + e)·γ·(Σ θ_{j1} − Σ θ_{j2}) + ε, e ∼ U(−b, b), ε ∼ N(0, b*);
    доноры j1, j2 — 2δ различных цепочек, отличных от i, из снимка предыдущего поколения;
  - подпространство: координата обновляется, если u > 1 − CR; хотя бы одна — всегда;
  - вероятности уровней CR адаптируются на burn-in по нормированному квадрату прыжка;
  - после отклонения — гауссова вторая стадия с ковариацией γ2²·cov(популяции);
  - цепочки-выбросы (среднее log π последней половины ниже Q1 − 2·IQR) на burn-in
    заменяются текущей лучшей цепочкой;
  - трасса Gelman–Rubin на каждой итерации по префиксным суммам.
Кандидаты всех цепочек вычисляются одной параллельной партией; случайные числа
берутся только в вызывающем потоке.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from src.core.configs import DREAMConfig
from src.core.exceptions import ConfigurationError
from src.core.interfaces import SamplerInterface
from src.core.models import ChainSet, SourceParams
from src.modules.mcmc.chains import unscale_samples
from src.modules.mcmc.diagnostics import gelman_rubin_from_sums
from src.modules.mcmc.dram import dr_log_acceptance

logger = logging.getLogger(__name__)


def select_donors(i: int, n_chains: int, n_pairs: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """2δ различных индексов, отличных от i: (j1, j2) по δ штук."""
    others = np.delete(np.arange(n_chains), i)
    chosen = rng.choice(others, size=2 * n_pairs, replace=False)
    return chosen[:n_pairs], chosen[n_pairs:]


def crossover_mask(cr: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Маска обновляемых координат: u > 1 − CR; пустая маска заменяется одной случайной координатой."""
    mask = rng.uniform(size=dim) > 1.0 - cr
    if not mask.any():
        mask[rng.integers(dim)] = True
    return mask


def dream_propose(i: int, states: np.ndarray, cr: float, config: DREAMConfig,
                  rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Кандидат для цепочки i по снимку states. Возвращает (кандидат, маска)."""
    n_chains, dim = states.shape
    j1, j2 = select_donors(i, n_chains, config.n_pairs, rng)
    mask = crossover_mask(cr, dim, rng)
    gamma = config.gamma
    if config.standard_jump and config.jump_rate is None:
        gamma = 2.38 / math.sqrt(2.0 * config.n_pairs * int(mask.sum()))
    e = rng.uniform(-config.perturbation, config.perturbation, size=dim)
    eps = rng.normal(0.0, config.noise, size=dim)
    diff = states[j1].sum(axis=0) - states[j2].sum(axis=0)
    jump = (1.0 + e) * gamma * diff + eps
    cand = states[i].copy()
    cand[mask] += jump[mask]
    return cand, mask


def find_outliers(log_posteriors: np.ndarray, upto: int, multiplier: float = 2.0) -> np.ndarray:
    """
    Индексы цепочек, у которых среднее log π за последнюю половину истории [0, upto]
    ниже Q1 − multiplier·IQR.
    """
    start = upto // 2
    means = log_posteriors[:, start:upto + 1].mean(axis=1)
    q1, q3 = np.percentile(means, [25.0, 75.0])
    return np.nonzero(means < q1 - multiplier * (q3 - q1))[0]


def replace_outliers(states: np.ndarray, lp: np.ndarray, history: np.ndarray, t: int,
                     multiplier: float = 2.0) -> np.ndarray:
    """
    Заменяет цепочки-выбросы текущим лучшим состоянием среди остальных цепочек.
    history — буфер log π только для поиска выбросов: строка заменённой цепочки
    переписывается историей лучшей, чтобы следующая проверка её не отметила повторно.
    Возвращает индексы заменённых цепочек.
    """
    bad = find_outliers(history, t, multiplier)
    if bad.size:
        keep = np.setdiff1d(np.arange(lp.size), bad)
        best = int(keep[np.argmax(lp[keep])])
        for i in bad:
            states[i], lp[i] = states[best], lp[best]
            history[i, :t + 1] = history[best, :t + 1]
    return bad


def _population_factor(states: np.ndarray) -> np.ndarray:
    cov = np.cov(states, rowvar=False) + 1e-10 * np.eye(states.shape[1])
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return np.diag(np.sqrt(np.maximum(np.diag(cov), 1e-20)))


def dream_run(target, config: DREAMConfig, rng: np.random.Generator,
              initial: Optional[np.ndarray] = None) -> ChainSet:
    """
    P цепочек по n_iterations итераций (первая — начальные состояния).
    Начальные состояния — равномерно из Ω, если не заданы явно (масштабированные).

    Raises:
        ConfigurationError: P < 2δ + 1.
    """
    P, T = config.n_chains, config.n_iterations
    if P < 2 * config.n_pairs + 1:
        raise ConfigurationError(f"DREAM: нужно не меньше {2 * config.n_pairs + 1} цепочек для δ={config.n_pairs}")
    box = target.box
    dim = 3
    start_evals = target.n_evaluations
    n_burn = int(config.burn_in_fraction * T)

    states = box.sample(rng, P) if initial is None else np.asarray(initial, dtype=float).copy()
    lp = np.asarray(target.log_posterior_many(states), dtype=float)

    samples = np.empty((P, T, dim))
    lps = np.empty((P, T))
    samples[:, 0], lps[:, 0] = states, lp
    history = lps.copy()
    cum1 = np.zeros((T + 1, P, dim))
    cum2 = np.zeros((T + 1, P, dim))
    cum1[1], cum2[1] = states, states ** 2
    r_trace = np.full((T, dim), np.nan)

    levels = config.crossover_levels()
    p_cr = np.full(levels.size, 1.0 / levels.size)
    jump_sq = np.zeros(levels.size)
    used = np.zeros(levels.size)
    acceptance = {'stage1': 0, 'stage2': 0, 'rejected': 0}
    outliers: List[Tuple[int, int]] = []
    logger.info(f"[dream] Старт: {P} цепочек × {T} итераций, δ={config.n_pairs}, "
                f"γ={config.gamma:.4g}, burn-in {n_burn}")

    for t in range(1, T):
        snapshot = states.copy()
        choices = rng.choice(levels.size, size=P, p=p_cr)
        candidates = np.empty_like(snapshot)
        for i in range(P):
            candidates[i], _ = dream_propose(i, snapshot, levels[choices[i]], config, rng)
        lp_cand = np.asarray(target.log_posterior_many(candidates), dtype=float)
        u = rng.uniform(size=P)

        accepted = np.zeros(P, dtype=bool)
        for i in range(P):
            log_alpha = min(0.0, lp_cand[i] - lp[i]) if np.isfinite(lp_cand[i]) else -np.inf
            if np.log(u[i]) < log_alpha:
                states[i], lp[i] = candidates[i], lp_cand[i]
                accepted[i] = True
        acceptance['stage1'] += int(accepted.sum())

        rejected = np.nonzero(~accepted)[0]
        if config.delayed_rejection and rejected.size:
            factor = _population_factor(snapshot)
            cov = factor @ factor.T
            second = np.array([snapshot[i] + config.dr_scale * factor @ rng.standard_normal(dim)
                               for i in rejected])
            lp_second = np.asarray(target.log_posterior_many(second), dtype=float)
            u2 = rng.uniform(size=rejected.size)
            for n, i in enumerate(rejected):
                log_alpha = dr_log_acceptance(snapshot[i], lp[i], candidates[i], lp_cand[i],
                                              second[n], lp_second[n], cov)
                if np.log(u2[n]) < log_alpha:
                    states[i], lp[i] = second[n], lp_second[n]
                    acceptance['stage2'] += 1
                else:
                    acceptance['rejected'] += 1
        else:
            acceptance['rejected'] += int(rejected.size)

        if t < n_burn:
            std = np.maximum(snapshot.std(axis=0), 1e-300)
            delta = np.sum(((states - snapshot) / std) ** 2, axis=1)
            np.add.at(jump_sq, choices, delta)
            np.add.at(used, choices, 1.0)
            if np.all(used > 0) and jump_sq.sum() > 0:
                p_cr = (jump_sq / used) / np.sum(jump_sq / used)

            if t % config.outlier_interval == 0:
                history[:, t] = lp
                bad = replace_outliers(states, lp, history, t, config.iqr_multiplier)
                if bad.size:
                    outliers.extend((t, int(i)) for i in bad)
                    logger.info(f"[dream] Итерация {t}: заменены цепочки-выбросы {bad.tolist()}")

        samples[:, t], lps[:, t] = states, lp
        history[:, t] = lp
        cum1[t + 1] = cum1[t] + states
        cum2[t + 1] = cum2[t] + states ** 2
        n = int(math.floor((t + 1) * config.gelman_rubin_fraction))
        s = t + 1 - n
        r_trace[t] = gelman_rubin_from_sums(cum1[t + 1], cum2[t + 1], cum1[s], cum2[s], n)

    total = P * (T - 1)
    rate = (acceptance['stage1'] + acceptance['stage2']) / max(total, 1)
    logger.info(f"[dream] Готово: принято {rate:.1%}, выбросов {len(outliers)}, "
                f"R={np.round(r_trace[-1], 4).tolist()}, p_CR={np.round(p_cr, 3).tolist()}")
    return ChainSet(
        method='dream',
        samples=unscale_samples(samples, target.scale),
        log_posteriors=lps,
        burn_in=n_burn,
        acceptance=acceptance,
        outliers=outliers,
        gelman_rubin_trace=r_trace,
        crossover_probabilities=[float(p) for p in p_cr],
        n_evaluations=target.n_evaluations - start_evals,
    )


class DREAMSampler(SamplerInterface):
    name = 'dream'

    def __init__(self, config: Optional[DREAMConfig] = None):
        self.config = config or DREAMConfig()

    def run(self, target, rng: np.random.Generator,
            start: Optional[SourceParams] = None) -> ChainSet:
        # Начальные состояния берутся из равномерного априорного распределения
        return dream_run(target, self.config, rng)
