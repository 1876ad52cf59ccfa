# src/modules/mcmc/dram.py

"""
dram.py

Адаптивный Метрополис с отложенным отклонением (DRAM).

  - предложение θ* = θ + L·z, z ∼ N(0, I), L — множитель Холецкого ковариации;
  - кандидаты вне Ω отклоняются без вычисления модели (равномерное априорное);
  - после отклонения — второй кандидат θ*² = θ + γ2·L·z2 с вероятностью принятия,
    сохраняющей детальный баланс;
  - при k ≡ 1 (mod k0), k > k0: V = s_p·cov(θ⁰…θᵏ) + reg·I и новое разложение Холецкого;
    при неудаче разложения сохраняется прежний множитель.
Все вычисления — в масштабированных координатах; цепочка сохраняется в физических.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import multivariate_normal

from src.core.configs import DRAMConfig
from src.core.exceptions import ConfigurationError
from src.core.interfaces import SamplerInterface
from src.core.models import ChainSet, SourceParams
from src.modules.local_opt.simplex import ols_start
from src.modules.mcmc.chains import unscale_samples

logger = logging.getLogger(__name__)


def initial_covariance(theta0: np.ndarray, config: DRAMConfig) -> np.ndarray:
    """V0 из конфигурации или diag(|θ⁰·cov_fraction|²)."""
    if config.initial_covariance is not None:
        return np.asarray(config.initial_covariance, dtype=float)
    diag = np.maximum(np.abs(theta0 * config.cov_fraction), 1e-12) ** 2
    return np.diag(diag)


def adapted_factor(history: np.ndarray, config: DRAMConfig, previous: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Множитель Холецкого для s_p·cov(history) + reg·I.

    Returns:
        (множитель, успешно ли разложение); при неудаче — previous.
    """
    cov = config.scale * np.cov(history, rowvar=False) + config.regularization * np.eye(history.shape[1])
    try:
        return np.linalg.cholesky(cov), True
    except np.linalg.LinAlgError:
        logger.warning("[dram] Разложение Холецкого не удалось; сохраняем прежнюю ковариацию")
        return previous, False


def dr_log_acceptance(current: np.ndarray, lp_current: float, first: np.ndarray, lp_first: float,
                      second: np.ndarray, lp_second: float, cov: np.ndarray) -> float:
    """
    log α2 второй стадии:
        α2 = min(1, π(θ*²)·q1(θ*|θ*²)·(1 − α1(θ*², θ*)) / (π(θ)·q1(θ*|θ)·(1 − α1(θ, θ*)))),
    где q1 — гауссова плотность первой стадии, α1(a, b) = min(1, π(b)/π(a)).
    """
    if not np.isfinite(lp_second):
        return -np.inf
    a1_back = 1.0 if lp_first >= lp_second else float(np.exp(lp_first - lp_second))
    a1_fwd = 1.0 if lp_first >= lp_current else float(np.exp(lp_first - lp_current))
    if a1_back >= 1.0:
        return -np.inf
    if a1_fwd >= 1.0:
        # Первая стадия не могла быть отклонена
        return -np.inf
    num = lp_second + multivariate_normal.logpdf(first, mean=second, cov=cov) + np.log1p(-a1_back)
    den = lp_current + multivariate_normal.logpdf(first, mean=current, cov=cov) + np.log1p(-a1_fwd)
    return float(min(0.0, num - den))


def dram_dr_step(log_posterior, current: np.ndarray, lp_current: float, first: np.ndarray,
                 lp_first: float, factor: np.ndarray, config: DRAMConfig,
                 rng: np.random.Generator) -> Tuple[np.ndarray, float, bool]:
    """
    Вторая стадия после отклонения first.

    Returns:
        (новое состояние, его log π, принят ли второй кандидат)
    """
    z = rng.standard_normal(current.size)
    second = current + config.dr_scale * factor @ z
    lp_second = log_posterior(second)
    log_alpha = dr_log_acceptance(current, lp_current, first, lp_first, second, lp_second,
                                  factor @ factor.T)
    if np.log(rng.uniform()) < log_alpha:
        return second, lp_second, True
    return current, lp_current, False


def dram_run(target, config: DRAMConfig, theta_start: Sequence[float],
             rng: np.random.Generator) -> ChainSet:
    """
    Одна цепочка длины burn_in + n_iterations, начиная с theta_start
    (масштабированные координаты).

    Raises:
        ConfigurationError: стартовая точка вне Ω или с нулевой плотностью.
    """
    theta = np.asarray(theta_start, dtype=float).copy()
    lp = target.log_posterior(theta)
    if not np.isfinite(lp):
        raise ConfigurationError("стартовая точка DRAM вне допустимой области или с нулевой плотностью")

    total = config.burn_in + config.n_iterations
    start_evals = target.n_evaluations
    samples = np.empty((total, theta.size))
    lps = np.empty(total)
    factor = np.linalg.cholesky(initial_covariance(theta, config)
                                + config.regularization * np.eye(theta.size))
    acceptance = {'stage1': 0, 'stage2': 0, 'rejected': 0}
    failed_adaptations = 0
    logger.info(f"[dram] Старт: {total} итераций (burn-in {config.burn_in}), k0={config.adapt_interval}")

    for k in range(total):
        z = rng.standard_normal(theta.size)
        cand = theta + factor @ z
        lp_cand = target.log_posterior(cand)
        log_alpha = min(0.0, lp_cand - lp) if np.isfinite(lp_cand) else -np.inf
        if np.log(rng.uniform()) < log_alpha:
            theta, lp = cand, lp_cand
            acceptance['stage1'] += 1
        elif config.delayed_rejection:
            theta, lp, ok = dram_dr_step(target.log_posterior, theta, lp, cand, lp_cand,
                                         factor, config, rng)
            acceptance['stage2' if ok else 'rejected'] += 1
        else:
            acceptance['rejected'] += 1
        samples[k], lps[k] = theta, lp

        step = k + 1
        if step > config.adapt_interval and step % config.adapt_interval == 1:
            factor, ok = adapted_factor(samples[:k + 1], config, factor)
            failed_adaptations += 0 if ok else 1

    rate = (acceptance['stage1'] + acceptance['stage2']) / total
    logger.info(f"[dram] Готово: принято {rate:.1%} (DR {acceptance['stage2']}), "
                f"неудачных адаптаций {failed_adaptations}")
    return ChainSet(
        method='dram',
        samples=unscale_samples(samples, target.scale)[None, :, :],
        log_posteriors=lps[None, :],
        burn_in=config.burn_in,
        acceptance=acceptance,
        n_evaluations=target.n_evaluations - start_evals,
    )


class DRAMSampler(SamplerInterface):
    name = 'dram'

    def __init__(self, config: Optional[DRAMConfig] = None):
        self.config = config or DRAMConfig()

    def run(self, target, rng: np.random.Generator,
            start: Optional[SourceParams] = None) -> ChainSet:
        if start is None:
            vec = ols_start(target)
        else:
            vec = target.to_vector(start)
        return dram_run(target, self.config, vec, rng)
