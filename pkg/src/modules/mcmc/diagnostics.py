# src/modules/mcmc/diagnostics.py

"""
diagnostics.py

Диагностики сходимости цепочек:
  - geweke: z-статистика сравнения средних начального и конечного участков со
    спектральной оценкой дисперсии (окно Бартлетта, лаг floor(√n)) и оценка
    сходимости 2·(1 − Φ(|z|));
  - gelman_rubin: фактор уменьшения масштаба R по последней доле выборок;
  - gelman_rubin_from_sums: то же по префиксным суммам (для трассы R на каждой итерации);
  - effective_sample_size: эффективный размер выборки (начальная положительная
    последовательность автокорреляций);
  - diagnose: сводный DiagnosticsReport по ChainSet.
"""

import logging
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from src.core.exceptions import InvalidInputError
from src.core.models import ChainSet, DiagnosticsReport

logger = logging.getLogger(__name__)

PARAMETERS = ('x', 'y', 's0')


class GewekeResult(NamedTuple):
    z: np.ndarray
    score: np.ndarray
    degenerate: np.ndarray


class GelmanRubinResult(NamedTuple):
    r: np.ndarray
    degenerate: np.ndarray


def _as_2d(chain) -> np.ndarray:
    arr = np.asarray(chain, dtype=float)
    return arr[:, None] if arr.ndim == 1 else arr


def autocovariance(x: np.ndarray) -> np.ndarray:
    """Автоковариации одномерного ряда для всех лагов (через БПФ, смещённая оценка)."""
    n = x.size
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, n=size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), n=size)[:n]
    return acov / n


def spectral_variance(x: np.ndarray) -> float:
    """Спектральная плотность в нуле (окно Бартлетта, лаг floor(√n))."""
    n = x.size
    acov = autocovariance(x)
    lag = min(int(np.floor(np.sqrt(n))), n - 1)
    k = np.arange(1, lag + 1)
    weights = 1.0 - k / (lag + 1.0)
    return float(acov[0] + 2.0 * np.sum(weights * acov[1:lag + 1]))


def geweke(chain, first_frac: float = 0.1, last_frac: float = 0.5) -> GewekeResult:
    """
    Диагностика Geweke по каждому параметру.

    Raises:
        InvalidInputError: длина цепочки меньше 100 или доли перекрываются.
    """
    arr = _as_2d(chain)
    n = arr.shape[0]
    if n < 100:
        raise InvalidInputError(f"для диагностики Geweke нужно ≥ 100 выборок, получено {n}")
    if first_frac + last_frac > 1.0:
        raise InvalidInputError("first_frac + last_frac не должно превышать 1")

    n1 = int(first_frac * n)
    n2 = int(last_frac * n)
    first, last = arr[:n1], arr[n - n2:]
    z = np.zeros(arr.shape[1])
    degenerate = np.zeros(arr.shape[1], dtype=bool)
    for j in range(arr.shape[1]):
        v1 = spectral_variance(first[:, j]) / n1
        v2 = spectral_variance(last[:, j]) / n2
        if np.ptp(first[:, j]) == 0 or np.ptp(last[:, j]) == 0 or v1 + v2 <= 0:
            degenerate[j] = True
            z[j] = np.nan
            continue
        z[j] = (first[:, j].mean() - last[:, j].mean()) / np.sqrt(v1 + v2)
    score = 2.0 * norm.sf(np.abs(z))
    return GewekeResult(z=z, score=score, degenerate=degenerate)


def _psrf(means: np.ndarray, variances: np.ndarray, n: int) -> GelmanRubinResult:
    """R по средним (m × d) и внутрицепочечным дисперсиям (m × d) сегментов длины n."""
    W = variances.mean(axis=0)
    B = n * means.var(axis=0, ddof=1)
    degenerate = W <= 0
    with np.errstate(divide='ignore', invalid='ignore'):
        r = np.sqrt(((n - 1.0) / n * W + B / n) / W)
    r = np.where(degenerate, np.where(B > 0, np.inf, np.nan), np.maximum(r, 1.0))
    return GelmanRubinResult(r=r, degenerate=degenerate)


def gelman_rubin(chains, last_frac: float = 0.5) -> GelmanRubinResult:
    """
    R = √(((n − 1)/n·W + B/n) / W) по последней доле last_frac каждой цепочки.
    R снизу ограничено единицей; W = 0 помечается как вырожденный случай.

    Raises:
        InvalidInputError: меньше двух цепочек или слишком короткий сегмент.
    """
    arr = np.asarray(chains, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.shape[0] < 2:
        raise InvalidInputError("для Gelman–Rubin нужно не меньше двух цепочек")
    n_total = arr.shape[1]
    n = int(np.floor(n_total * last_frac))
    if n < 2:
        raise InvalidInputError("слишком короткие цепочки для Gelman–Rubin")
    seg = arr[:, n_total - n:, :]
    return _psrf(seg.mean(axis=1), seg.var(axis=1, ddof=1), n)


def gelman_rubin_from_sums(sum1: np.ndarray, sum2: np.ndarray, start_sum1: np.ndarray,
                           start_sum2: np.ndarray, n: int) -> np.ndarray:
    """
    R по разностям префиксных сумм (m × d) для сегмента длины n.
    sum* — суммы по концу сегмента, start_sum* — по элементу перед его началом.
    """
    if n < 2:
        return np.full(sum1.shape[1], np.nan)
    s1 = sum1 - start_sum1
    s2 = sum2 - start_sum2
    means = s1 / n
    variances = np.maximum((s2 - n * means ** 2) / (n - 1.0), 0.0)
    return _psrf(means, variances, n).r


def effective_sample_size(chain) -> np.ndarray:
    """ESS по каждому параметру: n / (1 + 2·Σρ_k) по начальной положительной последовательности."""
    arr = _as_2d(chain)
    n = arr.shape[0]
    out = np.zeros(arr.shape[1])
    for j in range(arr.shape[1]):
        acov = autocovariance(arr[:, j])
        if acov[0] <= 0:
            out[j] = 0.0
            continue
        rho = acov / acov[0]
        total = 0.0
        # Суммирование пар ρ_{2k} + ρ_{2k+1}, пока они положительны
        for k in range(0, n - 1, 2):
            pair = rho[k] + rho[k + 1]
            if pair <= 0:
                break
            total += pair
        tau = max(2.0 * total - 1.0, 1.0)
        out[j] = n / tau
    return out


def stationarity_index(chain, threshold: float = 2.0, steps: int = 5) -> int:
    """
    Наименьшая отбрасываемая доля (0, 10%, …, 50%) начала цепочки, после которой
    все |z| Geweke меньше threshold.
    """
    arr = _as_2d(chain)
    n = arr.shape[0]
    for step in range(steps + 1):
        start = int(n * step / (2 * steps))
        if n - start < 100:
            break
        res = geweke(arr[start:])
        if not res.degenerate.any() and np.all(np.abs(res.z) < threshold):
            return start
    return n // 2


def diagnose(chains: ChainSet, first_frac: float = 0.1, last_frac: float = 0.5) -> DiagnosticsReport:
    """Сводные диагностики по выборкам после burn-in."""
    retained = chains.retained()
    flags = []

    per_chain = [geweke(retained[c], first_frac, last_frac) for c in range(retained.shape[0])]
    z = np.array([r.z for r in per_chain])
    score = np.array([r.score for r in per_chain])
    # Для нескольких цепочек берётся худший случай
    worst = np.argmax(np.where(np.isnan(z), -np.inf, np.abs(z)), axis=0)
    z_out = z[worst, np.arange(z.shape[1])]
    score_out = score[worst, np.arange(z.shape[1])]
    for j, name in enumerate(PARAMETERS):
        if any(r.degenerate[j] for r in per_chain):
            flags.append(f"geweke:{name}")

    r_out = None
    if retained.shape[0] >= 2:
        gr = gelman_rubin(retained, last_frac)
        r_out = [float(v) for v in gr.r]
        flags.extend(f"gelman_rubin:{name}" for j, name in enumerate(PARAMETERS) if gr.degenerate[j])

    ess = np.sum([effective_sample_size(retained[c]) for c in range(retained.shape[0])], axis=0)
    start = stationarity_index(retained[0]) if retained.shape[1] >= 100 else 0
    if flags:
        logger.warning(f"[diagnostics] Вырожденные параметры: {', '.join(flags)}")
    return DiagnosticsReport(
        geweke_z=[float(v) for v in z_out],
        geweke_score=[float(v) for v in score_out],
        gelman_rubin=r_out,
        effective_sample_size=[float(v) for v in ess],
        stationarity_index=start,
        degenerate=flags,
    )
