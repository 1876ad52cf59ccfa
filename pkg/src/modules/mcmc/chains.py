# src/modules/mcmc/chains.py

"""
chains.py

Работа с цепочками MCMC:
  - unscale_samples: перевод масштабированных выборок в физические единицы;
  - chains_to_frame / write_chains_csv / read_chains_csv: экспорт и чтение CSV
    (chain, iteration, x, y, s0, log_posterior);
  - gelman_rubin_frame: трасса R по итерациям;
  - histograms: гистограммы выборок после burn-in (фиксированное число бинов);
  - summarize_chains: апостериорные средние, СКО и 95%-интервалы;
  - verify_log_posteriors: выборочная перепроверка сохранённых log π.
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from src.core.models import ChainSet

logger = logging.getLogger(__name__)

PARAMETERS = ('x', 'y', 's0')
CHAIN_COLUMNS = ['chain', 'iteration', 'x', 'y', 's0', 'log_posterior']


def unscale_samples(samples: np.ndarray, scale: float) -> np.ndarray:
    out = np.array(samples, dtype=float, copy=True)
    out[..., 2] *= scale
    return out


def scale_samples(samples: np.ndarray, scale: float) -> np.ndarray:
    out = np.array(samples, dtype=float, copy=True)
    out[..., 2] /= scale
    return out


def chains_to_frame(chains: ChainSet) -> pd.DataFrame:
    m, n, _ = chains.samples.shape
    flat = chains.samples.reshape(m * n, 3)
    return pd.DataFrame({
        'chain': np.repeat(np.arange(m), n),
        'iteration': np.tile(np.arange(n), m),
        'x': flat[:, 0],
        'y': flat[:, 1],
        's0': flat[:, 2],
        'log_posterior': chains.log_posteriors.reshape(m * n),
    }, columns=CHAIN_COLUMNS)


def write_chains_csv(chains: ChainSet, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    chains_to_frame(chains).to_csv(path, index=False)
    logger.info(f"[{chains.method}] Цепочки сохранены: {path}")
    return path


def read_chains_csv(path: Path, method: str = 'chains', burn_in: int = 0) -> ChainSet:
    """Читает CSV цепочек обратно в ChainSet (длины цепочек должны совпадать)."""
    df = pd.read_csv(path).sort_values(['chain', 'iteration'], kind='stable')
    n_chains = df['chain'].nunique()
    n_iter = len(df) // n_chains
    samples = df[['x', 'y', 's0']].to_numpy(dtype=float).reshape(n_chains, n_iter, 3)
    lps = df['log_posterior'].to_numpy(dtype=float).reshape(n_chains, n_iter)
    return ChainSet(method=method, samples=samples, log_posteriors=lps, burn_in=burn_in)


def gelman_rubin_frame(chains: ChainSet) -> Optional[pd.DataFrame]:
    if chains.gelman_rubin_trace is None:
        return None
    trace = chains.gelman_rubin_trace
    return pd.DataFrame({
        'iteration': np.arange(trace.shape[0]),
        'r_x': trace[:, 0],
        'r_y': trace[:, 1],
        'r_s0': trace[:, 2],
    })


def histograms(chains: ChainSet, bins: int = 50) -> pd.DataFrame:
    """Гистограммы по параметрам: parameter, bin_left, bin_right, count."""
    retained = chains.retained().reshape(-1, 3)
    frames = []
    for j, name in enumerate(PARAMETERS):
        counts, edges = np.histogram(retained[:, j], bins=bins)
        frames.append(pd.DataFrame({
            'parameter': name,
            'bin_left': edges[:-1],
            'bin_right': edges[1:],
            'count': counts,
        }))
    return pd.concat(frames, ignore_index=True)


def summarize_chains(chains: ChainSet) -> pd.DataFrame:
    """Среднее, СКО и 2.5%/50%/97.5% квантили по выборкам после burn-in."""
    retained = chains.retained().reshape(-1, 3)
    q = np.percentile(retained, [2.5, 50.0, 97.5], axis=0)
    return pd.DataFrame({
        'parameter': list(PARAMETERS),
        'mean': retained.mean(axis=0),
        'std': retained.std(axis=0, ddof=1) if len(retained) > 1 else np.zeros(3),
        'q025': q[0],
        'median': q[1],
        'q975': q[2],
    })


def verify_log_posteriors(chains: ChainSet, target, rng: np.random.Generator, n: int = 100) -> float:
    """
    Перевычисляет log π в n случайных сохранённых точках.

    Returns:
        float: максимальное относительное расхождение.
    """
    m, length, _ = chains.samples.shape
    idx = rng.integers(0, m * length, size=min(n, m * length))
    flat = chains.samples.reshape(-1, 3)
    stored = chains.log_posteriors.reshape(-1)
    scaled = scale_samples(flat[idx], target.scale)
    worst = 0.0
    for k, vec in zip(idx, scaled):
        fresh = target.log_posterior(vec)
        worst = max(worst, abs(fresh - stored[k]) / max(1.0, abs(stored[k])))
    return float(worst)
