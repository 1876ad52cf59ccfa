# src/core/parallel.py

"""
parallel.py

Параллельная оценка функции на наборе точек через ThreadPoolExecutor.
Порядок результатов всегда совпадает с порядком точек, поэтому результат не зависит
от числа потоков.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from src.config.settings import settings

logger = logging.getLogger(__name__)


def evaluate_many(fn: Callable[[np.ndarray], float], points: Sequence,
                  workers: Optional[int] = None) -> np.ndarray:
    """
    Вычисляет fn для каждой точки.

    Args:
        fn: функция одной точки.
        points: массив (n × d) или список точек.
        workers: число потоков; по умолчанию settings.WORKERS. При 1 — без пула.

    Returns:
        np.ndarray: значения длины n в порядке points.
    """
    pts = [np.asarray(p, dtype=float) for p in points]
    n_workers = settings.WORKERS if workers is None else max(1, int(workers))
    if n_workers == 1 or len(pts) <= 1:
        return np.array([fn(p) for p in pts], dtype=float)

    with ThreadPoolExecutor(max_workers=min(n_workers, len(pts))) as pool:
        values = list(pool.map(fn, pts))
    return np.asarray(values, dtype=float)
