import os

import numpy as np

from src.core.models import Building

REFERENCE_CITY = os.path.join(os.path.dirname(__file__), '..', 'data', 'reference_city.json')


def square(x0, y0, x1, y1, sigma=0.0):
    return Building(vertices=((x0, y0), (x1, y0), (x1, y1), (x0, y1)), sigma_t=sigma)


class DummyRng:
    """
    Подмена генератора: uniform(low, high, size) возвращает верхнюю границу
    для массивов и середину отрезка для скаляра.
    """
    def uniform(self, low=0.0, high=1.0, size=None):
        if size is None:
            return 0.5 * (low + high)
        return np.full(size, high, dtype=float)
