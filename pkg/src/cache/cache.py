# src/cache/cache.py

"""
cache.py

Потокобезопасный in-memory LRU-кеш:
  - хранит оптические толщины лучей «источник → детекторы» по позиции источника;
  - поддерживает декоратор для кеширования вызовов функции.

Толщина зависит только от (x, y), поэтому шаги, меняющие лишь интенсивность,
не пересчитывают трассировку.
"""

import threading
from collections import OrderedDict
from functools import wraps
from typing import Any, Hashable, Optional


class LRUCache:
    """
    Кеш с ограничением по размеру и вытеснением наименее недавно использованных записей.

    Attributes:
        maxsize (int): максимальное число элементов (0 — кеш отключён).
        hits (int), misses (int): статистика обращений.
    """
    def __init__(self, maxsize: int = 128):
        self.maxsize = maxsize
        self.hits = 0
        self.misses = 0
        self._cache: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._cache)

    def get(self, key: Hashable) -> Optional[Any]:
        """Получить значение из кеша или None, если его нет."""
        with self._lock:
            if key in self._cache:
                # Обновляем порядок для LRU
                self._cache.move_to_end(key)
                self.hits += 1
                return self._cache[key]
            self.misses += 1
            return None

    def set(self, key: Hashable, value: Any) -> None:
        """Положить значение в кеш."""
        if self.maxsize <= 0:
            return
        with self._lock:
            if key in self._cache:
                self._cache.pop(key)
            elif len(self._cache) >= self.maxsize:
                self._cache.popitem(last=False)
            self._cache[key] = value

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()
            self.hits = 0
            self.misses = 0

    def decorator(self, fn):
        """
        Декоратор для кеширования вызовов функции с хешируемыми аргументами.

        Usage:
            cache = LRUCache(maxsize=256)

            @cache.decorator
            def expensive_func(...):
                ...
        """
        @wraps(fn)
        def wrapped(*args, **kwargs):
            key = (fn.__name__, args, frozenset(kwargs.items()))
            result = self.get(key)
            if result is not None:
                return result
            result = fn(*args, **kwargs)
            self.set(key, result)
            return result

        return wrapped
