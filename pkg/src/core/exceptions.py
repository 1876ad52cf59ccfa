# src/core/exceptions.py

"""
exceptions.py

Иерархия исключений проекта. Все ошибки библиотеки наследуются от SourceLocError,
а «пользовательские» (неверный ввод, конфигурация) — ещё и от ValueError, чтобы их
можно было ловить привычным образом.
"""


class SourceLocError(Exception):
    """Базовое исключение проекта."""


class InvalidInputError(SourceLocError, ValueError):
    """Вырожденные входные данные: нулевой отрезок, полигон без площади и т.п."""


class SingularConfigurationError(SourceLocError, ValueError):
    """Источник совпадает с детектором (расстояние меньше 1e-6 м)."""


class ConfigurationError(SourceLocError, ValueError):
    """Некорректная конфигурация метода или эксперимента."""


class CityGenerationError(SourceLocError, RuntimeError):
    """
    Не удалось разместить все здания при генерации города.

    Attributes:
        placed (int): сколько зданий удалось разместить до отказа.
    """

    def __init__(self, message: str, placed: int):
        super().__init__(message)
        self.placed = placed


class ReportError(SourceLocError, ValueError):
    """Пустой список входных файлов или результаты разных сценариев."""
