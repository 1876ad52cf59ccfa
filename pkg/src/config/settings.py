# src/config/settings.py

"""
settings.py

Конфигурация проекта:
  - Размер пула потоков для параллельной оценки целевой функции (WORKERS).
  - Логирование: каталог, уровень, число хранимых файлов ротации.
  - Размер LRU-кеша оптических толщин.
  - Каталог результатов по умолчанию.
  - Загрузка значений по умолчанию для методов из YAML (если файл есть).

Эти параметры влияют только на окружение выполнения и никогда не меняют
численные результаты: при одинаковом seed ответы совпадают при любом WORKERS.
"""

from pathlib import Path
from typing import Any, Dict

import yaml
# Pydantic v2: BaseSettings импорт из pydantic_settings
try:
    from pydantic_settings import BaseSettings, SettingsConfigDict
except ImportError as e:
    raise ImportError(
        "Для корректной работы нужно установить пакет 'pydantic-settings'. "
        "Выполните: pip install pydantic-settings"
    ) from e

from pydantic import Field


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        extra='ignore',  # незнакомые переменные окружения игнорируем
    )

    # 1) Параллельная оценка популяций
    WORKERS: int = Field(1, ge=1)

    # 2) Логирование
    LOG_DIR: str = 'logs'
    LOG_LEVEL: str = 'INFO'
    LOG_BACKUP_COUNT: int = Field(60, ge=0)

    # 3) Кеш оптических толщин (по позиции источника)
    PATH_CACHE_MAXSIZE: int = Field(4096, ge=0)

    # 4) Результаты экспериментов
    OUTPUT_DIR: str = 'results'

    # 5) Страховочный бюджет, если в StoppingCriteria не задан ни один бюджетный критерий
    DEFAULT_MAX_EVALUATIONS: int = Field(200_000, ge=1)

    # 6) Путь к YAML со значениями по умолчанию для методов
    CONFIG_YAML_PATH: str = 'config.yaml'

    # После инициализации будут загружены из YAML
    METHOD_DEFAULTS: Dict[str, Dict[str, Any]] = {}

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        if self.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(f"Неизвестный уровень логирования: {self.LOG_LEVEL}")

        # Загружаем значения по умолчанию для методов из config.yaml
        yaml_path = Path(self.CONFIG_YAML_PATH)
        if yaml_path.exists():
            data = yaml.safe_load(yaml_path.read_text(encoding='utf-8')) or {}
            methods = data.get('methods', {})
            if isinstance(methods, dict):
                self.METHOD_DEFAULTS = {
                    str(name).lower(): block for name, block in methods.items()
                    if isinstance(block, dict)
                }


# Единственный экземпляр настроек
settings = Settings()
