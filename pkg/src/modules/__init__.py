# src/modules/__init__.py

"""
Модуль-«фабрика» для оптимизаторов и семплеров.

Функция get_optimizer(name, block) возвращает экземпляр глобального оптимизатора:
  - "sa" → SimulatedAnnealing
  - "ps" → ParticleSwarm
  - "ga" → GeneticAlgorithm

Аналогично, get_sampler(name, block) отдаёт MCMC-семплер ("dram", "dream").
Параметры метода собираются из значений по умолчанию settings.METHOD_DEFAULTS
и переданного блока (блок имеет приоритет).
"""

from typing import Any, Dict, Optional, Union

from pydantic import BaseModel

from src.config.settings import settings
from src.core.configs import DRAMConfig, DREAMConfig, GAConfig, IFConfig, PSConfig, SAConfig
from src.core.exceptions import ConfigurationError
from src.core.interfaces import OptimizerInterface, SamplerInterface
from src.modules.global_opt.annealing import SimulatedAnnealing
from src.modules.global_opt.genetic import GeneticAlgorithm
from src.modules.global_opt.swarm import ParticleSwarm
from src.modules.mcmc.dram import DRAMSampler
from src.modules.mcmc.dream import DREAMSampler

CONFIG_TYPES = {
    'sa': SAConfig,
    'ps': PSConfig,
    'ga': GAConfig,
    'if': IFConfig,
    'dram': DRAMConfig,
    'dream': DREAMConfig,
}

OPTIMIZERS = {
    'sa': SimulatedAnnealing,
    'ps': ParticleSwarm,
    'ga': GeneticAlgorithm,
}

SAMPLERS = {
    'dram': DRAMSampler,
    'dream': DREAMSampler,
}


def build_config(name: str, block: Optional[Union[Dict[str, Any], BaseModel]] = None) -> BaseModel:
    """Конфигурация метода: значения из config.yaml, поверх — переданный блок."""
    key = name.strip().lower()
    if key not in CONFIG_TYPES:
        raise ConfigurationError(f"Unsupported method: {name}")
    if isinstance(block, BaseModel):
        return block
    merged = dict(settings.METHOD_DEFAULTS.get(key, {}))
    merged.update(block or {})
    try:
        return CONFIG_TYPES[key](**merged)
    except ValueError as e:
        raise ConfigurationError(f"Некорректные параметры метода {key}: {e}") from e


def get_optimizer(name: str, block: Optional[Union[Dict[str, Any], BaseModel]] = None) -> OptimizerInterface:
    """
    Возвращает экземпляр глобального оптимизатора по имени:
      - "sa" → SimulatedAnnealing
      - "ps" → ParticleSwarm
      - "ga" → GeneticAlgorithm
    """
    key = name.strip().lower()
    if key not in OPTIMIZERS:
        raise ConfigurationError(f"Unsupported optimizer: {name}")
    return OPTIMIZERS[key](build_config(key, block))


def get_sampler(name: str, block: Optional[Union[Dict[str, Any], BaseModel]] = None) -> SamplerInterface:
    """
    Возвращает экземпляр семплера по имени:
      - "dram" → DRAMSampler
      - "dream" → DREAMSampler
    """
    key = name.strip().lower()
    if key not in SAMPLERS:
        raise ConfigurationError(f"Unsupported sampler: {name}")
    return SAMPLERS[key](build_config(key, block))
