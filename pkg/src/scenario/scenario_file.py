# src/scenario/scenario_file.py

"""
scenario_file.py

Файл сценария (JSON) и файл наблюдений (CSV):
  - ScenarioDocument — схема документа с единицами измерения в именах полей
    (width_m, sigma_t_per_m, background_cps, …), полями schema_version и provenance;
  - load_scenario / save_scenario — чтение и запись (load → save → load без изменений);
  - scenario_fingerprint — sha256 канонического JSON сценария;
  - read_observations_csv / write_observations_csv — матрица отсчётов.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field

from src.core.exceptions import ConfigurationError
from src.core.models import (
    DEFAULT_FACE_AREA,
    DEFAULT_INTENSITY_SCALE,
    Building,
    Detector,
    DomainGeometry,
    FeasibleBox,
    ObservationSet,
    Point2,
    Scenario,
    SourceParams,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class DomainBlock(BaseModel):
    width_m: float
    height_m: float
    air_sigma_t_per_m: float = 0.0


class BuildingBlock(BaseModel):
    vertices_m: List[Tuple[float, float]]
    sigma_t_per_m: float = 0.0


class DetectorBlock(BaseModel):
    x_m: float
    y_m: float
    face_area_m2: float = DEFAULT_FACE_AREA
    efficiency: float = 0.62
    dwell_time_s: float = 1.0


class SourceBlock(BaseModel):
    x_m: float
    y_m: float
    s0_bq: float


class BoxBlock(BaseModel):
    """Нижняя и верхняя границы (x, м; y, м; S0, Бк)."""
    lower: Tuple[float, float, float]
    upper: Tuple[float, float, float]


class ScenarioDocument(BaseModel):
    schema_version: int = SCHEMA_VERSION
    name: str = 'scenario'
    provenance: Optional[str] = None
    seed: Optional[int] = None
    domain: DomainBlock
    buildings: List[BuildingBlock] = Field(default_factory=list)
    detectors: List[DetectorBlock]
    background_cps: float = 300.0
    feasible_box: BoxBlock
    intensity_scale_bq: float = DEFAULT_INTENSITY_SCALE
    true_source: Optional[SourceBlock] = None

    def to_scenario(self) -> Scenario:
        geometry = DomainGeometry(
            bounds=(self.domain.width_m, self.domain.height_m),
            buildings=tuple(
                Building(vertices=tuple(Point2(x=x, y=y) for x, y in b.vertices_m), sigma_t=b.sigma_t_per_m)
                for b in self.buildings
            ),
            air_sigma_t=self.domain.air_sigma_t_per_m,
        )
        detectors = tuple(
            Detector(position=Point2(x=d.x_m, y=d.y_m), face_area=d.face_area_m2,
                     efficiency=d.efficiency, dwell_time=d.dwell_time_s)
            for d in self.detectors
        )
        truth = None
        if self.true_source is not None:
            truth = SourceParams(x=self.true_source.x_m, y=self.true_source.y_m, s0=self.true_source.s0_bq)
        return Scenario(
            name=self.name,
            geometry=geometry,
            detectors=detectors,
            background=self.background_cps,
            feasible_box=FeasibleBox(lower=self.feasible_box.lower, upper=self.feasible_box.upper),
            intensity_scale=self.intensity_scale_bq,
            true_source=truth,
            seed=self.seed,
        )

    @classmethod
    def from_scenario(cls, scn: Scenario, provenance: Optional[str] = None) -> 'ScenarioDocument':
        g = scn.geometry
        truth = None
        if scn.true_source is not None:
            truth = SourceBlock(x_m=scn.true_source.x, y_m=scn.true_source.y, s0_bq=scn.true_source.s0)
        return cls(
            name=scn.name,
            provenance=provenance,
            seed=scn.seed,
            domain=DomainBlock(width_m=g.bounds[0], height_m=g.bounds[1], air_sigma_t_per_m=g.air_sigma_t),
            buildings=[
                BuildingBlock(vertices_m=[(p.x, p.y) for p in b.vertices], sigma_t_per_m=b.sigma_t)
                for b in g.buildings
            ],
            detectors=[
                DetectorBlock(x_m=d.position.x, y_m=d.position.y, face_area_m2=d.face_area,
                              efficiency=d.efficiency, dwell_time_s=d.dwell_time)
                for d in scn.detectors
            ],
            background_cps=scn.background,
            feasible_box=BoxBlock(lower=scn.feasible_box.lower, upper=scn.feasible_box.upper),
            intensity_scale_bq=scn.intensity_scale,
            true_source=truth,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode='json'), sort_keys=True, separators=(',', ':'))


def load_document(path: Path) -> ScenarioDocument:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Файл сценария не найден: {path}")
    doc = ScenarioDocument.model_validate_json(path.read_text(encoding='utf-8'))
    if doc.schema_version != SCHEMA_VERSION:
        raise ConfigurationError(f"Неподдерживаемая версия схемы сценария: {doc.schema_version}")
    return doc


def load_scenario(path: Path) -> Scenario:
    scn = load_document(path).to_scenario()
    logger.info(f"[scenario] Загружен сценарий '{scn.name}': зданий {len(scn.geometry.buildings)}, "
                f"детекторов {len(scn.detectors)}")
    return scn


def save_scenario(scn: Scenario, path: Path, provenance: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = ScenarioDocument.from_scenario(scn, provenance)
    path.write_text(json.dumps(doc.model_dump(mode='json'), indent=2) + '\n', encoding='utf-8')
    logger.info(f"[scenario] Сценарий сохранён: {path}")
    return path


def scenario_fingerprint(scn: Scenario) -> str:
    """sha256 канонического JSON сценария (без provenance)."""
    return hashlib.sha256(ScenarioDocument.from_scenario(scn).canonical_json().encode('utf-8')).hexdigest()


def write_observations_csv(obs: ObservationSet, path: Path) -> Path:
    """Строки — детекторы, столбцы rep_1 … rep_n."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = obs.as_array()
    df = pd.DataFrame(arr, columns=[f"rep_{j + 1}" for j in range(arr.shape[1])])
    df.insert(0, 'detector', range(arr.shape[0]))
    df.to_csv(path, index=False)
    return path


def read_observations_csv(path: Path) -> ObservationSet:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Файл наблюдений не найден: {path}")
    df = pd.read_csv(path).sort_values('detector')
    reps = [c for c in df.columns if c.startswith('rep_')]
    return ObservationSet.from_array(df[reps].to_numpy())
