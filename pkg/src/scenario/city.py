# src/scenario/city.py

"""
city.py

Генератор синтетического города:
  - здания — прямоугольники (часть повёрнута) внутри домена, с зазором между собой;
  - сечения зданий задаются через assign_cross_sections;
  - детекторы — равномерно по улицам с минимальным попарным расстоянием;
  - истинный источник — на улице, не ближе source_clearance к детекторам.
При фиксированном seed результат (и файл сценария) полностью воспроизводим.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from shapely import affinity
from shapely.geometry import Point, Polygon, box
from shapely.ops import unary_union

from src.core.exceptions import CityGenerationError, InvalidInputError
from src.core.models import (
    DEFAULT_INTENSITY_SCALE,
    Building,
    Detector,
    DomainGeometry,
    FeasibleBox,
    Point2,
    Scenario,
    SourceParams,
)
from src.transport.response import assign_cross_sections

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 10_000


def _rectangle(rng: np.random.Generator, bounds: Tuple[float, float], size_range: Tuple[float, float],
               rotated_fraction: float, margin: float) -> Polygon:
    w, h = rng.uniform(size_range[0], size_range[1], size=2)
    cx = rng.uniform(margin, bounds[0] - margin)
    cy = rng.uniform(margin, bounds[1] - margin)
    rect = box(cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2)
    if rng.uniform() < rotated_fraction:
        rect = affinity.rotate(rect, rng.uniform(0.0, 90.0), origin='centroid')
    # Округление делает файл сценария компактным; зазор между зданиями его покрывает
    return Polygon([(round(x, 3), round(y, 3)) for x, y in rect.exterior.coords[:-1]])


def place_buildings(bounds: Tuple[float, float], n_buildings: int, rng: np.random.Generator,
                    size_range: Tuple[float, float] = (8.0, 30.0), rotated_fraction: float = 0.3,
                    gap: float = 1.0, margin: float = 1.0) -> List[Polygon]:
    """
    Размещает n_buildings непересекающихся прямоугольников.

    Raises:
        CityGenerationError: не удалось разместить все здания за MAX_ATTEMPTS попыток.
    """
    inner = box(margin, margin, bounds[0] - margin, bounds[1] - margin)
    placed: List[Polygon] = []
    attempts = 0
    while len(placed) < n_buildings:
        if attempts >= MAX_ATTEMPTS:
            raise CityGenerationError(
                f"удалось разместить только {len(placed)} из {n_buildings} зданий за {MAX_ATTEMPTS} попыток",
                placed=len(placed),
            )
        attempts += 1
        poly = _rectangle(rng, bounds, size_range, rotated_fraction, margin)
        if not inner.contains(poly):
            continue
        if any(poly.distance(other) < gap for other in placed):
            continue
        placed.append(poly)
    logger.debug(f"[scenario] Размещено {len(placed)} зданий за {attempts} попыток")
    return placed


def _street_points(rng: np.random.Generator, bounds: Tuple[float, float], blocked, count: int,
                   spacing: float, clearance: float, taken: Sequence[Point] = (),
                   what: str = 'детекторов') -> List[Point]:
    points: List[Point] = []
    for _ in range(MAX_ATTEMPTS):
        if len(points) == count:
            break
        p = Point(rng.uniform(0.0, bounds[0]), rng.uniform(0.0, bounds[1]))
        if blocked is not None and blocked.distance(p) < clearance:
            continue
        if any(p.distance(q) < spacing for q in list(taken) + points):
            continue
        points.append(p)
    if len(points) < count:
        raise CityGenerationError(f"не удалось расставить {count} {what}: размещено {len(points)}",
                                  placed=len(points))
    return points


def generate_city(bounds: Tuple[float, float], n_buildings: int, seed: int, n_detectors: int = 10,
                  mfp_range: Tuple[float, float] = (1.0, 5.0), air_sigma_t: float = 9.3e-3,
                  background: float = 300.0, source_intensity: Optional[float] = 3.219e9,
                  intensity_range: Tuple[float, float] = (5e8, 5e10),
                  intensity_scale: float = DEFAULT_INTENSITY_SCALE,
                  detector_spacing: Optional[float] = None, name: str = 'synthetic_city') -> Scenario:
    """
    Синтетический городской сценарий.

    Args:
        bounds: размеры домена (X, Y), м.
        n_buildings: число зданий (0 — свободное пространство).
        seed: зерно генератора Philox.
        detector_spacing: минимальное расстояние между детекторами;
            по умолчанию 0.5·√(XY / n_detectors).
        source_intensity: интенсивность истинного источника; None — без источника.

    Raises:
        InvalidInputError: n_buildings < 0 или n_detectors < 1.
        CityGenerationError: упаковка не удалась.
    """
    if n_buildings < 0:
        raise InvalidInputError("число зданий не может быть отрицательным")
    if n_detectors < 1:
        raise InvalidInputError("нужен хотя бы один детектор")
    rng = np.random.Generator(np.random.Philox(seed))

    polys = place_buildings(bounds, n_buildings, rng)
    buildings = [Building(vertices=tuple(Point2(x=x, y=y) for x, y in p.exterior.coords[:-1])) for p in polys]
    if buildings:
        buildings = assign_cross_sections(buildings, mfp_range, rng)
    geometry = DomainGeometry(bounds=bounds, buildings=tuple(buildings), air_sigma_t=air_sigma_t)

    blocked = unary_union(polys) if polys else None
    spacing = detector_spacing if detector_spacing is not None else 0.5 * np.sqrt(bounds[0] * bounds[1] / n_detectors)
    det_points = _street_points(rng, bounds, blocked, n_detectors, spacing, clearance=1.0)
    detectors = tuple(Detector(position=Point2(x=round(p.x, 3), y=round(p.y, 3))) for p in det_points)

    truth = None
    if source_intensity is not None:
        (sp,) = _street_points(rng, bounds, blocked, 1, spacing=5.0, clearance=1.0,
                               taken=det_points, what='источников')
        truth = SourceParams(x=round(sp.x, 3), y=round(sp.y, 3), s0=source_intensity)

    scenario = Scenario(
        name=name,
        geometry=geometry,
        detectors=detectors,
        background=background,
        feasible_box=FeasibleBox(lower=(0.0, 0.0, intensity_range[0]),
                                 upper=(float(bounds[0]), float(bounds[1]), intensity_range[1])),
        intensity_scale=intensity_scale,
        true_source=truth,
        seed=seed,
    )
    logger.info(f"[scenario] Сгенерирован город {bounds[0]}×{bounds[1]} м: зданий {len(buildings)}, "
                f"детекторов {len(detectors)}, seed={seed}")
    return scenario
