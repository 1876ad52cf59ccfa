# src/geometry/polygons.py

"""
polygons.py

Трассировка лучей через полигональный домен:
  - segment_polygon_clip: параметрические интервалы отрезка внутри здания;
  - point_in_polygon: правило чёт-нечет, точки на границе (1e-9) считаются внутренними;
  - trace_path / optical_depth: сегменты пути (длина, сечение) и оптическая толщина;
  - optical_depths: векторизованный расчёт толщин от одного источника до многих точек;
  - find_layout_problems / validate_geometry: проверка зданий через shapely.

Пересечения ищутся сразу по всем рёбрам всех зданий. Ребро пересекает прямую луча,
если его концы лежат по разные стороны в полуоткрытом смысле ((s > 0) != (s' > 0)).
Пересечения одного здания, упорядоченные вдоль прямой, разбиваются на пары по
чётности, поэтому невыпуклые полигоны поддерживаются без разбиения.
Отрезок всегда обходится от лексикографически меньшего конца, так что
толщина в прямом и обратном направлениях совпадает.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
from shapely import STRtree

from src.core.exceptions import InvalidInputError
from src.core.models import Building, DomainGeometry, PathSegments, Point2

logger = logging.getLogger(__name__)

TOL = 1e-9


@dataclass(frozen=True)
class EdgeIndex:
    """Рёбра всех зданий в виде массивов numpy."""
    starts: np.ndarray      # (E, 2)
    ends: np.ndarray        # (E, 2)
    building: np.ndarray    # (E,) индекс здания ребра
    sigma: np.ndarray       # (B,) сечения зданий
    air_sigma: float = 0.0

    @property
    def n_buildings(self) -> int:
        return int(self.sigma.shape[0])


def _index_from_buildings(buildings: Sequence[Building], air_sigma: float = 0.0) -> EdgeIndex:
    starts, ends, owner = [], [], []
    for idx, b in enumerate(buildings):
        c = b.coords
        starts.append(c)
        ends.append(np.roll(c, -1, axis=0))
        owner.append(np.full(len(c), idx, dtype=np.int64))
    if not starts:
        empty = np.zeros((0, 2))
        return EdgeIndex(empty, empty, np.zeros(0, dtype=np.int64), np.zeros(0), air_sigma)
    return EdgeIndex(
        starts=np.vstack(starts),
        ends=np.vstack(ends),
        building=np.concatenate(owner),
        sigma=np.array([b.sigma_t for b in buildings], dtype=float),
        air_sigma=air_sigma,
    )


@lru_cache(maxsize=32)
def build_edge_index(geom: DomainGeometry) -> EdgeIndex:
    """Индекс рёбер геометрии (кешируется по самой геометрии)."""
    return _index_from_buildings(geom.buildings, geom.air_sigma_t)


def _canonical(p0: np.ndarray, p1: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Упорядочивает концы отрезков лексикографически; возвращает и маску перестановки."""
    swap = (p1[:, 0] < p0[:, 0]) | ((p1[:, 0] == p0[:, 0]) & (p1[:, 1] < p0[:, 1]))
    a = np.where(swap[:, None], p1, p0)
    b = np.where(swap[:, None], p0, p1)
    return a, b, swap


def _crossing_intervals(p0: np.ndarray, p1: np.ndarray, index: EdgeIndex):
    """
    Интервалы внутри зданий для набора отрезков p0[k] → p1[k].

    Returns:
        (rows, owners, lo, hi): номер отрезка, индекс здания и границы интервала
        в параметре канонического отрезка (уже обрезаны до [0, 1]).
    """
    empty = (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0))
    if index.starts.shape[0] == 0:
        return empty

    d = p1 - p0                                        # (n, 2)
    ax = index.starts[None, :, 0] - p0[:, None, 0]     # (n, E)
    ay = index.starts[None, :, 1] - p0[:, None, 1]
    bx = index.ends[None, :, 0] - p0[:, None, 0]
    by = index.ends[None, :, 1] - p0[:, None, 1]
    sa = d[:, None, 0] * ay - d[:, None, 1] * ax
    sb = d[:, None, 0] * by - d[:, None, 1] * bx
    crossing = (sa > 0) != (sb > 0)
    if not crossing.any():
        return empty

    rows, cols = np.nonzero(crossing)
    ex = (index.ends[cols, 0] - index.starts[cols, 0])
    ey = (index.ends[cols, 1] - index.starts[cols, 1])
    num = ax[rows, cols] * ey - ay[rows, cols] * ex
    den = d[rows, 0] * ey - d[rows, 1] * ex
    t = num / den
    owners = index.building[cols]

    order = np.lexsort((t, owners, rows))
    rows, owners, t = rows[order], owners[order], t[order]
    # Для каждого (отрезок, здание) число пересечений чётно: пары идут подряд
    lo = np.clip(t[0::2], 0.0, 1.0)
    hi = np.clip(t[1::2], 0.0, 1.0)
    return rows[0::2], owners[0::2], lo, hi


def _as_array(p) -> np.ndarray:
    if isinstance(p, Point2):
        return p.as_array()
    return np.asarray(p, dtype=float)


def _merge(intervals: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for lo, hi in sorted(intervals):
        if hi - lo <= TOL:
            continue
        if merged and lo - merged[-1][1] < TOL:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def segment_polygon_clip(p0: Point2, p1: Point2, b: Building) -> List[Tuple[float, float]]:
    """
    Части отрезка p0 → p1 внутри здания b.

    Returns:
        List[Tuple[float, float]]: непересекающиеся интервалы [t_in, t_out] ⊂ [0, 1]
        по возрастанию; пустой список, если пересечения нет.

    Raises:
        InvalidInputError: если p0 == p1.
    """
    a0, a1 = _as_array(p0), _as_array(p1)
    if np.array_equal(a0, a1):
        raise InvalidInputError("вырожденный отрезок: p0 == p1")
    c0, c1, swap = _canonical(a0[None, :], a1[None, :])
    _, _, lo, hi = _crossing_intervals(c0, c1, _index_from_buildings([b]))
    pairs = list(zip(lo.tolist(), hi.tolist()))
    if swap[0]:
        pairs = [(1.0 - h, 1.0 - l) for l, h in pairs]
    return _merge(pairs)


def point_in_polygon(p: Point2, b: Building) -> bool:
    """Принадлежность точки полигону (чёт-нечет, граница с допуском 1e-9 — внутри)."""
    q = _as_array(p)
    a = b.coords
    e = np.roll(a, -1, axis=0) - a
    w = q - a
    seg_len2 = np.einsum('ij,ij->i', e, e)
    u = np.clip(np.einsum('ij,ij->i', w, e) / seg_len2, 0.0, 1.0)
    dist = np.hypot(w[:, 0] - u * e[:, 0], w[:, 1] - u * e[:, 1])
    if np.any(dist <= TOL):
        return True

    y0, y1 = a[:, 1], np.roll(a[:, 1], -1)
    straddle = (y0 > q[1]) != (y1 > q[1])
    if not straddle.any():
        return False
    x0, x1 = a[straddle, 0], np.roll(a[:, 0], -1)[straddle]
    ys0, ys1 = y0[straddle], y1[straddle]
    x_cross = x0 + (q[1] - ys0) * (x1 - x0) / (ys1 - ys0)
    return bool(np.count_nonzero(x_cross > q[0]) % 2 == 1)


def trace_path(geom: DomainGeometry, src: Point2, dst: Point2) -> PathSegments:
    """
    Разбивает отрезок src → dst на сегменты внутри зданий и воздушные промежутки.

    Raises:
        InvalidInputError: если src == dst.
    """
    a0, a1 = _as_array(src), _as_array(dst)
    if np.array_equal(a0, a1):
        raise InvalidInputError("вырожденный путь: src == dst")
    total = float(np.hypot(*(a1 - a0)))
    index = build_edge_index(geom)

    c0, c1, swap = _canonical(a0[None, :], a1[None, :])
    _, owners, lo, hi = _crossing_intervals(c0, c1, index)
    pieces = []
    for owner, l, h in zip(owners.tolist(), lo.tolist(), hi.tolist()):
        if swap[0]:
            l, h = 1.0 - h, 1.0 - l
        if h - l > TOL:
            pieces.append((l, h, float(index.sigma[owner])))
    pieces.sort()

    segments: List[Tuple[float, float]] = []
    cursor = 0.0
    for l, h, sigma in pieces:
        l = max(l, cursor)
        if l - cursor > TOL:
            segments.append(((l - cursor) * total, geom.air_sigma_t))
        if h > l:
            segments.append(((h - l) * total, sigma))
            cursor = h
    if 1.0 - cursor > TOL or not segments:
        segments.append(((1.0 - cursor) * total, geom.air_sigma_t))

    length_sum = sum(s[0] for s in segments)
    return PathSegments(segments=tuple(segments), total_length=length_sum if segments else total)


def optical_depth(path: PathSegments) -> float:
    """Σ длина × сечение по сегментам пути."""
    return float(sum(length * sigma for length, sigma in path.segments))


def optical_depths(index: EdgeIndex, src, targets: np.ndarray) -> np.ndarray:
    """
    Оптические толщины от точки src до каждой точки из targets (n × 2) за один проход.
    Совпадающие с src цели получают толщину 0.
    """
    s = _as_array(src)
    pts = np.asarray(targets, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    lengths = np.hypot(pts[:, 0] - s[0], pts[:, 1] - s[1])

    p0 = np.broadcast_to(s, pts.shape).copy()
    c0, c1, _ = _canonical(p0, pts)
    rows, owners, lo, hi = _crossing_intervals(c0, c1, index)

    inside = np.zeros(n)
    weighted = np.zeros(n)
    if rows.size:
        frac = np.maximum(hi - lo, 0.0)
        inside = np.bincount(rows, weights=frac, minlength=n)
        weighted = np.bincount(rows, weights=frac * index.sigma[owners], minlength=n)
    air = np.clip(1.0 - inside, 0.0, 1.0) * index.air_sigma
    return lengths * (weighted + air)


def find_layout_problems(bounds: Tuple[float, float], buildings: Sequence[Building]) -> List[str]:
    """
    Проверяет, что здания лежат в границах домена и попарно не пересекаются по внутренности.

    Returns:
        List[str]: описания найденных проблем (пусто, если всё в порядке).
    """
    problems: List[str] = []
    width, height = bounds
    polys = [b.to_shapely() for b in buildings]
    for idx, poly in enumerate(polys):
        if not poly.is_valid:
            problems.append(f"здание #{idx}: некорректный полигон")
        minx, miny, maxx, maxy = poly.bounds
        if minx < 0 or miny < 0 or maxx > width or maxy > height:
            problems.append(f"здание #{idx} выходит за границы домена")
    if len(polys) > 1:
        tree = STRtree(polys)
        left, right = tree.query(polys, predicate='intersects')
        for i, j in zip(left.tolist(), right.tolist()):
            if i >= j:
                continue
            overlap = polys[i].intersection(polys[j]).area
            if overlap > TOL * min(polys[i].area, polys[j].area):
                problems.append(f"здания #{i} и #{j} пересекаются")
    return problems


def validate_geometry(geom: DomainGeometry) -> None:
    """
    Raises:
        InvalidInputError: если найдены проблемы в расположении зданий.
    """
    problems = find_layout_problems(geom.bounds, geom.buildings)
    if problems:
        raise InvalidInputError("; ".join(problems))
