"""
Индикаторы качества: IGD и NOF на образах (x_r, 1 - x_r), RR, SR, QR.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from nes.services.exceptions import SuiteError
from nes.services.problem import NesProblem, residual_sq_batch
from nes.services.reduction import ReductionScheme
from nes.services.transforms import DEDUP_RADIUS

FRONT_SIZE = 100


@dataclass
class IndicatorReport:
    """Показатели одного прогона; None, если показатель не определён."""

    igd: Optional[float] = None
    nof: Optional[float] = None
    rr: Optional[float] = None
    sr: Optional[float] = None
    qr: Optional[float] = None
    roots_found: Optional[int] = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Aggregate:
    """Сводка показателя по прогонам."""

    best: float
    mean: float
    worst: float
    std: float


def images(x_first) -> np.ndarray:
    """Образы (x, 1 - x) значений первой переменной поиска, форма (N, 2)."""
    x = np.asarray(x_first, dtype=float).reshape(-1)
    return np.column_stack([x, 1.0 - x])


def _min_distances(ip, ip_star) -> np.ndarray:
    """Для каждой точки IP* расстояние до ближайшей точки IP."""
    star = np.asarray(ip_star, dtype=float).reshape(-1, 2)
    if star.shape[0] == 0:
        raise ValueError("эталонное множество IP* пусто")
    points = np.asarray(ip, dtype=float).reshape(-1, 2)
    if points.shape[0] == 0:
        return np.full(star.shape[0], np.inf)
    diff = star[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=2)).min(axis=1)


def igd(ip, ip_star) -> float:
    """
    Среднее по IP* расстояние до ближайшей точки IP; inf при пустом IP.

    Args:
        ip: образы найденного множества, форма (N, 2).
        ip_star: эталонные образы, форма (M, 2), M >= 1.
    """
    return float(np.mean(_min_distances(ip, ip_star)))


def nof(ip, ip_star, epsilon: float) -> int:
    """
    Число точек IP*, у которых в IP есть точка не дальше epsilon.

    Args:
        ip: образы найденного множества.
        ip_star: эталонные образы.
        epsilon: порог близости задачи, > 0.
    """
    if epsilon <= 0:
        raise ValueError("epsilon должно быть > 0")
    return int(np.count_nonzero(_min_distances(ip, ip_star) <= epsilon))


def first_search_variable(
    problem: NesProblem, scheme: Optional[ReductionScheme]
) -> int:
    """Номер (с 1) переменной x_r: первая основная переменная."""
    return scheme.core_vars[0] if scheme is not None else 1


def reference_front(
    problem: NesProblem,
    scheme: Optional[ReductionScheme] = None,
    count: int = FRONT_SIZE,
    roots: Optional[Sequence[Sequence[float]]] = None,
) -> np.ndarray:
    """
    Образы известных корней, либо ``count`` равномерных точек по границам x_r
    для систем с бесконечным числом корней.
    """
    if count < 1:
        raise ValueError("count должно быть >= 1")
    r = first_search_variable(problem, scheme)
    if problem.finite_roots or roots is not None:
        known = list(roots if roots is not None else problem.known_roots)
        if not known:
            raise SuiteError(f"{problem.name}: корни неизвестны")
        return images([root[r - 1] for root in known])
    if problem.nor != "infinite":
        raise SuiteError(f"{problem.name}: число корней неизвестно")
    lower, upper = problem.bounds[r - 1]
    return images(np.linspace(lower, upper, count))


def population_images(search_population) -> np.ndarray:
    """Образы особей: первая переменная пространства поиска."""
    X = np.atleast_2d(np.asarray(search_population, dtype=float))
    if X.size == 0:
        return np.empty((0, 2))
    return images(X[:, 0])


def match_roots(found, known, radius: float = DEDUP_RADIUS) -> int:
    """
    Число известных корней, рядом с которыми (< radius) есть найденный.

    Args:
        found: найденные корни (полные векторы).
        known: эталонные корни той же размерности.
        radius: радиус совпадения.
    """
    F = np.asarray(found, dtype=float)
    K = np.asarray(known, dtype=float)
    if F.size == 0 or K.size == 0:
        return 0
    distances = cdist(K.reshape(len(K), -1), F.reshape(len(F), -1))
    return int(np.count_nonzero(distances.min(axis=1) < radius))


def rr(found_counts: Sequence[int], nor: int) -> float:
    """
    Доля найденных корней по всем прогонам.

    Args:
        found_counts: число найденных корней в каждом прогоне.
        nor: число корней задачи.
    """
    if nor < 1 or not found_counts:
        raise ValueError("нужно nor >= 1 и хотя бы один прогон")
    return float(sum(found_counts)) / (nor * len(found_counts))


def sr(success_flags: Sequence[bool]) -> float:
    """Доля прогонов, нашедших все корни."""
    if not success_flags:
        raise ValueError("нужен хотя бы один прогон")
    return sum(1 for flag in success_flags if flag) / len(success_flags)


def successes(found_counts: Iterable[int], nor: int) -> List[bool]:
    """Флаги успеха: прогон нашёл все nor корней."""
    return [count == nor for count in found_counts]


def qr(problem: NesProblem, roots_found) -> float:
    """Средняя сумма квадратов невязок найденных корней; NaN при пустом списке."""
    roots = np.asarray(roots_found, dtype=float)
    if roots.size == 0:
        return math.nan
    return float(np.mean(residual_sq_batch(problem, roots.reshape(-1, problem.n))))


def distinct_roots(
    problem: NesProblem,
    population,
    threshold: float = 1e-5,
    radius: float = DEDUP_RADIUS,
) -> np.ndarray:
    """
    Корни среди полных векторов популяции: residual_sq < threshold, в
    границах, попарно не ближе radius (жадно, в порядке популяции).
    """
    X = np.atleast_2d(np.asarray(population, dtype=float))
    if X.size == 0:
        return np.empty((0, problem.n))
    ok = (residual_sq_batch(problem, X) < threshold) & problem.in_bounds_mask(X)
    kept: List[np.ndarray] = []
    for x in X[ok]:
        if all(np.linalg.norm(x - k) >= radius for k in kept):
            kept.append(x)
    return np.array(kept).reshape(-1, problem.n)


def aggregate(values: Sequence[float], maximize: bool = False) -> Aggregate:
    """best/mean/worst/std (std генеральная); NaN игнорируются."""
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return Aggregate(math.nan, math.nan, math.nan, math.nan)
    best, worst = (arr.max(), arr.min()) if maximize else (arr.min(), arr.max())
    return Aggregate(float(best), float(arr.mean()), float(worst), float(arr.std()))


def root_count_summary(counts: Sequence[int]) -> Aggregate:
    """Сводка числа найденных корней (больше лучше)."""
    return aggregate(counts, maximize=True)
