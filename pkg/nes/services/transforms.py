"""
Преобразования системы в задачу оптимизации: динамическое отталкивание от
найденных корней и двухкритериальная форма MONES.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import erf

from nes.services.problem import ROOT_THRESHOLD, NesProblem

DEDUP_RADIUS = 0.01


@dataclass(frozen=True)
class RepulsionConfig:
    """Параметры отталкивания: t_max итераций, границы радиуса, крутизна rho."""

    t_max: int
    gamma_min: float
    gamma_max: float
    rho: float = 0.1
    zeta_cap: float = 1e12

    def __post_init__(self) -> None:
        if self.rho <= 0:
            raise ValueError(f"rho должно быть > 0, получено {self.rho}")
        if not 0 < self.gamma_min <= self.gamma_max:
            raise ValueError(
                f"нужно 0 < gamma_min <= gamma_max, получено "
                f"{self.gamma_min}, {self.gamma_max}"
            )
        if self.zeta_cap < 1:
            raise ValueError("zeta_cap должно быть >= 1")
        if self.t_max < 1:
            raise ValueError("t_max должно быть >= 1")

    @classmethod
    def for_bounds(
        cls, lower, upper, t_max: int, rho: float = 0.1
    ) -> "RepulsionConfig":
        """Радиусы по наименьшей ширине границ: (0.01, 0.5) * ширина."""
        gamma_min, gamma_max = gammas_for_ranges(np.asarray(upper) - np.asarray(lower))
        return cls(t_max=t_max, gamma_min=gamma_min, gamma_max=gamma_max, rho=rho)


def gamma_at(cfg: RepulsionConfig, t: int) -> float:
    """Радиус отталкивания на итерации t (квадратичное убывание)."""
    if not 0 <= t <= cfg.t_max:
        raise ValueError(f"t={t} вне [0, {cfg.t_max}]")
    lam = (1.0 - t / cfg.t_max) ** 2
    return cfg.gamma_min + lam * (cfg.gamma_max - cfg.gamma_min)


def gammas_for_ranges(ranges: Sequence[float]) -> Tuple[float, float]:
    """
    (gamma_min, gamma_max) для заданных ширин границ.

    Args:
        ranges: ширины границ по переменным пространства поиска.
    """
    width = float(np.min(ranges))
    return 0.01 * width, 0.5 * width


def default_gammas(
    problem: NesProblem, variables: Optional[Sequence[int]] = None
) -> Tuple[float, float]:
    """
    (gamma_min, gamma_max) = (0.01, 0.5) * min ширины границ.

    Args:
        variables: номера переменных (с 1) пространства поиска; по умолчанию все.
    """
    index = (
        np.arange(problem.n)
        if variables is None
        else np.asarray(variables, dtype=int) - 1
    )
    return gammas_for_ranges((problem.upper - problem.lower)[index])


def zeta_array(cfg: RepulsionConfig, distances, gamma: float) -> np.ndarray:
    """
    Множитель отталкивания: 1 / erf(rho * d) внутри радиуса, 1 снаружи.

    Args:
        distances: расстояния до корней архива (любой формы).
        gamma: текущий радиус отталкивания.

    Значение ограничено сверху ``cfg.zeta_cap``; при d = 0 получается cap.
    """
    d = np.asarray(distances, dtype=float)
    with np.errstate(divide="ignore"):
        inside = np.minimum(1.0 / np.abs(erf(cfg.rho * d)), cfg.zeta_cap)
    return np.where(d <= gamma, inside, 1.0)


def zeta(cfg: RepulsionConfig, d: float, gamma: float) -> float:
    """Скалярный вариант :func:`zeta_array`."""
    return float(zeta_array(cfg, d, gamma))


@dataclass
class ArchivedRoot:
    """Корень архива: точка поиска, полный вектор и квадрат невязки."""

    point: Tuple[float, ...]
    full: Tuple[float, ...]
    residual_sq: float


@dataclass
class RootArchive:
    """
    Найденные корни; попарные расстояния (в пространстве поиска) не меньше
    ``dedup_radius``.
    """

    dedup_radius: float = DEDUP_RADIUS
    threshold: float = ROOT_THRESHOLD
    roots: List[ArchivedRoot] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.roots)

    @property
    def points(self) -> np.ndarray:
        if not self.roots:
            return np.empty((0, 0))
        return np.array([r.point for r in self.roots], dtype=float)

    @property
    def full_vectors(self) -> List[Tuple[float, ...]]:
        return [r.full for r in self.roots]

    def distances(self, x) -> np.ndarray:
        """Расстояния от x до каждого корня архива."""
        if not self.roots:
            return np.empty(0)
        return cdist(np.atleast_2d(np.asarray(x, dtype=float)), self.points)[0]

    def try_add(self, x, residual_sq: float, full=None) -> bool:
        """
        Добавить корень, если невязка мала и рядом нет уже найденного.

        Args:
            x: точка в пространстве поиска.
            residual_sq: точный квадрат невязки полного вектора.
            full: полный вектор (после восстановления); по умолчанию x.

        Returns:
            True, если корень принят.
        """
        if not residual_sq < self.threshold:
            return False
        if self.roots and np.min(self.distances(x)) < self.dedup_radius:
            return False
        point = tuple(float(v) for v in np.asarray(x, dtype=float))
        full_vector = point if full is None else tuple(float(v) for v in full)
        self.roots.append(ArchivedRoot(point, full_vector, float(residual_sq)))
        return True


def archive_try_add(archive: RootArchive, x, residual_sq: float) -> bool:
    """Функциональная обёртка над :meth:`RootArchive.try_add`."""
    return archive.try_add(x, residual_sq)


def repulsion_factor(
    cfg: RepulsionConfig, population, archive: RootArchive, gamma: float
) -> np.ndarray:
    """Произведение zeta по всем корням архива для каждой строки популяции.

    Args:
        population: точки (строки) в пространстве поиска.
        gamma: текущий радиус отталкивания.
    """
    X = np.atleast_2d(np.asarray(population, dtype=float))
    if not archive.roots:
        return np.ones(X.shape[0])
    with np.errstate(over="ignore"):
        return np.prod(zeta_array(cfg, cdist(X, archive.points), gamma), axis=1)


def repulsion_value(
    cfg: RepulsionConfig, g_value: float, x, archive: RootArchive, t: int
) -> float:
    """R(x) = g(x) * prod zeta(d_j); с пустым архивом R = g."""
    if not archive.roots:
        return float(g_value)
    factor = repulsion_factor(cfg, x, archive, gamma_at(cfg, t))[0]
    return float(g_value * factor)


def mones_objectives(x_first: float, residuals: Sequence[float]) -> Tuple[float, float]:
    """(x + sum|f|, 1 - x + p * max|f|); образ корня лежит на y = 1 - x."""
    values = mones_objectives_batch(
        np.array([x_first], dtype=float),
        np.asarray(residuals, dtype=float).reshape(1, -1),
    )
    return float(values[0, 0]), float(values[0, 1])


def mones_objectives_batch(x_first, residuals) -> np.ndarray:
    """
    Векторный вариант :func:`mones_objectives`.

    Args:
        x_first: значения первой переменной поиска, форма (N,).
        residuals: невязки сохранённых уравнений, форма (N, p).

    Returns:
        Массив (N, 2) значений двух критериев.
    """
    x = np.asarray(x_first, dtype=float)
    R = np.abs(np.asarray(residuals, dtype=float))
    p = R.shape[1]
    if p == 0:
        beta1 = beta2 = np.zeros_like(x)
    else:
        beta1 = np.sum(R, axis=1)
        beta2 = p * np.max(R, axis=1)
    return np.column_stack([x + beta1, 1.0 - x + beta2])
