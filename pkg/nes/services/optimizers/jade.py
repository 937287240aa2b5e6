"""
JADE: адаптивная дифференциальная эволюция (current-to-pbest/1, внешний
архив вытесненных особей, самонастройка CR и F).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from nes.services.optimizers.bounds import check_bounds, reflect, uniform

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], np.ndarray]
# (популяция, сырые значения) -> значения для отбора
FitnessTransform = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class DeParams:
    np: int = 100
    p_best: float = 0.05
    c: float = 0.1
    mu_cr: float = 0.5
    mu_f: float = 0.5
    archive_size: Optional[int] = None

    def __post_init__(self) -> None:
        if self.np < 4:
            raise ValueError("размер популяции должен быть >= 4")
        if not 0 < self.p_best <= 1:
            raise ValueError("p_best должно быть в (0, 1]")
        if not 0 <= self.c <= 1:
            raise ValueError("c должно быть в [0, 1]")
        if not (0 <= self.mu_cr <= 1 and 0 <= self.mu_f <= 1):
            raise ValueError("mu_cr и mu_f должны быть в [0, 1]")
        if self.archive_size is None:
            self.archive_size = self.np


@dataclass
class JadeResult:
    population: np.ndarray
    fitness: np.ndarray
    best_x: np.ndarray
    best_f: float
    trace: List[float] = field(default_factory=list)
    evaluations: int = 0


class Jade:
    """
    Один экземпляр — один прогон. ``objective`` получает массив (N, d)
    и возвращает N значений; NaN считается +inf.
    """

    def __init__(
        self,
        objective: Objective,
        lower,
        upper,
        params: Optional[DeParams] = None,
        seed=None,
        fitness_transform: Optional[FitnessTransform] = None,
    ) -> None:
        self.objective = objective
        self.lower, self.upper = check_bounds(lower, upper)
        self.params = params or DeParams()
        self.rng = np.random.default_rng(seed)
        self.fitness_transform = fitness_transform
        self.evaluations = 0
        self.generation = 0
        self.trace: List[float] = []
        self.population = np.empty((0, self.lower.size))
        self.raw = np.empty(0)
        self.archive = np.empty((0, self.lower.size))
        self.mu_cr = self.params.mu_cr
        self.mu_f = self.params.mu_f

    @property
    def dim(self) -> int:
        return self.lower.size

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        values = np.asarray(self.objective(X), dtype=float)
        self.evaluations += X.shape[0]
        return np.where(np.isnan(values), np.inf, values)

    def fitness(self, X: np.ndarray, raw: np.ndarray) -> np.ndarray:
        if self.fitness_transform is None:
            return raw
        values = np.asarray(self.fitness_transform(X, raw), dtype=float)
        return np.where(np.isnan(values), np.inf, values)

    def initialize(self) -> None:
        """Новая равномерная популяция; адаптация и архив сбрасываются."""
        self.population = uniform(self.rng, self.lower, self.upper, self.params.np)
        self.raw = self.evaluate(self.population)
        self.archive = np.empty((0, self.dim))
        self.mu_cr = self.params.mu_cr
        self.mu_f = self.params.mu_f
        self.trace.append(float(np.min(self.fitness(self.population, self.raw))))

    def reinitialize(self, mask) -> int:
        """
        Пересеять отмеченных особей равномерно; адаптация CR/F и внешний
        архив сохраняются. Возвращает число пересеянных.
        """
        mask = np.asarray(mask, dtype=bool)
        count = int(np.count_nonzero(mask))
        if count == 0:
            return 0
        fresh = uniform(self.rng, self.lower, self.upper, count)
        population = self.population.copy()
        raw = self.raw.copy()
        population[mask] = fresh
        raw[mask] = self.evaluate(fresh)
        self.population, self.raw = population, raw
        return count

    def _scale_factors(self, size: int) -> np.ndarray:
        f = self.mu_f + 0.1 * self.rng.standard_cauchy(size)
        bad = f <= 0
        while bad.any():
            f[bad] = self.mu_f + 0.1 * self.rng.standard_cauchy(int(bad.sum()))
            bad = f <= 0
        return np.minimum(f, 1.0)

    def _donors(self, size: int, pool: int) -> tuple:
        idx = np.arange(size)
        r1 = self.rng.integers(0, size - 1, size)
        r1 += r1 >= idx
        r2 = self.rng.integers(0, pool, size)
        clash = (r2 == idx) | (r2 == r1)
        while clash.any():
            r2[clash] = self.rng.integers(0, pool, int(clash.sum()))
            clash = (r2 == idx) | (r2 == r1)
        return r1, r2

    def step(self) -> np.ndarray:
        """Одно поколение; возвращает маску заменённых особей."""
        X = self.population
        size = X.shape[0]
        fit = self.fitness(X, self.raw)

        cr = np.clip(self.rng.normal(self.mu_cr, 0.1, size), 0.0, 1.0)
        f = self._scale_factors(size)

        top = max(int(round(self.params.p_best * size)), 1)
        order = np.argsort(fit, kind="stable")
        pbest = order[self.rng.integers(0, top, size)]
        union = np.vstack([X, self.archive]) if self.archive.size else X
        r1, r2 = self._donors(size, union.shape[0])

        V = X + f[:, None] * (X[pbest] - X) + f[:, None] * (X[r1] - union[r2])
        cross = self.rng.random((size, self.dim)) < cr[:, None]
        cross[np.arange(size), self.rng.integers(0, self.dim, size)] = True
        U = reflect(np.where(cross, V, X), self.lower, self.upper)

        raw_u = self.evaluate(U)
        fit_u = self.fitness(U, raw_u)
        better = fit_u <= fit

        if better.any():
            self.archive = np.vstack([self.archive, X[better]])
            excess = self.archive.shape[0] - self.params.archive_size
            if excess > 0:
                keep = self.rng.choice(
                    self.archive.shape[0], self.params.archive_size, replace=False
                )
                self.archive = self.archive[np.sort(keep)]
            s_cr, s_f = cr[better], f[better]
            c = self.params.c
            self.mu_cr = (1 - c) * self.mu_cr + c * float(np.mean(s_cr))
            self.mu_f = (1 - c) * self.mu_f + c * float(np.sum(s_f**2) / np.sum(s_f))

        self.population = np.where(better[:, None], U, X)
        self.raw = np.where(better, raw_u, self.raw)
        self.generation += 1
        self.trace.append(float(np.min(np.where(better, fit_u, fit))))
        return better

    def run(self, budget: int) -> JadeResult:
        if budget <= 0:
            raise ValueError("бюджет вычислений должен быть > 0")
        if budget < self.params.np:
            raise ValueError(
                f"бюджет {budget} меньше размера популяции {self.params.np}"
            )
        self.initialize()
        while self.evaluations + self.params.np <= budget:
            self.step()
        return self.result()

    def result(self) -> JadeResult:
        fit = self.fitness(self.population, self.raw)
        best = int(np.argmin(fit))
        return JadeResult(
            population=self.population.copy(),
            fitness=fit,
            best_x=self.population[best].copy(),
            best_f=float(fit[best]),
            trace=list(self.trace),
            evaluations=self.evaluations,
        )


def jade_run(
    objective: Objective,
    lower,
    upper,
    params: Optional[DeParams] = None,
    budget: int = 10_000,
    seed=None,
) -> JadeResult:
    """Прогон JADE на ``budget`` вычислений целевой функции."""
    result = Jade(objective, lower, upper, params, seed).run(budget)
    logger.debug(
        "JADE: %d вычислений, лучшее значение %.3e", result.evaluations, result.best_f
    )
    return result
