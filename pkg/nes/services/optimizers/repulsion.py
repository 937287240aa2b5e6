"""
Динамическое отталкивание (DR-JADE и VR-DR-JADE): JADE минимизирует
R(x) = g(x) * prod zeta, найденные корни складываются в архив.

Около корня архива R убывает к нулю линейно, поэтому популяция может
сойтись к нему повторно. Как только особь оказывается ближе
``dedup_radius`` к корню архива (в том числе только что найденному),
особи в радиусе отталкивания от него пересеиваются; если это вся
популяция, выполняется полный перезапуск JADE.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from nes.services.optimizers.jade import DeParams, Jade
from nes.services.problem import ROOT_THRESHOLD, NesProblem, residual_sq_batch
from nes.services.reduction import ObjectiveKind, Reducer, ReductionScheme
from nes.services.transforms import (
    RepulsionConfig,
    RootArchive,
    gamma_at,
    repulsion_factor,
)

logger = logging.getLogger(__name__)

TRACE_EVERY = 10
STAGNATION = 1e-12
# лучшее R должно падать хотя бы на 1% за STALL_GENERATIONS поколений
STALL_GENERATIONS = 20
STALL_TOLERANCE = 0.01


@dataclass
class DrTraceEntry:
    generation: int
    evaluations: int
    best_r: float
    archive_size: int


@dataclass
class DrOutcome:
    archive: RootArchive
    trace: List[DrTraceEntry] = field(default_factory=list)
    evaluations: int = 0
    restarts: int = 0

    @property
    def roots(self) -> List[tuple]:
        return self.archive.full_vectors


class RepulsionSearch:
    """Состояние одного прогона dr_loop."""

    def __init__(
        self,
        problem: NesProblem,
        scheme: Optional[ReductionScheme],
        cfg: Optional[RepulsionConfig],
        params: DeParams,
        nfes_max: int,
        seed,
        restart: bool,
    ) -> None:
        self.problem = problem
        self.reducer = Reducer(problem, scheme)
        self.params = params
        self.nfes_max = nfes_max
        self.restart = restart
        t_max = max(nfes_max // params.np, 1)
        self.cfg = cfg or RepulsionConfig.for_bounds(
            self.reducer.lower, self.reducer.upper, t_max
        )
        self.archive = RootArchive()
        self.gamma = self.cfg.gamma_max
        self.batch = None
        self._best_seen = np.inf
        self._stall = 0
        self.jade = Jade(
            self._objective,
            self.reducer.lower,
            self.reducer.upper,
            params,
            seed,
            fitness_transform=self._repelled,
        )
        self.outcome = DrOutcome(self.archive)

    def _objective(self, X: np.ndarray) -> np.ndarray:
        evaluation = self.reducer.evaluate(X, ObjectiveKind.SQ)
        self.batch = (X, evaluation.values, evaluation.full)
        return evaluation.values

    def _repelled(self, X: np.ndarray, g: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore", over="ignore"):
            return g * repulsion_factor(self.cfg, X, self.archive, self.gamma)

    def _update_gamma(self) -> None:
        t = min(self.jade.evaluations // self.params.np, self.cfg.t_max)
        self.gamma = gamma_at(self.cfg, t)

    def _harvest(self) -> bool:
        """Проверить последнюю оценённую партию; True, если архив пополнился."""
        X, g, full = self.batch
        r = self._repelled(X, np.where(np.isnan(g), np.inf, g))
        hits = np.flatnonzero(r < ROOT_THRESHOLD)
        if hits.size == 0:
            return False
        hits = hits[np.argsort(r[hits], kind="stable")]
        exact = residual_sq_batch(self.problem, full[hits])
        added = False
        for k, sq in zip(hits, exact):
            if self.archive.try_add(X[k], float(sq), full[k]):
                added = True
                logger.debug(
                    "%s: корень #%d на %d вычислениях",
                    self.problem.name,
                    len(self.archive),
                    self.jade.evaluations,
                )
        return added

    def captured(self) -> np.ndarray:
        """Корни архива, ближе ``dedup_radius`` к которым есть особь."""
        if not len(self.archive):
            return np.empty((0, self.reducer.lower.size))
        points = self.archive.points
        nearest = cdist(points, self.jade.population).min(axis=1)
        return points[nearest < self.archive.dedup_radius]

    def respawn(self, centers: np.ndarray) -> bool:
        """
        Пересеять особей не дальше радиуса отталкивания от ``centers``.

        Returns:
            True, если задета вся популяция и нужен полный перезапуск.
        """
        radius = max(self.gamma, self.archive.dedup_radius)
        mask = cdist(self.jade.population, centers).min(axis=1) <= radius
        self._restarted()
        if mask.all():
            return True
        count = int(np.count_nonzero(mask))
        if self.jade.evaluations + count <= self.nfes_max:
            self.jade.reinitialize(mask)
            logger.debug(
                "%s: пересеяно %d особей у %d корней",
                self.problem.name,
                count,
                len(centers),
            )
        return False

    def stalled(self, best_r: float) -> bool:
        if best_r < (1.0 - STALL_TOLERANCE) * self._best_seen:
            self._best_seen = best_r
            self._stall = 0
        else:
            self._stall += 1
        return self._stall >= STALL_GENERATIONS

    def _reset_stall(self) -> None:
        self._best_seen = np.inf
        self._stall = 0

    def _stagnated(self) -> bool:
        fit = self.jade.fitness(self.jade.population, self.jade.raw)
        if self.stalled(float(np.min(fit))):
            return True
        extent = np.ptp(self.jade.population, axis=0)
        width = self.reducer.upper - self.reducer.lower
        return bool(np.all(extent < STAGNATION * width))

    def _restarted(self) -> None:
        self.outcome.restarts += 1
        self._record()
        self._reset_stall()

    def _record(self) -> None:
        fit = self.jade.fitness(self.jade.population, self.jade.raw)
        self.outcome.trace.append(
            DrTraceEntry(
                generation=self.jade.evaluations // self.params.np,
                evaluations=self.jade.evaluations,
                best_r=float(np.min(fit)),
                archive_size=len(self.archive),
            )
        )

    def run(self) -> DrOutcome:
        needs_init = True
        while self.jade.evaluations + self.params.np <= self.nfes_max:
            self._update_gamma()
            if needs_init:
                self.jade.initialize()
                self._reset_stall()
                needs_init = False
                restarted = True
            else:
                self.jade.step()
                restarted = False
            if self._harvest():
                self._reset_stall()
            centers = self.captured() if self.restart else None
            if centers is not None and len(centers):
                needs_init = self.respawn(centers)
            elif self._stagnated():
                needs_init = True
                self._restarted()
            elif restarted or self.jade.generation % TRACE_EVERY == 0:
                self._record()
        self.outcome.evaluations = self.jade.evaluations
        logger.debug(
            "%s: %d корней, %d перезапусков",
            self.problem.name,
            len(self.archive),
            self.outcome.restarts,
        )
        return self.outcome


def dr_loop(
    problem: NesProblem,
    scheme: Optional[ReductionScheme] = None,
    cfg: Optional[RepulsionConfig] = None,
    params: Optional[DeParams] = None,
    nfes_max: Optional[int] = None,
    seed=None,
    restart: bool = True,
) -> DrOutcome:
    """
    Поиск множества корней с отталкиванием.

    При наличии схемы поиск идёт по основным переменным, g — редуцированная
    сумма квадратов, а в архив попадают полные векторы.
    """
    budget = problem.nfes_max if nfes_max is None else nfes_max
    if budget <= 0:
        raise ValueError("nfes_max должно быть > 0")
    search = RepulsionSearch(
        problem, scheme, cfg, params or DeParams(), budget, seed, restart
    )
    return search.run()
