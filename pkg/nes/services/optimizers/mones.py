from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from nes.services.optimizers.nsga2 import GaParams, Nsga2
from nes.services.problem import NesProblem
from nes.services.reduction import ObjectiveKind, Reducer, ReductionScheme
from nes.services.transforms import mones_objectives_batch

logger = logging.getLogger(__name__)


@dataclass
class MonesOutcome:
    """
    ``population`` — полные векторы, ``search_population`` и ``trace`` —
    в пространстве поиска (основные переменные при редукции).
    """

    population: np.ndarray
    search_population: np.ndarray
    objectives: np.ndarray
    trace: List[np.ndarray] = field(default_factory=list)
    evaluations: int = 0


def generations_for_budget(budget: int, pop_size: int) -> int:
    """Начальная популяция тоже тратит ``pop_size`` вычислений."""
    return max(budget // pop_size - 1, 1)


def mones_run(
    problem: NesProblem,
    scheme: Optional[ReductionScheme] = None,
    params: Optional[GaParams] = None,
    max_generations: Optional[int] = None,
    seed=None,
) -> MonesOutcome:
    """
    MONES (и VR-MONES при наличии схемы): NSGA-II над
    (x + sum|f|, 1 - x + p * max|f|), x — первая переменная пространства поиска.
    """
    params = params or GaParams()
    reducer = Reducer(problem, scheme)
    if max_generations is None:
        max_generations = generations_for_budget(problem.nfes_max, params.np)

    def objective(X: np.ndarray) -> np.ndarray:
        evaluation = reducer.evaluate(X, ObjectiveKind.L1)
        return mones_objectives_batch(X[:, 0], evaluation.best_residuals)

    result = Nsga2(objective, reducer.lower, reducer.upper, params, seed).run(
        max_generations
    )
    full = reducer.expand_population(result.population, ObjectiveKind.L1)
    logger.debug(
        "%s: MONES%s, %d поколений, %d вычислений",
        problem.name,
        " с редукцией" if scheme is not None else "",
        max_generations,
        result.evaluations,
    )
    return MonesOutcome(
        population=full,
        search_population=result.population,
        objectives=result.objectives,
        trace=result.trace,
        evaluations=result.evaluations,
    )
