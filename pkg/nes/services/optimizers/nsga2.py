"""
NSGA-II: быстрая недоминируемая сортировка, расстояние скученности,
SBX-скрещивание и полиномиальная мутация, элитарный отбор (mu + lambda).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from nes.services.optimizers.bounds import check_bounds, uniform

logger = logging.getLogger(__name__)

BiObjective = Callable[[np.ndarray], np.ndarray]


@dataclass
class GaParams:
    np: int = 100
    crossover_prob: float = 0.9
    crossover_eta: float = 20.0
    mutation_prob: Optional[float] = None  # None -> 1/d
    mutation_eta: float = 20.0

    def __post_init__(self) -> None:
        if self.np < 2 or self.np % 2:
            raise ValueError("размер популяции должен быть чётным и >= 2")
        if not 0 <= self.crossover_prob <= 1:
            raise ValueError("вероятность скрещивания вне [0, 1]")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ValueError("вероятность мутации вне [0, 1]")


@dataclass
class Nsga2Result:
    population: np.ndarray
    objectives: np.ndarray
    ranks: np.ndarray
    trace: List[np.ndarray] = field(default_factory=list)
    evaluations: int = 0


def dominance_matrix(F: np.ndarray) -> np.ndarray:
    """D[i, j] — i доминирует j."""
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    return le & lt


def non_dominated_ranks(F: np.ndarray) -> np.ndarray:
    """Номер фронта каждой точки (0 — недоминируемые)."""
    D = dominance_matrix(F)
    dominated_by = D.sum(axis=0)
    ranks = np.full(F.shape[0], -1)
    current = np.flatnonzero(dominated_by == 0)
    rank = 0
    while current.size:
        ranks[current] = rank
        dominated_by = dominated_by - D[current].sum(axis=0)
        current = np.flatnonzero((dominated_by == 0) & (ranks < 0))
        rank += 1
    return ranks


def crowding_distance(F: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    distance = np.zeros(F.shape[0])
    for rank in np.unique(ranks):
        front = np.flatnonzero(ranks == rank)
        if front.size <= 2:
            distance[front] = np.inf
            continue
        for k in range(F.shape[1]):
            values = F[front, k]
            order = np.argsort(values, kind="stable")
            span = values[order[-1]] - values[order[0]]
            distance[front[order[0]]] = np.inf
            distance[front[order[-1]]] = np.inf
            if not np.isfinite(span) or span <= 0:
                continue
            with np.errstate(invalid="ignore"):
                gaps = (values[order[2:]] - values[order[:-2]]) / span
            distance[front[order[1:-1]]] += np.nan_to_num(gaps, nan=0.0, posinf=0.0)
    return distance


class Nsga2:
    def __init__(
        self,
        objective: BiObjective,
        lower,
        upper,
        params: Optional[GaParams] = None,
        seed=None,
    ) -> None:
        self.objective = objective
        self.lower, self.upper = check_bounds(lower, upper)
        self.params = params or GaParams()
        self.rng = np.random.default_rng(seed)
        self.evaluations = 0
        d = self.lower.size
        self.mutation_prob = (
            1.0 / d if self.params.mutation_prob is None else self.params.mutation_prob
        )

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        F = np.asarray(self.objective(X), dtype=float)
        self.evaluations += X.shape[0]
        return np.where(np.isnan(F), np.inf, F)

    def tournament(self, ranks: np.ndarray, crowd: np.ndarray) -> np.ndarray:
        size = ranks.size
        a = self.rng.integers(0, size, size)
        b = self.rng.integers(0, size, size)
        tie = (ranks[b] == ranks[a]) & (crowd[b] > crowd[a])
        b_wins = (ranks[b] < ranks[a]) | tie
        return np.where(b_wins, b, a)

    def sbx(self, P1: np.ndarray, P2: np.ndarray):
        eta = self.params.crossover_eta
        lo, hi = self.lower, self.upper
        C1, C2 = P1.copy(), P2.copy()
        pairs, d = P1.shape
        active = (self.rng.random(pairs) <= self.params.crossover_prob)[:, None]
        active = active & (self.rng.random((pairs, d)) <= 0.5)
        active &= np.abs(P1 - P2) > 1e-14
        y1, y2 = np.minimum(P1, P2), np.maximum(P1, P2)
        u = self.rng.random((pairs, d))
        with np.errstate(all="ignore"):
            diff = np.where(active, y2 - y1, 1.0)

            def spread(beta):
                alpha = 2.0 - beta ** (-(eta + 1.0))
                return np.where(
                    u <= 1.0 / alpha,
                    (u * alpha) ** (1.0 / (eta + 1.0)),
                    (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0)),
                )

            c1 = 0.5 * ((y1 + y2) - spread(1.0 + 2.0 * (y1 - lo) / diff) * diff)
            c2 = 0.5 * ((y1 + y2) + spread(1.0 + 2.0 * (hi - y2) / diff) * diff)
        c1, c2 = np.clip(c1, lo, hi), np.clip(c2, lo, hi)
        swap = self.rng.random((pairs, d)) <= 0.5
        C1 = np.where(active, np.where(swap, c2, c1), C1)
        C2 = np.where(active, np.where(swap, c1, c2), C2)
        return C1, C2

    def mutate(self, X: np.ndarray) -> np.ndarray:
        eta = self.params.mutation_eta
        lo, hi = self.lower, self.upper
        width = hi - lo
        active = self.rng.random(X.shape) <= self.mutation_prob
        u = self.rng.random(X.shape)
        delta1 = (X - lo) / width
        delta2 = (hi - X) / width
        power = 1.0 / (eta + 1.0)
        with np.errstate(all="ignore"):
            low_val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - delta1) ** (eta + 1.0)
            high_val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - delta2) ** (eta + 1.0)
            deltaq = np.where(u <= 0.5, low_val**power - 1.0, 1.0 - high_val**power)
        return np.where(active, np.clip(X + deltaq * width, lo, hi), X)

    def offspring(self, X: np.ndarray, ranks, crowd) -> np.ndarray:
        parents = X[self.tournament(ranks, crowd)]
        C1, C2 = self.sbx(parents[0::2], parents[1::2])
        children = np.empty_like(parents)
        children[0::2], children[1::2] = C1, C2
        return self.mutate(children)

    @staticmethod
    def survive(X, F, size: int):
        ranks = non_dominated_ranks(F)
        crowd = crowding_distance(F, ranks)
        order = np.lexsort((np.arange(X.shape[0]), -crowd, ranks))[:size]
        return X[order], F[order], ranks[order], crowd[order]

    def run(self, max_generations: int, on_generation=None) -> Nsga2Result:
        if max_generations < 1:
            raise ValueError("max_generations должно быть >= 1")
        size = self.params.np
        X = uniform(self.rng, self.lower, self.upper, size)
        F = self.evaluate(X)
        ranks = non_dominated_ranks(F)
        crowd = crowding_distance(F, ranks)
        trace = [X.copy()]
        if on_generation is not None:
            on_generation(0, X, F)
        for generation in range(1, max_generations + 1):
            Y = self.offspring(X, ranks, crowd)
            G = self.evaluate(Y)
            X, F, ranks, crowd = self.survive(
                np.vstack([X, Y]), np.vstack([F, G]), size
            )
            trace.append(X.copy())
            if on_generation is not None:
                on_generation(generation, X, F)
        return Nsga2Result(
            population=X,
            objectives=F,
            ranks=ranks,
            trace=trace,
            evaluations=self.evaluations,
        )


def nsga2_run(
    objective: BiObjective,
    lower,
    upper,
    params: Optional[GaParams] = None,
    max_generations: int = 500,
    seed=None,
) -> Nsga2Result:
    """
    Прогон NSGA-II; поколение 0 — начальная популяция, каждое следующее
    стоит ``np`` вычислений.
    """
    result = Nsga2(objective, lower, upper, params, seed).run(max_generations)
    logger.debug("NSGA-II: %d вычислений", result.evaluations)
    return result
