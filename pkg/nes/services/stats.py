"""Непараметрические тесты: знаковых рангов Уилкоксона и Фридмана."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from nes.services.exceptions import StatisticsError

EXACT_MAX_N = 25
MIN_PAIRS = 5


@dataclass
class WilcoxonResult:
    r_plus: float
    r_minus: float
    p_value: float
    n: int
    exact: bool


@dataclass
class FriedmanResult:
    statistic: float
    p_value: float
    ranks: np.ndarray


def _exact_two_sided(ranks: np.ndarray, r_plus: float) -> float:
    """Перебор 2^n знаков через динамику по удвоенным (целым) рангам."""
    doubled = np.rint(2 * ranks).astype(int)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    observed = int(round(2 * r_plus))
    n_outcomes = 2.0 ** len(doubled)
    lower = counts[: observed + 1].sum() / n_outcomes
    upper = counts[observed:].sum() / n_outcomes
    return float(min(1.0, 2.0 * min(lower, upper)))


def _normal_two_sided(ranks: np.ndarray, r_plus: float) -> float:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    z = (r_plus - mean) / np.sqrt(var)
    return float(2.0 * stats.norm.sf(abs(z)))


def wilcoxon_signed_rank(pairs: Sequence[Tuple[float, float]]) -> WilcoxonResult:
    """
    Разности d = b - a; R+ — сумма рангов при d > 0 (a лучше b при
    минимизации). Нулевые разности отбрасываются, ничьи получают средний ранг.
    """
    data = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if data.shape[0] < MIN_PAIRS:
        raise StatisticsError(
            f"нужно хотя бы {MIN_PAIRS} пар, получено {data.shape[0]}"
        )
    d = data[:, 1] - data[:, 0]
    d = d[d != 0]
    if d.size == 0:
        raise StatisticsError("все разности нулевые")
    ranks = stats.rankdata(np.abs(d))
    r_plus = float(np.sum(ranks[d > 0]))
    r_minus = float(np.sum(ranks[d < 0]))
    exact = d.size <= EXACT_MAX_N
    if exact:
        p = _exact_two_sided(ranks, r_plus)
    else:
        p = _normal_two_sided(ranks, r_plus)
    return WilcoxonResult(r_plus, r_minus, p, int(d.size), exact)


def _matrix(matrix) -> np.ndarray:
    rows = [list(row) for row in matrix]
    if len({len(row) for row in rows}) > 1:
        raise StatisticsError("строки матрицы разной длины")
    data = np.asarray(rows, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] < 2:
        raise StatisticsError("нужно >= 2 задач и >= 2 алгоритмов")
    return data


def friedman_ranks(matrix, minimize: bool = True) -> np.ndarray:
    """Средний ранг алгоритма (столбца) по задачам (строкам)."""
    data = _matrix(matrix)
    signed = data if minimize else -data
    ranks = np.vstack([stats.rankdata(row) for row in signed])
    return ranks.mean(axis=0)


def friedman_test(matrix, minimize: bool = True) -> FriedmanResult:
    data = _matrix(matrix)
    if data.shape[1] < 3:
        raise StatisticsError("тесту Фридмана нужно >= 3 алгоритмов")
    statistic, p_value = stats.friedmanchisquare(*data.T)
    ranks = friedman_ranks(data, minimize)
    return FriedmanResult(float(statistic), float(p_value), ranks)
