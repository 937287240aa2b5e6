from __future__ import annotations

import numpy as np


def check_bounds(lower, upper):
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
        raise ValueError("границы должны быть непустыми векторами одной длины")
    if not np.all(lo < hi):
        raise ValueError("нужно lower < upper для каждой переменной")
    return lo, hi


def reflect(X, lower, upper) -> np.ndarray:
    """Отражение от границ; результат всегда внутри [lower, upper]."""
    width = upper - lower
    y = np.mod(np.asarray(X, dtype=float) - lower, 2.0 * width)
    y = np.where(y > width, 2.0 * width - y, y)
    return lower + y


def uniform(rng: np.random.Generator, lower, upper, size: int) -> np.ndarray:
    return lower + rng.random((size, lower.size)) * (upper - lower)
