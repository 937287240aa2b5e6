"""
Эталонные корни малых систем (n <= 3): плотная сетка -> локальные минимумы
суммы квадратов невязок -> уточнение scipy.optimize.root -> отбор и
удаление дубликатов.
"""

from __future__ import annotations

import itertools
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import root

from nes.services.exceptions import SuiteError
from nes.services.problem import NesProblem, residual_sq_batch

logger = logging.getLogger(__name__)

GRID_POINTS = {1: 4001, 2: 401, 3: 81}
ROOT_TOLERANCE = 1e-18
DEDUP = 1e-6
BOUND_SLACK = 1e-12
MAX_STARTS = 5000


def _grid(problem: NesProblem, points: int):
    axes = [np.linspace(lo, hi, points) for lo, hi in problem.bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.column_stack([m.ravel() for m in mesh])
    values = residual_sq_batch(problem, X)
    values = np.where(np.isnan(values), np.inf, values)
    return X, values.reshape(mesh[0].shape)


def _local_minima(values: np.ndarray) -> np.ndarray:
    """Индексы (в ravel-порядке) узлов, не больших всех соседей."""
    padded = np.pad(values, 1, constant_values=np.inf)
    core = tuple(slice(1, -1) for _ in range(values.ndim))
    is_min = np.isfinite(values)
    for shift in itertools.product((-1, 0, 1), repeat=values.ndim):
        if not any(shift):
            continue
        window = tuple(
            slice(1 + s, padded.shape[k] - 1 + s) for k, s in enumerate(shift)
        )
        is_min &= padded[core] <= padded[window]
    return np.flatnonzero(is_min.ravel())


def _polish(problem: NesProblem, x0: np.ndarray) -> np.ndarray:
    def fun(x):
        return problem.residuals(x)

    method = "hybr" if problem.m == problem.n else "lm"
    options = {"xtol": 1e-14} if method == "hybr" else {"xtol": 1e-15, "ftol": 1e-15}
    with np.errstate(all="ignore"):
        solution = root(fun, x0, method=method, options=options)
    return np.asarray(solution.x, dtype=float)


def oracle_roots(
    problem: NesProblem,
    grid: Optional[int] = None,
    tolerance: float = ROOT_TOLERANCE,
    dedup: float = DEDUP,
) -> List[Tuple[float, ...]]:
    """Все найденные корни в границах, отсортированные лексикографически."""
    if problem.n > 3:
        raise SuiteError(f"{problem.name}: сеточный оракул рассчитан на n <= 3")
    points = grid or GRID_POINTS[problem.n]
    X, values = _grid(problem, points)
    starts = _local_minima(values)
    # точные узлы сетки идут первыми
    starts = starts[np.argsort(values.ravel()[starts], kind="stable")][:MAX_STARTS]
    logger.debug("%s: %d стартовых точек", problem.name, starts.size)

    found: List[np.ndarray] = []
    for k in starts:
        x0 = X[k]
        x = x0 if values.ravel()[k] < tolerance else _polish(problem, x0)
        inside = (x >= problem.lower - BOUND_SLACK) & (x <= problem.upper + BOUND_SLACK)
        if not np.all(inside):
            continue
        x = np.clip(x, problem.lower, problem.upper)
        if not residual_sq_batch(problem, x[None, :])[0] < tolerance:
            continue
        if all(np.linalg.norm(x - y) >= dedup for y in found):
            found.append(x)
    roots = sorted(tuple(float(v) for v in x) for x in found)
    logger.info("%s: оракул нашёл %d корней", problem.name, len(roots))
    return roots


def read_fixture(path: Path) -> Optional[List[Tuple[float, ...]]]:
    if not path.exists():
        return None
    data = json.loads(path.read_text(encoding="utf-8"))
    return [tuple(float(v) for v in r) for r in data["roots"]]


def write_fixture(
    path: Path, problem: NesProblem, roots: Sequence[Sequence[float]], grid: int
) -> Path:
    payload = {
        "problem": problem.name,
        "provenance": "oracle",
        "generator": f"manage.py nes_oracle {problem.name} --write --grid {grid}",
        "roots": [list(r) for r in roots],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path
