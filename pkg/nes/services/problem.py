from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from nes.services.exceptions import DimensionMismatchError, ProblemFileError
from nes.services.expressions import Expr, bind

INFINITE = "infinite"
UNKNOWN = "unknown"

ROOT_THRESHOLD = 1e-5

RootCount = Union[int, str]


@dataclass(frozen=True)
class NesProblem:
    """
    Система нелинейных уравнений f_i(x) = 0 с прямоугольными границами.

    ``nor`` — известное число корней, либо ``"infinite"``/``"unknown"``.
    """

    name: str
    bounds: Tuple[Tuple[float, float], ...]
    equations: Tuple[Expr, ...]
    nor: RootCount = UNKNOWN
    known_roots: Tuple[Tuple[float, ...], ...] = field(default=())
    nfes_max: int = 50_000
    epsilon: float = 0.02

    def __post_init__(self) -> None:
        if not self.equations:
            raise ProblemFileError(f"{self.name}: нет ни одного уравнения")
        for j, (lower, upper) in enumerate(self.bounds, start=1):
            if not lower < upper:
                raise ProblemFileError(
                    f"{self.name}: границы x{j} нарушают порядок "
                    f"[{lower}, {upper}]"
                )
        for eq in self.equations:
            bind(eq, self.n)
        for root in self.known_roots:
            if len(root) != self.n:
                raise DimensionMismatchError(
                    f"{self.name}: корень длины {len(root)} при n={self.n}"
                )

    @property
    def n(self) -> int:
        return len(self.bounds)

    @property
    def m(self) -> int:
        return len(self.equations)

    @property
    def finite_roots(self) -> bool:
        return isinstance(self.nor, int)

    @cached_property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds], dtype=float)

    @cached_property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds], dtype=float)

    def check_dimension(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.n:
            got = arr.shape[-1] if arr.ndim else 0
            raise DimensionMismatchError(
                f"{self.name}: ожидался вектор длины {self.n}, получено {got}"
            )
        return arr

    def residual_matrix(
        self,
        population,
        equations: Optional[Sequence[int]] = None,
    ) -> np.ndarray:
        """
        Невязки для всей популяции.

        Args:
            population: массив (N, n).
            equations: номера уравнений (с 1); по умолчанию все.

        Returns:
            Массив (N, k) для k выбранных уравнений.
        """
        X = np.atleast_2d(self.check_dimension(population))
        indices = range(1, self.m + 1) if equations is None else equations
        cols = X.T
        out = np.empty((X.shape[0], len(indices)), dtype=float)
        with np.errstate(all="ignore"):
            for k, i in enumerate(indices):
                value = self.equations[i - 1].evaluate(cols)
                out[:, k] = np.broadcast_to(np.asarray(value, dtype=float), X.shape[0])
        return out

    def residuals(self, x) -> np.ndarray:
        arr = self.check_dimension(x)
        if arr.ndim != 1:
            raise DimensionMismatchError(f"{self.name}: ожидался один вектор")
        return self.residual_matrix(arr[None, :])[0]

    def in_bounds_mask(self, population) -> np.ndarray:
        X = np.atleast_2d(self.check_dimension(population))
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)


def evaluate_residuals(problem: NesProblem, x) -> np.ndarray:
    """(f_1(x), ..., f_m(x)); границы не проверяются."""
    return problem.residuals(x)


def residual_l1(problem: NesProblem, x) -> float:
    with np.errstate(all="ignore"):
        return float(np.sum(np.abs(problem.residuals(x))))


def residual_sq(problem: NesProblem, x) -> float:
    with np.errstate(all="ignore"):
        return float(np.sum(np.square(problem.residuals(x))))


def residual_sq_batch(problem: NesProblem, population) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.sum(np.square(problem.residual_matrix(population)), axis=1)


def in_bounds(problem: NesProblem, x) -> bool:
    arr = problem.check_dimension(x)
    return bool(problem.in_bounds_mask(arr)[0])


def is_root(problem: NesProblem, x, threshold: float = ROOT_THRESHOLD) -> bool:
    """Корень: residual_sq(x) < threshold и x в границах."""
    return residual_sq(problem, x) < threshold and in_bounds(problem, x)
