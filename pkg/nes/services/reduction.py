"""
Редукция переменных: часть переменных выражается через остальные
(«основные») с помощью самих уравнений, а исключённые уравнения выполняются
автоматически.

``Reducer`` работает сразу с популяцией; функции уровня модуля — обёртки
для одного вектора.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from nes.services.exceptions import DimensionMismatchError, SchemeError
from nes.services.expressions import MultiExpr
from nes.services.problem import NesProblem


class ObjectiveKind(str, Enum):
    L1 = "l1"
    SQ = "sq"


@dataclass(frozen=True)
class ReducedVariable:
    """Переменная x_index, вычисляемая по соотношению, и исключаемое уравнение."""

    index: int
    relation: MultiExpr
    eliminates: int


@dataclass(frozen=True)
class ReductionScheme:
    n: int
    m: int
    reduced: Tuple[ReducedVariable, ...]

    @property
    def reduced_vars(self) -> Tuple[int, ...]:
        return tuple(r.index for r in self.reduced)

    @property
    def eliminated(self) -> Tuple[int, ...]:
        return tuple(r.eliminates for r in self.reduced)

    @property
    def core_vars(self) -> Tuple[int, ...]:
        reduced = set(self.reduced_vars)
        return tuple(j for j in range(1, self.n + 1) if j not in reduced)

    @property
    def retained_eqs(self) -> Tuple[int, ...]:
        eliminated = set(self.eliminated)
        return tuple(i for i in range(1, self.m + 1) if i not in eliminated)

    @property
    def q(self) -> int:
        return len(self.core_vars)

    @property
    def p(self) -> int:
        return len(self.retained_eqs)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_scheme(problem: NesProblem, scheme: ReductionScheme) -> List[Violation]:
    """Все нарушения схемы (пустой список — схема корректна)."""
    violations: List[Violation] = []

    def add(code: str, message: str) -> None:
        violations.append(Violation(code, message))

    if (scheme.n, scheme.m) != (problem.n, problem.m):
        add(
            "dimension_mismatch",
            f"схема для n={scheme.n}, m={scheme.m}, "
            f"задача n={problem.n}, m={problem.m}",
        )
    position = {}
    for i, rv in enumerate(scheme.reduced):
        if not 1 <= rv.index <= problem.n:
            add("unknown_variable", f"x{rv.index} вне x1..x{problem.n}")
        if rv.index in position:
            add("duplicate_reduced", f"x{rv.index} редуцируется дважды")
        else:
            position[rv.index] = i
    seen_eqs = set()
    for rv in scheme.reduced:
        if not 1 <= rv.eliminates <= problem.m:
            add("unknown_equation", f"eq{rv.eliminates} вне eq1..eq{problem.m}")
        if rv.eliminates in seen_eqs:
            add("duplicate_elimination", f"eq{rv.eliminates} исключается дважды")
        seen_eqs.add(rv.eliminates)

    for i, rv in enumerate(scheme.reduced):
        candidate_sets = {c.variables() for c in rv.relation.candidates}
        if len(candidate_sets) > 1:
            add(
                "candidate_variables",
                f"кандидаты x{rv.index} зависят от разных переменных",
            )
        used = rv.relation.variables()
        if rv.index in used:
            add("self_reference", f"соотношение x{rv.index} ссылается на x{rv.index}")
        for j in sorted(used):
            if not 1 <= j <= problem.n:
                add("unknown_variable", f"соотношение x{rv.index} использует x{j}")
            elif j != rv.index and position.get(j, -1) >= i:
                add(
                    "forward_reference",
                    f"x{rv.index} использует x{j}, который вычисляется позже",
                )
    if problem.n and not scheme.core_vars:
        add("empty_core", "не осталось ни одной основной переменной")
    return violations


@dataclass(frozen=True)
class ExpandedCandidate:
    full: Tuple[float, ...]
    feasible: bool
    clamped: FrozenSet[int]


@dataclass
class Expansion:
    """
    Раскрытие популяции основных векторов.

    Строки ``full`` упорядочены по родителю, внутри родителя — в декартовом
    порядке ветвей.
    """

    full: np.ndarray
    parent: np.ndarray
    feasible: np.ndarray
    clamped: np.ndarray
    reduced_vars: Tuple[int, ...]

    def candidate(self, k: int) -> ExpandedCandidate:
        clamped = frozenset(
            idx for idx, flag in zip(self.reduced_vars, self.clamped[k]) if flag
        )
        return ExpandedCandidate(
            tuple(float(v) for v in self.full[k]), bool(self.feasible[k]), clamped
        )

    def candidates_of(self, row: int) -> List[ExpandedCandidate]:
        return [self.candidate(k) for k in np.flatnonzero(self.parent == row)]


@dataclass
class ReducedEvaluation:
    """Значения целевой функции и лучшие кандидаты для каждой строки."""

    values: np.ndarray
    best: np.ndarray
    expansion: Expansion
    residuals: np.ndarray

    @property
    def full(self) -> np.ndarray:
        return self.expansion.full[self.best]

    @property
    def best_residuals(self) -> np.ndarray:
        return self.residuals[self.best]

    @property
    def feasible(self) -> np.ndarray:
        return self.expansion.feasible[self.best]


class Reducer:
    """
    Пространство поиска задачи: основные переменные при наличии схемы,
    все переменные — без неё.
    """

    def __init__(
        self, problem: NesProblem, scheme: Optional[ReductionScheme] = None
    ) -> None:
        if scheme is not None:
            violations = validate_scheme(problem, scheme)
            if violations:
                raise SchemeError(
                    "; ".join(f"{v.code}: {v.message}" for v in violations)
                )
        self.problem = problem
        self.scheme = scheme
        if scheme is None:
            self.core_vars = tuple(range(1, problem.n + 1))
            self.retained_eqs = tuple(range(1, problem.m + 1))
        else:
            self.core_vars = scheme.core_vars
            self.retained_eqs = scheme.retained_eqs
        self.core_index = np.array(self.core_vars, dtype=int) - 1
        self.lower = problem.lower[self.core_index]
        self.upper = problem.upper[self.core_index]

    @property
    def dim(self) -> int:
        return len(self.core_vars)

    @property
    def p(self) -> int:
        return len(self.retained_eqs)

    def core_of(self, full) -> np.ndarray:
        """Проекция полных векторов на основные переменные."""
        return np.asarray(full, dtype=float)[..., self.core_index]

    def _check(self, cores) -> np.ndarray:
        C = np.atleast_2d(np.asarray(cores, dtype=float))
        if C.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"{self.problem.name}: основной вектор длины {C.shape[1]}, "
                f"ожидалось {self.dim}"
            )
        return C

    def expand(self, cores) -> Expansion:
        C = self._check(cores)
        rows = C.shape[0]
        full = np.full((rows, self.problem.n), np.nan)
        full[:, self.core_index] = C
        parent = np.arange(rows)
        feasible = np.ones(rows, dtype=bool)
        reduced = self.scheme.reduced if self.scheme is not None else ()
        clamped = np.zeros((rows, len(reduced)), dtype=bool)

        for pos, rv in enumerate(reduced):
            j = rv.index - 1
            lo, hi = self.problem.bounds[j]
            values, clamp, keep = self._branch(rv.relation, full, lo, hi)
            src, branch = np.nonzero(keep)
            full = full[src]
            full[:, j] = values[src, branch]
            parent = parent[src]
            feasible = feasible[src] & ~clamp[src, branch]
            clamped = clamped[src]
            clamped[:, pos] = clamp[src, branch]

        return Expansion(
            full=full,
            parent=parent,
            feasible=feasible,
            clamped=clamped,
            reduced_vars=tuple(r.index for r in reduced),
        )

    @staticmethod
    def _branch(relation: MultiExpr, full: np.ndarray, lo: float, hi: float):
        candidates = relation.candidates
        rows = full.shape[0]
        cols = full.T
        with np.errstate(all="ignore"):
            raw = np.column_stack(
                [
                    np.broadcast_to(np.asarray(c.evaluate(cols), dtype=float), rows)
                    for c in candidates
                ]
            )
        inside = (raw >= lo) & (raw <= hi)
        # NaN: ветка «+» уходит на верхнюю границу, остальные на нижнюю
        nan_target = np.full(len(candidates), lo)
        if relation.branching:
            nan_target[0] = hi
        values = np.where(np.isnan(raw), nan_target, np.clip(raw, lo, hi))
        values = np.where(inside, raw, values)
        if len(candidates) == 1:
            keep = np.ones_like(inside)
        else:
            keep = np.where(inside.any(axis=1)[:, None], inside, True)
            for c in range(1, len(candidates)):
                same = keep[:, :c] & (values[:, :c] == values[:, c : c + 1])
                keep[:, c] &= ~same.any(axis=1)
        return values, ~inside, keep

    def evaluate(
        self, cores, kind: ObjectiveKind = ObjectiveKind.SQ
    ) -> ReducedEvaluation:
        """
        Целевая функция по сохранённым уравнениям: минимум по кандидатам.

        При равенстве предпочитается допустимый кандидат, затем первый в
        декартовом порядке; NaN считается +inf.
        """
        expansion = self.expand(cores)
        count = expansion.full.shape[0]
        if self.p:
            residuals = self.problem.residual_matrix(expansion.full, self.retained_eqs)
        else:
            residuals = np.zeros((count, 0))
        with np.errstate(all="ignore"):
            if kind == ObjectiveKind.L1:
                values = np.sum(np.abs(residuals), axis=1)
            else:
                values = np.sum(np.square(residuals), axis=1)
        values = np.where(np.isnan(values), np.inf, values)
        order = np.lexsort(
            (np.arange(count), ~expansion.feasible, values, expansion.parent)
        )
        _, first = np.unique(expansion.parent[order], return_index=True)
        best = order[first]
        return ReducedEvaluation(
            values=values[best],
            best=best,
            expansion=expansion,
            residuals=residuals,
        )

    def expand_population(
        self, cores, kind: ObjectiveKind = ObjectiveKind.L1
    ) -> np.ndarray:
        C = np.asarray(cores, dtype=float)
        if C.size == 0:
            return np.empty((0, self.problem.n))
        return self.evaluate(C, kind).full


def _single(problem, scheme, c) -> Tuple[Reducer, np.ndarray]:
    reducer = Reducer(problem, scheme)
    vector = np.asarray(c, dtype=float)
    if vector.ndim != 1:
        raise DimensionMismatchError("ожидался один основной вектор")
    return reducer, vector


def expand_individual(
    problem: NesProblem, scheme: ReductionScheme, c: Sequence[float]
) -> List[ExpandedCandidate]:
    reducer, vector = _single(problem, scheme, c)
    return reducer.expand(vector[None, :]).candidates_of(0)


def reduced_objective(
    problem: NesProblem,
    scheme: ReductionScheme,
    c: Sequence[float],
    kind: ObjectiveKind = ObjectiveKind.SQ,
) -> Tuple[float, ExpandedCandidate]:
    reducer, vector = _single(problem, scheme, c)
    result = reducer.evaluate(vector[None, :], kind)
    return float(result.values[0]), result.expansion.candidate(int(result.best[0]))


def expand_population(
    problem: NesProblem,
    scheme: ReductionScheme,
    cores: Sequence[Sequence[float]],
    kind: ObjectiveKind = ObjectiveKind.L1,
) -> List[Tuple[float, ...]]:
    full = Reducer(problem, scheme).expand_population(cores, kind)
    return [tuple(float(v) for v in row) for row in full]
