"""
Чтение и печать файлов задач (UTF-8, построчный формат).

Пример::

    [problem] name=F1 vars=2
    bounds: x1..x2 in [-1, 1]
    eq1: x1^2 + x2^2 - 1
    eq2: x1 - x2
    [reduction]
    reduce x2 = x1  eliminates eq2
    [roots]
    root: sqrt(2)/2, sqrt(2)/2
    [meta] nor=2 nfes_max=50000 epsilon=0.02

Семейство уравнений: ``eqs k=1..19: <тело с k>``.
"""

from __future__ import annotations

import re
from typing import Dict, List, Optional, Tuple

from nes.services.exceptions import ExpressionSyntaxError, NesError, ProblemFileError
from nes.services.expressions import (
    Expr,
    bind,
    eval_expr,
    parse_expression,
    parse_relation,
)
from nes.services.problem import INFINITE, UNKNOWN, NesProblem
from nes.services.reduction import ReducedVariable, ReductionScheme, validate_scheme

SECTIONS = ("problem", "reduction", "roots", "meta")
META_KEYS = ("nor", "nfes_max", "epsilon")

_HEADER_RE = re.compile(r"^\[(\w+)\]\s*(.*)$")
_BOUND_RE = re.compile(
    r"^x(\d+)(?:\s*\.\.\s*x(\d+))?\s+in\s+\[(.+),(.+)\]$"
)
_EQ_RE = re.compile(r"^eq(\d+)\s*:\s*(.+)$")
_FAMILY_RE = re.compile(
    r"^eqs\s+([A-Za-z_]\w*)\s*=\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*:\s*(.+)$"
)
_REDUCE_RE = re.compile(
    r"^reduce\s+x(\d+)\s*=\s*(.+?)\s+eliminates\s+eq(\d+)$"
)


def _key_values(text: str, line: int) -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for chunk in text.split():
        key, sep, value = chunk.partition("=")
        if not sep or not key or not value:
            raise ProblemFileError(f"ожидалось ключ=значение, получено {chunk!r}", line)
        pairs[key] = value
    return pairs


def _split_top_level(text: str, sep: str = ",") -> List[str]:
    parts, depth, current = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return [p.strip() for p in parts]


def _constant(text: str, line: int) -> float:
    try:
        return eval_expr(parse_expression(text, n_vars=0), ())
    except NesError as exc:
        raise ProblemFileError(f"ожидалась константа {text!r}: {exc}", line) from exc


class ProblemFileReader:
    """Построчный разбор одного файла задачи."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.name: Optional[str] = None
        self.n: Optional[int] = None
        self.bounds: Dict[int, Tuple[float, float]] = {}
        self.equations: List[Expr] = []
        self.reductions: List[Tuple[int, str, int, int]] = []
        self.roots: List[Tuple[float, ...]] = []
        self.meta: Dict[str, str] = {}
        self.seen_sections: List[str] = []

    def read(self) -> Tuple[NesProblem, Optional[ReductionScheme]]:
        section = None
        for number, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            header = _HEADER_RE.match(line)
            if header:
                section = self._open_section(header.group(1), header.group(2), number)
                continue
            if section is None:
                raise ProblemFileError("строка вне секции", number)
            getattr(self, f"_line_{section}")(line, number)
        return self._build()

    def _open_section(self, section: str, rest: str, number: int) -> str:
        if section not in SECTIONS:
            raise ProblemFileError(f"неизвестная секция [{section}]", number)
        if section in self.seen_sections:
            raise ProblemFileError(f"секция [{section}] повторяется", number)
        if section != "problem" and self.n is None:
            raise ProblemFileError("первой должна идти секция [problem]", number)
        self.seen_sections.append(section)
        if section == "problem":
            pairs = _key_values(rest, number)
            try:
                self.name = pairs.pop("name")
                self.n = int(pairs.pop("vars"))
            except (KeyError, ValueError) as exc:
                raise ProblemFileError(
                    "в [problem] нужны name=<имя> и vars=<число>", number
                ) from exc
            if pairs:
                raise ProblemFileError(f"лишние ключи: {sorted(pairs)}", number)
            if self.n < 1:
                raise ProblemFileError("vars должно быть >= 1", number)
        elif section == "meta" and rest:
            self._line_meta(rest, number)
        elif rest:
            raise ProblemFileError(f"лишний текст после [{section}]", number)
        return section

    def _line_problem(self, line: str, number: int) -> None:
        if line.startswith("bounds"):
            body = line[len("bounds"):].lstrip(" :")
            for item in body.split(";"):
                if item.strip():
                    self._bound(item.strip(), number)
            return
        family = _FAMILY_RE.match(line)
        if family:
            self._family(family, number)
            return
        eq = _EQ_RE.match(line)
        if eq is None:
            raise ProblemFileError(f"непонятная строка {line!r}", number)
        index = int(eq.group(1))
        if index != len(self.equations) + 1:
            raise ProblemFileError(
                f"ожидалось eq{len(self.equations) + 1}, получено eq{index}", number
            )
        self.equations.append(self._expression(eq.group(2), number))

    def _bound(self, item: str, number: int) -> None:
        match = _BOUND_RE.match(item)
        if match is None:
            raise ProblemFileError(f"непонятная граница {item!r}", number)
        first = int(match.group(1))
        last = int(match.group(2) or first)
        lower = _constant(match.group(3), number)
        upper = _constant(match.group(4), number)
        if not lower < upper:
            raise ProblemFileError(
                f"нарушен порядок границ [{lower}, {upper}] для x{first}", number
            )
        for j in range(first, last + 1):
            if not 1 <= j <= self.n:
                raise ProblemFileError(f"x{j} вне x1..x{self.n}", number)
            if j in self.bounds:
                raise ProblemFileError(f"повторное объявление x{j}", number)
            self.bounds[j] = (lower, upper)

    def _expression(self, text: str, number: int) -> Expr:
        try:
            return parse_expression(text, n_vars=self.n)
        except ExpressionSyntaxError as exc:
            raise ProblemFileError(str(exc), number) from exc

    def _family(self, match: re.Match, number: int) -> None:
        name, first, last, body = match.groups()
        try:
            template = parse_expression(body, n_vars=self.n, index_names=(name,))
            for k in range(int(first), int(last) + 1):
                eq = template.substitute(name, k)
                bind(eq, self.n)
                self.equations.append(eq)
        except ExpressionSyntaxError as exc:
            raise ProblemFileError(str(exc), number) from exc

    def _line_reduction(self, line: str, number: int) -> None:
        match = _REDUCE_RE.match(line)
        if match is None:
            raise ProblemFileError(
                "ожидалось 'reduce xK = <соотношение> eliminates eqJ'", number
            )
        self.reductions.append(
            (int(match.group(1)), match.group(2).strip(), int(match.group(3)), number)
        )

    def _line_roots(self, line: str, number: int) -> None:
        key, sep, body = line.partition(":")
        if key.strip() != "root" or not sep:
            raise ProblemFileError("ожидалось 'root: c1, c2, ...'", number)
        root = tuple(_constant(part, number) for part in _split_top_level(body))
        if len(root) != self.n:
            raise ProblemFileError(
                f"корень из {len(root)} компонент при vars={self.n}", number
            )
        self.roots.append(root)

    def _line_meta(self, line: str, number: int) -> None:
        for key, value in _key_values(line, number).items():
            if key not in META_KEYS:
                raise ProblemFileError(f"неизвестный ключ [meta]: {key}", number)
            self.meta[key] = value

    def _build(self) -> Tuple[NesProblem, Optional[ReductionScheme]]:
        if self.n is None:
            raise ProblemFileError("нет секции [problem]")
        missing = [j for j in range(1, self.n + 1) if j not in self.bounds]
        if missing:
            names = ", ".join(f"x{j}" for j in missing)
            raise ProblemFileError(f"не заданы границы: {names}")
        if not self.equations:
            raise ProblemFileError("нет ни одного уравнения")
        try:
            nor = self._nor()
            nfes_max = int(self.meta.get("nfes_max", 50_000))
            epsilon = float(self.meta.get("epsilon", 0.02))
        except ValueError as exc:
            raise ProblemFileError(f"неверное значение в [meta]: {exc}") from exc
        problem = NesProblem(
            name=self.name,
            bounds=tuple(self.bounds[j] for j in range(1, self.n + 1)),
            equations=tuple(self.equations),
            nor=nor,
            known_roots=tuple(self.roots),
            nfes_max=nfes_max,
            epsilon=epsilon,
        )
        scheme = None
        if "reduction" in self.seen_sections:
            reduced = []
            for index, text, eliminates, number in self.reductions:
                try:
                    relation = parse_relation(text, n_vars=self.n)
                except ExpressionSyntaxError as exc:
                    raise ProblemFileError(str(exc), number) from exc
                reduced.append(ReducedVariable(index, relation, eliminates))
            scheme = ReductionScheme(n=problem.n, m=problem.m, reduced=tuple(reduced))
        return problem, scheme

    def _nor(self):
        value = self.meta.get("nor", UNKNOWN)
        if value in (INFINITE, UNKNOWN):
            return value
        count = int(value)
        if count < 1:
            raise ValueError(f"nor={count}")
        return count


def parse_problem_file(
    text: str, validate: bool = True
) -> Tuple[NesProblem, Optional[ReductionScheme]]:
    """
    Разобрать файл задачи.

    При ``validate=True`` схема редукции проверяется и любые нарушения
    поднимаются как ``ProblemFileError``.
    """
    problem, scheme = ProblemFileReader(text).read()
    if scheme is not None and validate:
        violations = validate_scheme(problem, scheme)
        if violations:
            details = "; ".join(v.message for v in violations)
            raise ProblemFileError(f"схема редукции некорректна: {details}")
    return problem, scheme


def _number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def format_problem(
    problem: NesProblem, scheme: Optional[ReductionScheme] = None
) -> str:
    """Каноническая печать задачи (семейства раскрываются в eqN)."""
    bounds = "; ".join(
        f"x{j} in [{_number(lo)}, {_number(hi)}]"
        for j, (lo, hi) in enumerate(problem.bounds, start=1)
    )
    lines = [f"[problem] name={problem.name} vars={problem.n}", f"bounds: {bounds}"]
    lines += [f"eq{i}: {eq}" for i, eq in enumerate(problem.equations, start=1)]
    if scheme is not None:
        lines.append("[reduction]")
        lines += [
            f"reduce x{r.index} = {r.relation} eliminates eq{r.eliminates}"
            for r in scheme.reduced
        ]
    if problem.known_roots:
        lines.append("[roots]")
        lines += [
            "root: " + ", ".join(_number(c) for c in root)
            for root in problem.known_roots
        ]
    lines.append(
        f"[meta] nor={problem.nor} nfes_max={problem.nfes_max} "
        f"epsilon={_number(problem.epsilon)}"
    )
    return "\n".join(lines) + "\n"
