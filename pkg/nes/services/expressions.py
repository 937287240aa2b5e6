"""
Деревья выражений для уравнений и соотношений редукции.

Выражение вычисляется как на одном векторе (результат — число), так и на
стопке столбцов целой популяции (``values[j]`` — массив значений x_{j+1}),
арифметика при этом одна и та же.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from nes.services.exceptions import (
    ExpressionSyntaxError,
    UnboundVariableError,
    UnknownFunctionError,
    UnknownIdentifierError,
)

Env = Mapping[str, int]

FUNCTIONS = {
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "ln": np.log,
}

BINARY_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}
_NEG_PRECEDENCE = 3
_ATOM = 5
# целые показатели до этого модуля считаем умножением
_MAX_EXACT_POWER = 8

_EMPTY_ENV: Dict[str, int] = {}


class Expr:
    """Узел дерева выражения (неизменяемый)."""

    precedence = _ATOM

    def evaluate(self, values: Sequence, env: Env = _EMPTY_ENV):
        raise NotImplementedError

    def variables(self, env: Env = _EMPTY_ENV) -> FrozenSet[int]:
        """Индексы переменных (с 1), от которых зависит выражение."""
        raise NotImplementedError

    def substitute(self, name: str, value: int) -> "Expr":
        """Заменить индексное имя ``name`` целой константой."""
        return self


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))

    def evaluate(self, values, env=_EMPTY_ENV):
        return self.value

    def variables(self, env=_EMPTY_ENV):
        return frozenset()

    def __str__(self) -> str:
        if self.value == math.pi:
            return "pi"
        if self.value.is_integer() and abs(self.value) < 1e15:
            text = str(int(self.value))
        else:
            text = repr(self.value)
        return f"({text})" if self.value < 0 else text


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def evaluate(self, values, env=_EMPTY_ENV):
        if not 1 <= self.index <= len(values):
            raise UnboundVariableError(f"x{self.index}")
        return values[self.index - 1]

    def variables(self, env=_EMPTY_ENV):
        return frozenset({self.index})

    def __str__(self) -> str:
        return f"x{self.index}"


@dataclass(frozen=True)
class IndexName(Expr):
    """Индексное имя, связанное ``sum(...)`` или семейством уравнений."""

    name: str

    def evaluate(self, values, env=_EMPTY_ENV):
        if self.name not in env:
            raise UnboundVariableError(self.name)
        return float(env[self.name])

    def variables(self, env=_EMPTY_ENV):
        return frozenset()

    def substitute(self, name, value):
        return Const(float(value)) if name == self.name else self

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IndexedVar(Expr):
    """``x[<индекс>]`` внутри суммы."""

    index: Expr

    def resolve(self, env: Env) -> int:
        return _as_index(self.index, env)

    def evaluate(self, values, env=_EMPTY_ENV):
        return Var(self.resolve(env)).evaluate(values, env)

    def variables(self, env=_EMPTY_ENV):
        return frozenset({self.resolve(env)})

    def substitute(self, name, value):
        return IndexedVar(self.index.substitute(name, value))

    def __str__(self) -> str:
        return f"x[{self.index}]"


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    child: Expr

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return _NEG_PRECEDENCE if self.op == "neg" else _ATOM

    def evaluate(self, values, env=_EMPTY_ENV):
        inner = self.child.evaluate(values, env)
        with np.errstate(all="ignore"):
            if self.op == "neg":
                return np.negative(inner)
            return FUNCTIONS[self.op](inner)

    def variables(self, env=_EMPTY_ENV):
        return self.child.variables(env)

    def substitute(self, name, value):
        return Unary(self.op, self.child.substitute(name, value))

    def __str__(self) -> str:
        if self.op != "neg":
            return f"{self.op}({self.child})"
        child = self.child
        if isinstance(child, Const) and child.value >= 0:
            # "-3" читается как отрицательная константа
            return f"-({child})"
        text = str(child)
        if child.precedence < _NEG_PRECEDENCE:
            text = f"({text})"
        return f"-{text}"


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self) -> int:  # type: ignore[override]
        return _PRECEDENCE[self.op]

    def evaluate(self, values, env=_EMPTY_ENV):
        if self.op == "pow":
            return self._power(values, env)
        left = self.left.evaluate(values, env)
        right = self.right.evaluate(values, env)
        with np.errstate(all="ignore"):
            if self.op == "add":
                return np.add(left, right)
            if self.op == "sub":
                return np.subtract(left, right)
            if self.op == "mul":
                return np.multiply(left, right)
            return np.divide(left, right)

    def _power(self, values, env):
        base = self.left.evaluate(values, env)
        exponent = self.right
        with np.errstate(all="ignore"):
            if (
                isinstance(exponent, Const)
                and exponent.value.is_integer()
                and abs(exponent.value) <= _MAX_EXACT_POWER
            ):
                k = int(exponent.value)
                result = np.ones_like(np.asarray(base, dtype=float))
                for _ in range(abs(k)):
                    result = result * base
                return np.divide(1.0, result) if k < 0 else result
            return np.power(
                np.asarray(base, dtype=float),
                exponent.evaluate(values, env),
            )

    def variables(self, env=_EMPTY_ENV):
        return self.left.variables(env) | self.right.variables(env)

    def substitute(self, name, value):
        return Binary(
            self.op,
            self.left.substitute(name, value),
            self.right.substitute(name, value),
        )

    def __str__(self) -> str:
        prec = self.precedence
        left, right = str(self.left), str(self.right)
        if self.op == "pow":
            if self.left.precedence <= prec:
                left = f"({left})"
            if self.right.precedence < prec:
                right = f"({right})"
        else:
            if self.left.precedence < prec:
                left = f"({left})"
            if self.right.precedence <= prec:
                right = f"({right})"
        return f"{left} {BINARY_SYMBOLS[self.op]} {right}"


@dataclass(frozen=True)
class Sum(Expr):
    """``sum(i=a..b, body)``; пустой диапазон даёт 0."""

    name: str
    lower: Expr
    upper: Expr
    body: Expr

    def _range(self, env: Env) -> range:
        return range(_as_index(self.lower, env), _as_index(self.upper, env) + 1)

    def evaluate(self, values, env=_EMPTY_ENV):
        total = 0.0
        scope = dict(env)
        with np.errstate(all="ignore"):
            for k in self._range(env):
                scope[self.name] = k
                total = total + self.body.evaluate(values, scope)
        return total

    def variables(self, env=_EMPTY_ENV):
        found: FrozenSet[int] = frozenset()
        scope = dict(env)
        for k in self._range(env):
            scope[self.name] = k
            found = found | self.body.variables(scope)
        return found

    def substitute(self, name, value):
        lower = self.lower.substitute(name, value)
        upper = self.upper.substitute(name, value)
        body = self.body if name == self.name else self.body.substitute(name, value)
        return Sum(self.name, lower, upper, body)

    def __str__(self) -> str:
        return f"sum({self.name}={self.lower}..{self.upper}, {self.body})"


def _as_index(expr: Expr, env: Env) -> int:
    value = float(expr.evaluate((), env))
    if not value.is_integer():
        raise ExpressionSyntaxError(f"индекс '{expr}' не целый: {value}")
    return int(value)


@dataclass(frozen=True)
class MultiExpr:
    """
    Соотношение редукции с одним или несколькими кандидатами.

    ``head ± tail`` даёт два кандидата (сначала ветка «+»); без ``±``
    кандидат один — ``tail``.
    """

    tail: Expr
    head: Optional[Expr] = None
    branching: bool = False

    @property
    def candidates(self) -> Tuple[Expr, ...]:
        if not self.branching:
            return (self.tail,)
        if self.head is None:
            return (self.tail, Unary("neg", self.tail))
        return (
            Binary("add", self.head, self.tail),
            Binary("sub", self.head, self.tail),
        )

    def evaluate(self, values: Sequence) -> List:
        return [c.evaluate(values) for c in self.candidates]

    def variables(self) -> FrozenSet[int]:
        found: FrozenSet[int] = frozenset()
        for candidate in self.candidates:
            found = found | candidate.variables()
        return found

    def __str__(self) -> str:
        if not self.branching:
            return str(self.tail)
        tail = str(self.tail)
        if self.tail.precedence <= _PRECEDENCE["add"]:
            tail = f"({tail})"
        if self.head is None:
            return f"±{tail}"
        return f"{self.head} ± {tail}"


# --- разбор -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.(?!\.)\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\.\.|\+-|±|[-+*/^(),\[\]=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> Iterator[Token]:
    position = 0
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        if match is None:
            raise ExpressionSyntaxError(
                f"неожиданный символ {text[position]!r}", position
            )
        kind = match.lastgroup or ""
        if kind != "ws":
            token_text = match.group()
            if token_text == "+-":
                token_text = "±"
            yield Token(kind, token_text, position)
        position = match.end()
    yield Token("end", "", len(text))


class Parser:
    """
    Рекурсивный спуск с приоритетами: ``+ -`` < ``* /`` < унарный минус <
    ``^`` (правоассоциативный).
    """

    def __init__(
        self,
        text: str,
        n_vars: Optional[int] = None,
        index_names: Sequence[str] = (),
    ) -> None:
        if not text.strip():
            raise ExpressionSyntaxError("пустое выражение", 0)
        self.text = text
        self.n_vars = n_vars
        self.tokens = list(tokenize(text))
        self.pos = 0
        self.scope: List[str] = list(index_names)

    # служебное
    @property
    def token(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text: str) -> Token:
        if self.token.text != text:
            raise ExpressionSyntaxError(
                f"ожидалось {text!r}, получено {self.token.text or 'конец'!r}",
                self.token.position,
            )
        return self.advance()

    def finish(self) -> None:
        if self.token.kind != "end":
            raise ExpressionSyntaxError(
                f"лишний текст {self.token.text!r}", self.token.position
            )

    # грамматика
    def parse(self) -> Expr:
        expr = self.additive()
        self.finish()
        return expr

    def parse_relation(self) -> MultiExpr:
        if self.token.text == "±":
            self.advance()
            tail = self.additive()
            self.finish()
            return MultiExpr(tail=tail, branching=True)
        head = self.additive()
        if self.token.text == "±":
            self.advance()
            tail = self.additive()
            self.finish()
            return MultiExpr(tail=tail, head=head, branching=True)
        self.finish()
        return MultiExpr(tail=head)

    def additive(self) -> Expr:
        left = self.multiplicative()
        while self.token.text in ("+", "-"):
            op = "add" if self.advance().text == "+" else "sub"
            left = Binary(op, left, self.multiplicative())
        return left

    def multiplicative(self) -> Expr:
        left = self.unary()
        while self.token.text in ("*", "/"):
            op = "mul" if self.advance().text == "*" else "div"
            left = Binary(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.token.text == "-":
            self.advance()
            if self.token.kind == "number" and self.tokens[self.pos + 1].text != "^":
                return Const(-float(self.advance().text))
            return Unary("neg", self.unary())
        if self.token.text == "+":
            self.advance()
            return self.unary()
        if self.token.text == "±":
            raise ExpressionSyntaxError(
                "'±' допустим только на верхнем уровне соотношения редукции",
                self.token.position,
            )
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.token.text == "^":
            self.advance()
            return Binary("pow", base, self.unary())
        return base

    def primary(self) -> Expr:
        token = self.token
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.text == "(":
            self.advance()
            expr = self.additive()
            self.expect(")")
            return expr
        if token.kind == "ident":
            return self.identifier()
        raise ExpressionSyntaxError(
            f"неожиданный токен {token.text or 'конец'!r}", token.position
        )

    def identifier(self) -> Expr:
        token = self.advance()
        name = token.text
        if self.token.text == "(":
            if name == "sum":
                return self.summation(token)
            if name not in FUNCTIONS:
                raise UnknownFunctionError(
                    f"неизвестная функция {name!r}", token.position
                )
            self.advance()
            child = self.additive()
            self.expect(")")
            return Unary(name, child)
        if name == "x" and self.token.text == "[":
            self.advance()
            index = self.additive()
            self.expect("]")
            return IndexedVar(index)
        if name == "pi":
            return Const(math.pi)
        if name in self.scope:
            return IndexName(name)
        match = re.fullmatch(r"x([1-9]\d*)", name)
        if match:
            index = int(match.group(1))
            if self.n_vars is not None and index > self.n_vars:
                raise UnknownIdentifierError(
                    f"переменная {name} вне x1..x{self.n_vars}", token.position
                )
            return Var(index)
        raise UnknownIdentifierError(
            f"неизвестный идентификатор {name!r}", token.position
        )

    def summation(self, token: Token) -> Expr:
        self.expect("(")
        name_token = self.advance()
        if name_token.kind != "ident":
            raise ExpressionSyntaxError(
                "ожидалось имя индекса суммы", name_token.position
            )
        self.expect("=")
        lower = self.additive()
        self.expect("..")
        upper = self.additive()
        self.expect(",")
        self.scope.append(name_token.text)
        try:
            body = self.additive()
        finally:
            self.scope.pop()
        self.expect(")")
        return Sum(name_token.text, lower, upper, body)


def parse_expression(
    text: str,
    n_vars: Optional[int] = None,
    index_names: Sequence[str] = (),
) -> Expr:
    """
    Разобрать выражение уравнения.

    Args:
        text: исходный текст.
        n_vars: число переменных задачи (для проверки x1..xN).
        index_names: индексные имена, связанные снаружи (семейства уравнений).
    """
    expr = Parser(text, n_vars, index_names).parse()
    if n_vars is not None and not index_names:
        bind(expr, n_vars)
    return expr


def parse_relation(text: str, n_vars: Optional[int] = None) -> MultiExpr:
    """Разобрать правую часть соотношения редукции (допускает ``±``)."""
    relation = Parser(text, n_vars).parse_relation()
    if n_vars is not None:
        for candidate in relation.candidates:
            bind(candidate, n_vars)
    return relation


def bind(expr: Expr, n_vars: int) -> FrozenSet[int]:
    """Проверить, что выражение ссылается только на x1..x{n_vars}."""
    used = expr.variables()
    outside = sorted(i for i in used if not 1 <= i <= n_vars)
    if outside:
        names = ", ".join(f"x{i}" for i in outside)
        raise UnknownIdentifierError(f"переменные вне x1..x{n_vars}: {names}")
    return used


def eval_expr(expr: Expr, assignment: Sequence[float]) -> float:
    """Вычислить выражение в точке (IEEE double)."""
    return float(expr.evaluate(np.asarray(assignment, dtype=float)))
