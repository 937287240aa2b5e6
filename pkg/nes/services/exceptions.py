from __future__ import annotations

from typing import Optional


class NesError(Exception):
    """Базовая ошибка библиотеки."""


class DimensionMismatchError(NesError, ValueError):
    """Длина вектора не совпадает с размерностью задачи."""


class ExpressionSyntaxError(NesError, ValueError):
    """Синтаксическая ошибка в выражении (с позицией)."""

    def __init__(self, message: str, position: Optional[int] = None) -> None:
        self.position = position
        if position is not None:
            message = f"{message} (позиция {position})"
        super().__init__(message)


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class UnknownFunctionError(ExpressionSyntaxError):
    pass


class UnboundVariableError(NesError, KeyError):
    """Переменная не привязана к значению при вычислении."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unbound variable"


class ProblemFileError(NesError, ValueError):
    """Ошибка в файле задачи."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"строка {line}: {message}"
        super().__init__(message)


class SchemeError(NesError, ValueError):
    """Попытка использовать некорректную схему редукции."""


class SuiteError(NesError):
    pass


class ExperimentConfigError(NesError, ValueError):
    pass


class MisalignedReportsError(NesError, ValueError):
    pass


class StatisticsError(NesError, ValueError):
    pass
