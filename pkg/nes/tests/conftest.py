import math

import numpy as np
import pytest

from nes.services.problem_file import parse_problem_file
from nes.services.suite import entry_by_name

SQRT2_2 = math.sqrt(2) / 2

# средние IGD по F1-F7: (с редукцией, без редукции)
MEAN_IGD = [
    (1.57e-04, 2.05e-04),
    (1.71e-04, 6.09e-04),
    (1.78e-04, 3.82e-03),
    (2.20e-03, 1.23e-02),
    (5.96e-03, 4.08e-02),
    (1.10e-02, 2.21e-02),
    (9.44e-03, 1.84e-01),
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def f1():
    return entry_by_name("F1")


@pytest.fixture
def suite_entry():
    """Фабрика: запись набора по имени."""
    return entry_by_name


@pytest.fixture
def make_problem():
    """Фабрика: (задача, схема) из текста файла задачи."""

    def build(text, validate=True):
        return parse_problem_file(text, validate=validate)

    return build


@pytest.fixture
def one_pm_problem(make_problem):
    """Пример «x1 = 1 ± x2» с x1 в [0, 1]."""
    return make_problem(
        "[problem] name=one_pm vars=2\n"
        "bounds: x1 in [0, 1]; x2 in [-1, 1]\n"
        "eq1: (x1 - 1)^2 - x2^2\n"
        "eq2: x1 + x2 - 1\n"
        "[reduction]\n"
        "reduce x1 = 1 ± x2  eliminates eq1\n"
        "[meta] nor=unknown\n"
    )
