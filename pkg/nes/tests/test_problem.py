import math

import numpy as np
import pytest

from nes.services.exceptions import DimensionMismatchError, ProblemFileError
from nes.services.expressions import parse_expression
from nes.services.problem import (
    NesProblem,
    evaluate_residuals,
    in_bounds,
    is_root,
    residual_l1,
    residual_sq,
    residual_sq_batch,
)

from .conftest import SQRT2_2


def _f1(x):
    return [x[0] ** 2 + x[1] ** 2 - 1, x[0] - x[1]]


def _f2(x):
    return [np.sum(x**2) - 1, abs(x[0] - x[1]) + np.sum(x[2:] ** 2)]


def _f3(x):
    return [x[0] - math.sin(5 * math.pi * x[0]), x[0] - x[1]]


def _f4(x):
    return [x[0] - math.cos(4 * math.pi * x[1]), x[0] ** 2 + x[1] ** 2 - 1]


def _f5(x):
    return [x[0] + x[1] + x[2] - 1, x[0] - x[1] ** 3]


def _f6(x):
    x1, x2, x3, x4, x5, x6 = x
    return [
        x1**2 + x3**2 - 1,
        x2**2 + x4**2 - 1,
        x5 * x3**3 + x6 * x4**3,
        x5 * x1**3 + x6 * x2**3,
        x5 * x1 * x3**2 + x6 * x4**2 * x2,
        x5 * x3 * x1**2 + x6 * x2**2 * x4,
    ]


def _f7(x):
    out = []
    for k in range(1, 20):
        inner = sum(x[i - 1] * x[i + k - 1] for i in range(1, 20 - k + 1))
        out.append((x[k - 1] + inner) * x[19])
    out.append(sum(x[:19]) + 1)
    return out


@pytest.mark.parametrize(
    "name, reference",
    [
        ("F1", _f1),
        ("F2", _f2),
        ("F3", _f3),
        ("F4", _f4),
        ("F5", _f5),
        ("F6", _f6),
        ("F7", _f7),
    ],
)
def test_suite_equations_match_closed_form(suite_entry, rng, name, reference):
    problem = suite_entry(name).problem
    X = problem.lower + rng.random((200, problem.n)) * (problem.upper - problem.lower)
    expected = np.array([reference(x) for x in X])
    np.testing.assert_allclose(
        problem.residual_matrix(X), expected, rtol=1e-12, atol=1e-12
    )


def test_f1_root_residuals(f1):
    residuals = evaluate_residuals(f1.problem, [SQRT2_2, SQRT2_2])
    np.testing.assert_allclose(residuals, [0.0, 0.0], atol=1e-15)
    assert is_root(f1.problem, [SQRT2_2, SQRT2_2])


def test_f1_origin(f1):
    assert residual_l1(f1.problem, [0.0, 0.0]) == 1.0
    assert residual_sq(f1.problem, [0.0, 0.0]) == 1.0
    assert not is_root(f1.problem, [0.0, 0.0])


def test_trig3_residuals(suite_entry):
    residuals = evaluate_residuals(suite_entry("trig3").problem, [0.0, 1.0, 4.0])
    np.testing.assert_allclose(residuals, [-14.0, 0.0, math.cos(4.0)], atol=1e-15)


def test_in_bounds_and_out_of_bounds_root(make_problem):
    problem, _ = make_problem(
        "[problem] name=line vars=1\nbounds: x1 in [0, 1]\neq1: x1 - 2\n"
    )
    assert in_bounds(problem, [1.0])
    assert not in_bounds(problem, [2.0])
    # невязка нулевая, но точка вне границ
    assert residual_sq(problem, [2.0]) == 0.0
    assert not is_root(problem, [2.0])


def test_batch_matches_single(f1, rng):
    X = rng.uniform(-1, 1, (50, 2))
    batch = residual_sq_batch(f1.problem, X)
    single = [residual_sq(f1.problem, x) for x in X]
    np.testing.assert_allclose(batch, single, rtol=1e-15)


def test_nan_residual_is_not_root(make_problem):
    problem, _ = make_problem(
        "[problem] name=root vars=1\nbounds: x1 in [-1, 1]\neq1: sqrt(x1)\n"
    )
    assert math.isnan(residual_sq(problem, [-0.5]))
    assert not is_root(problem, [-0.5])


@pytest.mark.parametrize("x", [[0.0], [0.0, 0.0, 0.0]])
def test_dimension_mismatch(f1, x):
    with pytest.raises(DimensionMismatchError):
        evaluate_residuals(f1.problem, x)


def test_constructor_checks():
    with pytest.raises(ProblemFileError):
        NesProblem(name="empty", bounds=((0.0, 1.0),), equations=())
    with pytest.raises(DimensionMismatchError):
        NesProblem(
            name="root",
            bounds=((0.0, 1.0),),
            equations=(parse_expression("x1", n_vars=1),),
            known_roots=((0.0, 0.0),),
        )
