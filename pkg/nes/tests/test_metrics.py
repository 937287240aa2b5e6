import math

import numpy as np
import pytest

from nes.services import metrics
from nes.services.exceptions import SuiteError
from nes.services.suite import ground_truth

from .conftest import SQRT2_2


def _igd_brute_force(ip, ip_star):
    minima = [min(np.sqrt(np.sum((a - b) ** 2)) for b in ip) for a in ip_star]
    return float(np.mean(minima))


class TestIgd:
    def test_identity(self):
        front = metrics.images([0.1, 0.5, 0.9])
        assert metrics.igd(front, front) == 0.0

    def test_single_pair(self):
        assert metrics.igd([[1.0, 1.0]], [[0.0, 0.0]]) == pytest.approx(math.sqrt(2))

    def test_matches_brute_force(self, rng):
        for _ in range(200):
            ip = rng.uniform(-1, 2, (rng.integers(1, 20), 2))
            ip_star = rng.uniform(-1, 2, (rng.integers(1, 20), 2))
            expected = _igd_brute_force(ip, ip_star)
            assert metrics.igd(ip, ip_star) == expected

    def test_empty_approximation(self):
        assert metrics.igd(np.empty((0, 2)), [[0.0, 1.0]]) == math.inf

    def test_empty_reference(self):
        with pytest.raises(ValueError):
            metrics.igd([[0.0, 1.0]], np.empty((0, 2)))


class TestNof:
    def test_identity(self):
        front = metrics.images(np.linspace(-1, 1, 11))
        assert metrics.nof(front, front, 0.02) == 11

    def test_empty_approximation(self):
        assert metrics.nof(np.empty((0, 2)), [[0.0, 1.0]], 0.02) == 0

    def test_one_of_two(self):
        ip_star = [[0.5, 0.5], [-0.5, 1.5]]
        assert metrics.nof([[0.515, 0.5]], ip_star, 0.02) == 1

    def test_monotone_in_epsilon(self, rng):
        ip = rng.uniform(0, 1, (30, 2))
        ip_star = rng.uniform(0, 1, (30, 2))
        counts = [metrics.nof(ip, ip_star, eps) for eps in (0.01, 0.05, 0.1, 0.5)]
        assert counts == sorted(counts)

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValueError):
            metrics.nof([[0.0, 1.0]], [[0.0, 1.0]], 0.0)


class TestReferenceFront:
    def test_f1(self, f1):
        front = metrics.reference_front(f1.problem)
        np.testing.assert_allclose(
            sorted(front[:, 0]), [-SQRT2_2, SQRT2_2], rtol=0, atol=1e-15
        )
        np.testing.assert_allclose(front[:, 1], 1.0 - front[:, 0])

    def test_infinite_roots(self, suite_entry):
        entry = suite_entry("F5")
        front = metrics.reference_front(entry.problem, entry.scheme)
        assert front.shape == (100, 2)
        np.testing.assert_allclose(np.diff(front[:, 0]), 2.0 / 99)
        assert (front[0, 0], front[-1, 0]) == (-1.0, 1.0)

    def test_uses_first_core_variable(self, suite_entry):
        entry = suite_entry("F4")
        roots = ground_truth(entry)
        front = metrics.reference_front(entry.problem, entry.scheme, roots=roots)
        assert len(front) == 15
        np.testing.assert_array_equal(front[:, 0], [r[1] for r in roots])

    def test_oracle_roots(self, suite_entry):
        entry = suite_entry("F3")
        front = metrics.reference_front(entry.problem, roots=ground_truth(entry))
        assert len(front) == 11

    def test_missing_roots(self, suite_entry):
        with pytest.raises(SuiteError):
            metrics.reference_front(suite_entry("F3").problem)
        with pytest.raises(SuiteError):
            metrics.reference_front(suite_entry("trig3").problem)


def test_rr_and_sr():
    assert metrics.rr([11, 11, 10], 11) == pytest.approx(32 / 33)
    assert metrics.sr(metrics.successes([11, 11, 10], 11)) == pytest.approx(2 / 3)
    assert metrics.rr([2, 2], 2) == 1.0
    assert metrics.sr([True, True]) == 1.0
    assert metrics.rr([0, 0], 2) == 0.0
    assert metrics.sr([False]) == 0.0
    with pytest.raises(ValueError):
        metrics.rr([], 2)


def test_qr(f1, make_problem):
    assert metrics.qr(f1.problem, ground_truth(f1)) < 1e-18
    assert math.isnan(metrics.qr(f1.problem, []))
    plain, _ = make_problem(
        "[problem] name=plain vars=2\nbounds: x1..x2 in [-1, 1]\neq1: x1\neq2: x2\n"
    )
    assert metrics.qr(plain, [[1e-3, 2e-3]]) == pytest.approx(5e-6, rel=1e-12)


def test_match_roots():
    known = [[0.0, 0.0], [1.0, 1.0]]
    assert metrics.match_roots([[0.005, 0.0]], known) == 1
    assert metrics.match_roots([[0.0, 0.0], [1.0, 0.995]], known) == 2
    assert metrics.match_roots([[0.5, 0.5]], known) == 0
    assert metrics.match_roots([], known) == 0


def test_distinct_roots(f1):
    population = [
        [SQRT2_2, SQRT2_2],
        [SQRT2_2 + 1e-7, SQRT2_2 + 1e-7],
        [-SQRT2_2, -SQRT2_2],
        [0.0, 0.0],
    ]
    found = metrics.distinct_roots(f1.problem, population)
    assert found.shape == (2, 2)


def test_aggregate():
    agg = metrics.aggregate([1.0, 2.0, 3.0])
    assert (agg.best, agg.mean, agg.worst) == (1.0, 2.0, 3.0)
    assert agg.std == pytest.approx(math.sqrt(2 / 3))
    agg = metrics.aggregate([1.0, 2.0, 3.0], maximize=True)
    assert (agg.best, agg.worst) == (3.0, 1.0)
    assert metrics.aggregate([4.0]).std == 0.0
    assert metrics.aggregate([1.0, math.nan, 3.0]).mean == 2.0
    assert math.isnan(metrics.aggregate([math.nan]).mean)


def test_population_images():
    images = metrics.population_images([[0.25, 9.0], [0.5, -9.0]])
    np.testing.assert_array_equal(images, [[0.25, 0.75], [0.5, 0.5]])
    assert metrics.population_images([]).shape == (0, 2)
