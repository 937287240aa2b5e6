import math

import numpy as np
import pytest

from nes.services.transforms import (
    RepulsionConfig,
    RootArchive,
    archive_try_add,
    default_gammas,
    gamma_at,
    mones_objectives,
    repulsion_value,
    zeta,
)


def _erf_series(x, terms=30):
    total = sum(
        (-1) ** n * x ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
        for n in range(terms)
    )
    return 2.0 / math.sqrt(math.pi) * total


@pytest.fixture
def cfg():
    return RepulsionConfig(t_max=10, gamma_min=2.0, gamma_max=2.0)


def test_gamma_schedule():
    cfg = RepulsionConfig(t_max=100, gamma_min=0.1, gamma_max=1.0)
    assert gamma_at(cfg, 0) == 1.0
    assert gamma_at(cfg, 100) == 0.1
    assert gamma_at(cfg, 50) == pytest.approx(0.1 + 0.25 * 0.9)
    values = [gamma_at(cfg, t) for t in range(101)]
    assert all(a >= b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("t", [-1, 101])
def test_gamma_outside_schedule(t):
    cfg = RepulsionConfig(t_max=100, gamma_min=0.1, gamma_max=1.0)
    with pytest.raises(ValueError):
        gamma_at(cfg, t)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma_min": 0.0, "gamma_max": 1.0},
        {"gamma_min": 2.0, "gamma_max": 1.0},
        {"gamma_min": 0.1, "gamma_max": 1.0, "rho": 0.0},
        {"gamma_min": 0.1, "gamma_max": 1.0, "zeta_cap": 0.5},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RepulsionConfig(t_max=10, **kwargs)


def test_default_gammas(f1, suite_entry, make_problem):
    assert default_gammas(f1.problem) == (0.02, 1.0)
    assert default_gammas(suite_entry("trig3").problem) == (0.04, 2.0)
    unit, _ = make_problem("[problem] name=u vars=1\nbounds: x1 in [0, 1]\neq1: x1\n")
    assert default_gammas(unit) == (0.01, 0.5)


def test_default_gammas_over_search_variables(suite_entry):
    problem = suite_entry("trig3").problem
    # x2 in [-1, 3] ширина 4, x3 в [-5, 5] ширина 10
    assert default_gammas(problem, variables=[3]) == (0.1, 5.0)


def test_zeta(cfg):
    assert zeta(cfg, 1.0, 2.0) == pytest.approx(1.0 / _erf_series(0.1), abs=1e-6)
    assert zeta(cfg, 1.0, 2.0) == pytest.approx(8.8919, abs=1e-4)
    assert zeta(cfg, 0.0, 2.0) == cfg.zeta_cap
    assert zeta(cfg, 3.0, 2.0) == 1.0


def test_repulsion_with_empty_archive(cfg, rng):
    archive = RootArchive()
    for x in rng.uniform(-1, 1, (1000, 2)):
        g = float(np.sum(x**2))
        assert repulsion_value(cfg, g, x, archive, 0) == g


def test_repulsion_near_and_far(cfg):
    archive = RootArchive()
    assert archive.try_add([0.0, 0.0], 0.0)
    near = repulsion_value(cfg, 0.5, [1.0, 0.0], archive, 0)
    assert near == pytest.approx(0.5 / _erf_series(0.1), abs=1e-6)
    assert repulsion_value(cfg, 0.5, [3.0, 0.0], archive, 0) == 0.5


def test_repulsion_never_below_g(cfg, rng):
    archive = RootArchive()
    archive.try_add([0.2, 0.2], 0.0)
    archive.try_add([-0.5, 0.3], 0.0)
    for x in rng.uniform(-1, 1, (200, 2)):
        assert repulsion_value(cfg, 0.1, x, archive, 5) >= 0.1


def test_archive_dedup():
    archive = RootArchive()
    assert archive_try_add(archive, [0.5, 0.5], 0.0)
    assert not archive_try_add(archive, [0.5, 0.5], 0.0)
    assert not archive_try_add(archive, [0.505, 0.5], 0.0)
    assert archive_try_add(archive, [0.52, 0.5], 0.0)
    assert not archive_try_add(archive, [0.9, 0.9], 1e-5)
    assert len(archive) == 2


def test_archive_keeps_full_vectors():
    archive = RootArchive()
    archive.try_add([0.3], 1e-12, full=[0.3, 0.3])
    assert archive.points.shape == (1, 1)
    assert archive.full_vectors == [(0.3, 0.3)]


def test_mones_objectives():
    assert mones_objectives(0.3, [0.0, 0.0]) == (0.3, 0.7)
    assert mones_objectives(0.0, [1.0, -1.0]) == (2.0, 3.0)
    assert mones_objectives(0.5, []) == (0.5, 0.5)


def test_mones_root_images_lie_on_line(rng):
    for x in rng.uniform(-1, 1, 50):
        g1, g2 = mones_objectives(x, [0.0, 0.0, 0.0])
        assert g1 + g2 == pytest.approx(1.0, abs=1e-15)
