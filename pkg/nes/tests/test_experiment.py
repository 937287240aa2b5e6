import json

import pandas as pd
import pytest

from nes.services.exceptions import ExperimentConfigError, MisalignedReportsError
from nes.services.experiment import (
    ALGORITHMS,
    DR_JADE,
    MONES,
    SUMMARY_COLUMNS,
    VR_DR_JADE,
    VR_MONES,
    ExperimentConfig,
    RunReport,
    build_tasks,
    cell_seed,
    compare,
    load_config,
    mean_trace,
    means_by_problem,
    rank,
    read_summary,
    run_experiment,
)

from .conftest import MEAN_IGD


def _config_file(tmp_path, body, name="exp.env"):
    path = tmp_path / name
    path.write_text(body, encoding="utf-8")
    return path


def _tiny(tmp_path, out="out", **overrides):
    values = dict(
        problems=["F1"],
        algorithms=list(ALGORITHMS),
        runs=2,
        seed=7,
        out=tmp_path / out,
        nfes_max=400,
        pop_size=20,
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def _summary(columns):
    rows = []
    for problem, values in enumerate(zip(*columns.values()), start=1):
        for algorithm, mean in zip(columns, values):
            rows.append([f"F{problem}", algorithm, "igd", mean, mean, mean, 0.0])
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


class TestCellSeed:
    def test_deterministic(self):
        assert cell_seed(1, "F1", MONES, 0) == cell_seed(1, "F1", MONES, 0)

    def test_every_component_matters(self):
        base = cell_seed(1, "F1", MONES, 0)
        assert base != cell_seed(2, "F1", MONES, 0)
        assert base != cell_seed(1, "F2", MONES, 0)
        assert base != cell_seed(1, "F1", VR_MONES, 0)
        assert base != cell_seed(1, "F1", MONES, 1)

    def test_fits_64_bits(self):
        assert 0 <= cell_seed(20240901, "nine_roots", DR_JADE, 29) < 2**64


class TestLoadConfig:
    def test_defaults(self, tmp_path, settings):
        settings.NES_DEFAULT_SEED = 99
        path = _config_file(tmp_path, "PROBLEMS=F1, F3\nALGORITHMS=MONES\n")
        config = load_config(path)
        assert config.problems == ["F1", "F3"]
        assert config.algorithms == [MONES]
        assert (config.runs, config.pop_size, config.seed) == (30, 100, 99)
        assert config.restart and config.nfes_max is None

    def test_file_values_and_overrides(self, tmp_path):
        path = _config_file(
            tmp_path,
            "# комментарий\nPROBLEMS=F1\nALGORITHMS=DR-JADE,VR-DR-JADE\nRUNS=3\n"
            "SEED=5\nNFES_MAX=2000\nPOP_SIZE=20\nRESTART=0\nOUT=results\n",
        )
        config = load_config(path, seed=11, out=None)
        assert config.algorithms == [DR_JADE, VR_DR_JADE]
        assert (config.runs, config.seed, config.nfes_max) == (3, 11, 2000)
        assert str(config.out) == "results"
        assert not config.restart

    @pytest.mark.parametrize(
        "body",
        [
            "PROBLEMS=F1\nALGORITHMS=MONES\nCOLOUR=red\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nRESTART=2\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nRUNS=0\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nRUNS=many\n",
            "PROBLEMS=F1\nALGORITHMS=SADE\n",
            "PROBLEMS=\nALGORITHMS=MONES\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nNFES_MAX=50\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nGENERATIONS=0\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nPOP_SIZE=101\n",
            "PROBLEMS=F1\nALGORITHMS=MONES\nPOP_SIZE=2\n",
        ],
    )
    def test_errors(self, tmp_path, body):
        with pytest.raises(ExperimentConfigError):
            load_config(_config_file(tmp_path, body))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ExperimentConfigError):
            load_config(tmp_path / "absent.env")


def test_build_tasks(tmp_path):
    tasks = build_tasks(_tiny(tmp_path))
    assert len(tasks) == 1 * 4 * 2
    assert {t.nfes_max for t in tasks} == {400}
    assert len({t.seed for t in tasks}) == len(tasks)

    tasks = build_tasks(_tiny(tmp_path, nfes_max=None))
    assert {t.nfes_max for t in tasks} == {50000}


def test_run_experiment_outputs(tmp_path):
    result = run_experiment(_tiny(tmp_path))
    assert result.failures == []
    assert [r.key for r in result.reports] == sorted(r.key for r in result.reports)
    assert all(r.evaluations <= 400 for r in result.reports)

    out = tmp_path / "out"
    for algorithm in ALGORITHMS:
        for run in range(2):
            path = out / "F1" / algorithm / f"run_{run}.json"
            payload = json.loads(path.read_text(encoding="utf-8"))
            assert payload["algorithm"] == algorithm
            assert "wall_time" not in payload
    assert (out / "F1" / MONES / "trace.csv").exists()
    assert (out / "summary.json").exists()

    summary = read_summary(out / "summary.csv")
    mones = summary[summary["algorithm"] == MONES]
    assert {"igd", "nof", "rr", "sr", "roots_found"} <= set(mones["indicator"])
    dr = summary[summary["algorithm"] == DR_JADE]
    assert "igd" not in set(dr["indicator"])


def test_run_experiment_is_reproducible(tmp_path):
    run_experiment(_tiny(tmp_path, out="a"))
    run_experiment(_tiny(tmp_path, out="b"))
    for algorithm in ALGORITHMS:
        name = f"F1/{algorithm}/run_1.json"
        first, second = tmp_path / "a" / name, tmp_path / "b" / name
        assert first.read_bytes() == second.read_bytes()


def test_indicators_for_unknown_root_count(tmp_path):
    result = run_experiment(
        _tiny(tmp_path, problems=["trig3"], algorithms=[VR_MONES], runs=1), write=False
    )
    [report] = result.reports
    assert report.error is None
    assert report.indicators.igd is None and report.indicators.rr is None
    assert report.indicators.roots_found == len(report.roots)


def test_reduction_without_scheme_is_a_cell_error(tmp_path):
    config = _tiny(tmp_path, problems=["nine_roots"], algorithms=[VR_DR_JADE], runs=1)
    result = run_experiment(config, write=False)
    [report] = result.failures
    assert "схемы редукции" in report.error
    assert result.summary.empty


def test_non_finite_values_become_null():
    report = RunReport(problem="F1", algorithm=MONES, run=0, seed=1, budget=100)
    report.indicators.qr = float("nan")
    report.trace = [{"generation": 0, "igd": float("inf")}]
    payload = report.to_json()
    assert payload["indicators"]["qr"] is None
    assert payload["trace"][0]["igd"] is None


def test_mean_trace():
    reports = []
    for values in ([1.0, 0.5], [3.0, 1.5]):
        report = RunReport(problem="F1", algorithm=MONES, run=0, seed=1, budget=100)
        report.trace = [{"generation": g, "igd": v} for g, v in enumerate(values)]
        reports.append(report)
    trace = mean_trace(reports)
    assert list(trace["igd"]) == [2.0, 1.0]
    assert mean_trace([]).empty


def test_compare_and_rank():
    with_reduction, without = zip(*MEAN_IGD)
    summary = _summary({VR_MONES: with_reduction, MONES: without})
    result = compare(summary, VR_MONES, MONES)
    assert (result.r_plus, result.p_value) == (28.0, 0.015625)

    ranks = rank(summary, [VR_MONES, MONES])
    assert list(ranks) == [1.0, 2.0]
    ranks = rank(summary, [VR_MONES, MONES], minimize=False)
    assert list(ranks) == [2.0, 1.0]


def test_misaligned_problem_sets():
    summary = _summary({VR_MONES: [1.0] * 6, MONES: [2.0] * 6})
    summary = summary.drop(index=0)
    with pytest.raises(MisalignedReportsError):
        compare(summary, VR_MONES, MONES)
    with pytest.raises(MisalignedReportsError):
        rank(summary, [VR_MONES, MONES])


def test_read_summary_errors(tmp_path):
    with pytest.raises(ExperimentConfigError):
        read_summary(tmp_path / "summary.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("problem,mean\nF1,1.0\n", encoding="utf-8")
    with pytest.raises(ExperimentConfigError):
        read_summary(bad)


def test_summary_csv_round_trip(tmp_path):
    result = run_experiment(_tiny(tmp_path))
    summary = read_summary(tmp_path / "out" / "summary.csv")
    pd.testing.assert_frame_equal(summary, result.summary, check_exact=True)


@pytest.fixture(scope="module")
def f1_f7():
    config = ExperimentConfig(
        problems=[f"F{k}" for k in range(1, 8)],
        algorithms=[MONES, VR_MONES],
        runs=30,
        seed=20240901,
    )
    return run_experiment(config, write=False)


def _cell(result, problem, algorithm):
    return [
        r for r in result.reports if (r.problem, r.algorithm) == (problem, algorithm)
    ]


@pytest.mark.slow
@pytest.mark.parametrize("problem", ["F1", "F2"])
def test_reduction_reaches_every_root(f1_f7, problem):
    assert f1_f7.failures == []
    reduced = _cell(f1_f7, problem, VR_MONES)
    plain = _cell(f1_f7, problem, MONES)
    assert len(reduced) == len(plain) == 30
    assert all(r.indicators.nof == 2 for r in reduced)
    assert sum(r.indicators.igd for r in reduced) / 30 <= 1e-3
    assert sum(r.indicators.igd for r in plain) / 30 <= 5e-3


@pytest.mark.slow
def test_reduction_improves_f1_f7(f1_f7):
    summary = f1_f7.summary
    igd_reduced = means_by_problem(summary, VR_MONES, "igd")
    igd_plain = means_by_problem(summary, MONES, "igd")
    nof_reduced = means_by_problem(summary, VR_MONES, "nof")
    nof_plain = means_by_problem(summary, MONES, "nof")
    assert len(igd_reduced) == len(igd_plain) == 7
    better = [p for p in igd_plain if igd_reduced[p] < igd_plain[p]]
    assert len(better) >= 6
    assert all(nof_reduced[p] >= nof_plain[p] for p in nof_plain)


@pytest.mark.slow
def test_f4_convergence_trace(f1_f7):
    reduced = mean_trace(_cell(f1_f7, "F4", VR_MONES))
    plain = mean_trace(_cell(f1_f7, "F4", MONES))
    assert len(reduced) == len(plain) == 500
    assert reduced["igd"].iloc[-1] * 10 <= reduced["igd"].iloc[0]
    assert reduced["igd"].iloc[-1] < plain["igd"].iloc[-1]
