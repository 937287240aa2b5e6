"""
Пакетный запуск экспериментов: задачи x алгоритмы x прогоны, индикаторы,
агрегаты в формате best/mean/worst/std, трассы сходимости, сравнения.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from django.conf import settings
from dotenv import dotenv_values

from nes.services import metrics
from nes.services.exceptions import (
    ExperimentConfigError,
    MisalignedReportsError,
    NesError,
    SuiteError,
)
from nes.services.optimizers import DeParams, GaParams, dr_loop, mones_run
from nes.services.optimizers.mones import generations_for_budget
from nes.services.problem import UNKNOWN, residual_sq
from nes.services.stats import WilcoxonResult, friedman_ranks, wilcoxon_signed_rank
from nes.services.suite import SuiteEntry, ground_truth, resolve_problem

logger = logging.getLogger(__name__)

MONES = "MONES"
VR_MONES = "VR-MONES"
DR_JADE = "DR-JADE"
VR_DR_JADE = "VR-DR-JADE"
ALGORITHMS = (MONES, VR_MONES, DR_JADE, VR_DR_JADE)
ALGORITHM_IDS = {name: i for i, name in enumerate(ALGORITHMS)}

INDICATORS = ("igd", "nof", "rr", "sr", "qr", "roots_found")
MAXIMIZED = {"nof", "rr", "sr", "roots_found"}
SUMMARY_COLUMNS = ["problem", "algorithm", "indicator", "best", "mean", "worst", "std"]

CONFIG_KEYS = {
    "PROBLEMS",
    "ALGORITHMS",
    "RUNS",
    "SEED",
    "OUT",
    "JOBS",
    "NFES_MAX",
    "POP_SIZE",
    "GENERATIONS",
    "RESTART",
}


@dataclass
class ExperimentConfig:
    problems: List[str]
    algorithms: List[str]
    runs: int = 30
    seed: int = 20240901
    out: Path = Path("out")
    jobs: int = 1
    nfes_max: Optional[int] = None
    pop_size: int = 100
    generations: Optional[int] = None
    restart: bool = True

    def __post_init__(self) -> None:
        self.out = Path(self.out)
        if not self.problems:
            raise ExperimentConfigError("не задано ни одной задачи (PROBLEMS)")
        unknown = [a for a in self.algorithms if a not in ALGORITHM_IDS]
        if unknown or not self.algorithms:
            raise ExperimentConfigError(
                f"неизвестные алгоритмы: {unknown}; допустимы {', '.join(ALGORITHMS)}"
            )
        if self.runs < 1:
            raise ExperimentConfigError("RUNS должно быть >= 1")
        if self.jobs < 1:
            raise ExperimentConfigError("JOBS должно быть >= 1")
        if self.pop_size < 4 or self.pop_size % 2:
            raise ExperimentConfigError("POP_SIZE должно быть чётным и >= 4")
        if self.nfes_max is not None and self.nfes_max < self.pop_size:
            raise ExperimentConfigError("NFES_MAX меньше размера популяции")
        if self.generations is not None and self.generations < 1:
            raise ExperimentConfigError("GENERATIONS должно быть >= 1")


def _int(values: Mapping[str, Optional[str]], key: str) -> Optional[int]:
    raw = values.get(key)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ExperimentConfigError(
            f"{key}: ожидалось целое, получено {raw!r}"
        ) from exc


def _list(raw: Optional[str]) -> List[str]:
    return [item.strip() for item in (raw or "").split(",") if item.strip()]


def load_config(path, **overrides) -> ExperimentConfig:
    """
    Прочитать файл KEY=VALUE (формат dotenv). Непустые ``overrides``
    (seed, jobs, out) имеют приоритет над файлом.
    """
    path = Path(path)
    if not path.exists():
        raise ExperimentConfigError(f"нет файла конфигурации {path}")
    values = dotenv_values(path)
    unknown = sorted(set(values) - CONFIG_KEYS)
    if unknown:
        raise ExperimentConfigError(f"неизвестные ключи: {', '.join(unknown)}")

    restart = (values.get("RESTART") or "1").strip()
    if restart not in ("0", "1"):
        raise ExperimentConfigError("RESTART должно быть 0 или 1")
    runs = _int(values, "RUNS")
    pop_size = _int(values, "POP_SIZE")
    params = dict(
        problems=_list(values.get("PROBLEMS")),
        algorithms=_list(values.get("ALGORITHMS")),
        runs=30 if runs is None else runs,
        seed=_int(values, "SEED"),
        out=values.get("OUT") or None,
        jobs=_int(values, "JOBS"),
        nfes_max=_int(values, "NFES_MAX"),
        pop_size=100 if pop_size is None else pop_size,
        generations=_int(values, "GENERATIONS"),
        restart=restart == "1",
    )
    params.update({k: v for k, v in overrides.items() if v is not None})
    defaults = {
        "seed": getattr(settings, "NES_DEFAULT_SEED", 20240901),
        "out": getattr(settings, "NES_OUTPUT_DIR", "out"),
        "jobs": getattr(settings, "NES_JOBS", 1),
    }
    for key, value in defaults.items():
        if params[key] is None:
            params[key] = value
    return ExperimentConfig(**params)


def cell_seed(global_seed: int, problem: str, algorithm: str, run: int) -> int:
    """
    64-битное зерно ячейки: SeedSequence над (глобальное зерно, первые 4 байта
    sha256 имени задачи, номер алгоритма, номер прогона).
    """
    digest = int.from_bytes(hashlib.sha256(problem.encode("utf-8")).digest()[:4], "big")
    sequence = np.random.SeedSequence(
        [int(global_seed), digest, ALGORITHM_IDS[algorithm], int(run)]
    )
    low, high = sequence.generate_state(2, dtype=np.uint32)
    return int(high) << 32 | int(low)


@dataclass
class CellTask:
    entry: SuiteEntry
    algorithm: str
    run: int
    seed: int
    nfes_max: int
    pop_size: int
    generations: Optional[int]
    restart: bool


@dataclass
class RunReport:
    problem: str
    algorithm: str
    run: int
    seed: int
    budget: int
    evaluations: int = 0
    indicators: metrics.IndicatorReport = field(default_factory=metrics.IndicatorReport)
    roots: List[dict] = field(default_factory=list)
    trace: List[dict] = field(default_factory=list)
    error: Optional[str] = None
    wall_time: float = 0.0

    @property
    def key(self):
        return (self.problem, ALGORITHM_IDS[self.algorithm], self.run)

    def to_json(self) -> dict:
        """Словарь для run_<k>.json; время выполнения не пишется."""
        payload = asdict(self)
        payload.pop("wall_time")
        return _finite(payload)


def _finite(value):
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def _known_roots(entry: SuiteEntry) -> Optional[List[tuple]]:
    if not entry.problem.finite_roots:
        return None
    return ground_truth(entry)


def _front(entry: SuiteEntry, scheme, known) -> Optional[np.ndarray]:
    if entry.problem.nor == UNKNOWN:
        return None
    return metrics.reference_front(entry.problem, scheme, roots=known)


def _root_records(problem, roots) -> List[dict]:
    return [
        {"x": [float(v) for v in r], "residual_sq": residual_sq(problem, r)}
        for r in roots
    ]


def _count_roots(found, known) -> int:
    if known is None:
        return len(found)
    return metrics.match_roots(found, known)


def _run_mones(task: CellTask, scheme, report: RunReport, known) -> None:
    problem = task.entry.problem
    params = GaParams(np=task.pop_size)
    generations = generations_for_budget(task.nfes_max, params.np)
    if task.generations:
        generations = min(task.generations, generations)
    outcome = mones_run(problem, scheme, params, generations, seed=task.seed)
    report.evaluations = outcome.evaluations

    found = metrics.distinct_roots(problem, outcome.population)
    front = _front(task.entry, scheme, known)
    if front is not None:
        report.indicators.igd = metrics.igd(
            metrics.population_images(outcome.search_population), front
        )
        report.indicators.nof = float(
            metrics.nof(
                metrics.population_images(outcome.search_population),
                front,
                problem.epsilon,
            )
        )
        report.trace = [
            {"generation": g, "igd": metrics.igd(metrics.population_images(pop), front)}
            for g, pop in enumerate(outcome.trace)
        ]
    _fill_roots(report, problem, found, known)


def _run_dr(task: CellTask, scheme, report: RunReport, known) -> None:
    problem = task.entry.problem
    outcome = dr_loop(
        problem,
        scheme,
        params=DeParams(np=task.pop_size),
        nfes_max=task.nfes_max,
        seed=task.seed,
        restart=task.restart,
    )
    report.evaluations = outcome.evaluations
    report.trace = [asdict(entry) for entry in outcome.trace]
    _fill_roots(report, problem, outcome.roots, known)


def _fill_roots(report: RunReport, problem, found, known) -> None:
    found = [tuple(float(v) for v in r) for r in found]
    count = _count_roots(found, known)
    report.roots = _root_records(problem, found)
    report.indicators.roots_found = count
    report.indicators.qr = metrics.qr(problem, found)
    if known is not None:
        report.indicators.rr = count / problem.nor
        report.indicators.sr = 1.0 if count == problem.nor else 0.0


def run_cell(task: CellTask) -> RunReport:
    """Один прогон; ошибки ячейки записываются в отчёт, а не поднимаются."""
    report = RunReport(
        problem=task.entry.name,
        algorithm=task.algorithm,
        run=task.run,
        seed=task.seed,
        budget=task.nfes_max,
    )
    started = time.perf_counter()
    try:
        reduced = task.algorithm in (VR_MONES, VR_DR_JADE)
        if reduced and task.entry.scheme is None:
            raise SuiteError(
                f"{task.entry.name}: нет схемы редукции для {task.algorithm}"
            )
        scheme = task.entry.scheme if reduced else None
        known = _known_roots(task.entry)
        if task.algorithm in (MONES, VR_MONES):
            _run_mones(task, scheme, report, known)
        else:
            _run_dr(task, scheme, report, known)
    except NesError as exc:
        report.error = str(exc)
    report.wall_time = time.perf_counter() - started
    return report


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: List[RunReport]
    summary: pd.DataFrame

    @property
    def failures(self) -> List[RunReport]:
        return [r for r in self.reports if r.error is not None]


def build_tasks(config: ExperimentConfig) -> List[CellTask]:
    tasks = []
    for name in config.problems:
        entry = resolve_problem(name)
        budget = config.nfes_max or entry.budget
        for algorithm in config.algorithms:
            for run in range(config.runs):
                tasks.append(
                    CellTask(
                        entry=entry,
                        algorithm=algorithm,
                        run=run,
                        seed=cell_seed(config.seed, entry.name, algorithm, run),
                        nfes_max=budget,
                        pop_size=config.pop_size,
                        generations=config.generations,
                        restart=config.restart,
                    )
                )
    return tasks


def summarize(reports: Sequence[RunReport]) -> pd.DataFrame:
    """Строки (problem, algorithm, indicator, best, mean, worst, std)."""
    rows = []
    groups: Dict[tuple, List[RunReport]] = {}
    for report in reports:
        if report.error is None:
            groups.setdefault((report.problem, report.algorithm), []).append(report)
    for (problem, algorithm), group in groups.items():
        for indicator in INDICATORS:
            values = [getattr(r.indicators, indicator) for r in group]
            if all(v is None for v in values):
                continue
            values = [math.nan if v is None else float(v) for v in values]
            agg = metrics.aggregate(values, maximize=indicator in MAXIMIZED)
            rows.append(
                [problem, algorithm, indicator, agg.best, agg.mean, agg.worst, agg.std]
            )
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def mean_trace(reports: Sequence[RunReport]) -> pd.DataFrame:
    """Средняя по прогонам трасса ячейки (по номеру поколения)."""
    frames = [pd.DataFrame(r.trace) for r in reports if r.trace and r.error is None]
    if not frames:
        return pd.DataFrame()
    table = pd.concat(frames, ignore_index=True)
    return table.groupby("generation", sort=True).mean(numeric_only=True).reset_index()


def write_outputs(result: ExperimentResult) -> Path:
    out = result.config.out
    out.mkdir(parents=True, exist_ok=True)
    cells: Dict[tuple, List[RunReport]] = {}
    for report in result.reports:
        cell_dir = out / report.problem / report.algorithm
        cell_dir.mkdir(parents=True, exist_ok=True)
        (cell_dir / f"run_{report.run}.json").write_text(
            json.dumps(report.to_json(), sort_keys=True, indent=2, allow_nan=False)
            + "\n",
            encoding="utf-8",
        )
        cells.setdefault((report.problem, report.algorithm), []).append(report)
    for (problem, algorithm), reports in cells.items():
        trace = mean_trace(reports)
        if not trace.empty:
            trace.to_csv(out / problem / algorithm / "trace.csv", index=False)
    result.summary.to_csv(out / "summary.csv", index=False)
    records = _finite(result.summary.to_dict(orient="records"))
    (out / "summary.json").write_text(
        json.dumps(records, sort_keys=True, indent=2, allow_nan=False) + "\n",
        encoding="utf-8",
    )
    logger.info("Результаты записаны в %s", out)
    return out


def run_experiment(config: ExperimentConfig, write: bool = True) -> ExperimentResult:
    tasks = build_tasks(config)
    logger.info("Эксперимент: %d ячеек, %d процесс(ов)", len(tasks), config.jobs)
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reports = list(pool.map(run_cell, tasks))
    else:
        reports = [run_cell(task) for task in tasks]
    reports.sort(key=lambda r: r.key)
    for report in reports:
        if report.error is not None:
            logger.warning(
                "%s / %s / %d: %s",
                report.problem,
                report.algorithm,
                report.run,
                report.error,
            )
        else:
            logger.info(
                "%s / %s / %d: %d вычислений, %.1f с",
                report.problem,
                report.algorithm,
                report.run,
                report.evaluations,
                report.wall_time,
            )
    result = ExperimentResult(
        config=config, reports=reports, summary=summarize(reports)
    )
    if write:
        write_outputs(result)
    return result


def means_by_problem(
    summary: pd.DataFrame, algorithm: str, indicator: str
) -> Dict[str, float]:
    mask = (summary["algorithm"] == algorithm) & (summary["indicator"] == indicator)
    rows = summary[mask]
    return {row.problem: float(row.mean) for row in rows.itertuples()}


def compare_means(
    means_a: Mapping[str, float], means_b: Mapping[str, float]
) -> WilcoxonResult:
    if set(means_a) != set(means_b):
        raise MisalignedReportsError(
            f"наборы задач различаются: {sorted(set(means_a) ^ set(means_b))}"
        )
    problems = sorted(means_a)
    return wilcoxon_signed_rank([(means_a[p], means_b[p]) for p in problems])


def compare(
    summary: pd.DataFrame, algorithm_a: str, algorithm_b: str, indicator: str = "igd"
) -> WilcoxonResult:
    """
    Уилкоксон по средним значениям индикатора на общих задачах.
    R+ — ранги задач, где ``algorithm_a`` меньше ``algorithm_b``.
    """
    return compare_means(
        means_by_problem(summary, algorithm_a, indicator),
        means_by_problem(summary, algorithm_b, indicator),
    )


def rank(
    summary: pd.DataFrame,
    algorithms: Sequence[str],
    indicator: str = "igd",
    minimize: bool = True,
) -> pd.Series:
    """Средние ранги Фридмана по средним значениям индикатора."""
    table = {a: means_by_problem(summary, a, indicator) for a in algorithms}
    problem_sets = {frozenset(values) for values in table.values()}
    if len(problem_sets) != 1:
        raise MisalignedReportsError("у алгоритмов разные наборы задач")
    problems = sorted(next(iter(problem_sets)))
    matrix = [[table[a][p] for a in algorithms] for p in problems]
    ranks = friedman_ranks(matrix, minimize)
    return pd.Series(ranks, index=list(algorithms), name="rank")


def read_summary(path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ExperimentConfigError(f"нет файла сводки {path}")
    summary = pd.read_csv(path, float_precision="round_trip")
    missing = set(SUMMARY_COLUMNS) - set(summary.columns)
    if missing:
        raise ExperimentConfigError(f"{path}: нет столбцов {sorted(missing)}")
    return summary
