"""
Набор задач, поставляемый в data/suite: F1-F7, nine_roots, trig3, trig3_sqrt.

Целостность файлов проверяется по sha256 из MANIFEST.json.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from django.conf import settings

from nes.services.exceptions import SuiteError
from nes.services.oracle import GRID_POINTS, oracle_roots, read_fixture
from nes.services.problem import NesProblem
from nes.services.problem_file import parse_problem_file
from nes.services.reduction import ReductionScheme

logger = logging.getLogger(__name__)

DEFAULT_SUITE_DIR = Path(__file__).resolve().parents[2] / "data" / "suite"
SUITE_NAMES = (
    "F1",
    "F2",
    "F3",
    "F4",
    "F5",
    "F6",
    "F7",
    "nine_roots",
    "trig3",
    "trig3_sqrt",
)
ANALYTIC = "analytic"
FIXTURE = "fixture"
ORACLE = "oracle"


@dataclass(frozen=True)
class SuiteEntry:
    name: str
    problem: NesProblem
    scheme: Optional[ReductionScheme]
    text: str
    source: Optional[Path] = None

    @property
    def epsilon(self) -> float:
        return self.problem.epsilon

    @property
    def budget(self) -> int:
        return self.problem.nfes_max


def suite_dir() -> Path:
    if settings.configured and getattr(settings, "NES_SUITE_DIR", None):
        return Path(settings.NES_SUITE_DIR)
    return DEFAULT_SUITE_DIR


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(directory: Path) -> Dict[str, str]:
    path = directory / "MANIFEST.json"
    if not path.exists():
        raise SuiteError(f"нет {path}")
    return json.loads(path.read_text(encoding="utf-8"))["files"]


@lru_cache(maxsize=None)
def _load_entry(directory: Path, name: str) -> SuiteEntry:
    path = directory / f"{name}.nes"
    if not path.exists():
        raise SuiteError(f"нет файла задачи {path}")
    expected = _manifest(directory).get(path.name)
    if expected is None:
        raise SuiteError(f"{path.name} не указан в MANIFEST.json")
    if file_digest(path) != expected:
        raise SuiteError(f"{path.name}: контрольная сумма не совпадает с MANIFEST.json")
    text = path.read_text(encoding="utf-8")
    problem, scheme = parse_problem_file(text)
    return SuiteEntry(name=name, problem=problem, scheme=scheme, text=text, source=path)


def load_suite() -> List[SuiteEntry]:
    directory = suite_dir()
    return [_load_entry(directory, name) for name in SUITE_NAMES]


def entry_by_name(name: str) -> SuiteEntry:
    if name not in SUITE_NAMES:
        raise SuiteError(f"неизвестная задача набора: {name}")
    return _load_entry(suite_dir(), name)


def load_problem_path(path) -> SuiteEntry:
    """Пользовательский файл задачи (без проверки контрольной суммы)."""
    path = Path(path)
    if not path.exists():
        raise SuiteError(f"нет файла задачи {path}")
    text = path.read_text(encoding="utf-8")
    problem, scheme = parse_problem_file(text)
    return SuiteEntry(
        name=problem.name, problem=problem, scheme=scheme, text=text, source=path
    )


def resolve_problem(name_or_path: str) -> SuiteEntry:
    if name_or_path in SUITE_NAMES:
        return entry_by_name(name_or_path)
    if name_or_path.endswith(".nes") or "/" in name_or_path:
        return load_problem_path(name_or_path)
    raise SuiteError(f"неизвестная задача: {name_or_path}")


def fixture_path(name: str) -> Path:
    return suite_dir() / "roots" / f"{name}.json"


@lru_cache(maxsize=None)
def _oracle_cached(entry: SuiteEntry) -> Tuple[Tuple[float, ...], ...]:
    return tuple(oracle_roots(entry.problem, GRID_POINTS[entry.problem.n]))


def ground_truth_with_provenance(
    entry: SuiteEntry,
) -> List[Tuple[Tuple[float, ...], str]]:
    """
    Корни и их происхождение: сначала файл roots/<имя>.json, затем
    аналитические корни из файла задачи, затем оракул.
    """
    problem = entry.problem
    if not problem.finite_roots:
        raise SuiteError(f"{entry.name}: число корней {problem.nor}, эталона нет")
    roots = read_fixture(fixture_path(entry.name)) if entry.source else None
    provenance = FIXTURE
    if roots is None and problem.known_roots:
        roots, provenance = list(problem.known_roots), ANALYTIC
    if roots is None:
        roots, provenance = list(_oracle_cached(entry)), ORACLE
    if len(roots) != problem.nor:
        raise SuiteError(
            f"{entry.name}: найдено {len(roots)} корней, ожидалось {problem.nor}"
        )
    return [(tuple(root), provenance) for root in roots]


def ground_truth(entry: SuiteEntry) -> List[Tuple[float, ...]]:
    return [root for root, _ in ground_truth_with_provenance(entry)]
