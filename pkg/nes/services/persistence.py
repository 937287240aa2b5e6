from __future__ import annotations

import logging
from dataclasses import asdict
from typing import List, Optional

from django.db import transaction

from nes.models import Experiment, RunRecord
from nes.services.experiment import ExperimentConfig, ExperimentResult, RunReport

logger = logging.getLogger(__name__)


def _config_payload(config: ExperimentConfig) -> dict:
    payload = asdict(config)
    payload["out"] = str(config.out)
    return payload


def _record(experiment: Experiment, report: RunReport) -> RunRecord:
    """Строка RunRecord по отчёту прогона (с временем выполнения)."""
    indicators = report.indicators
    success: Optional[bool] = None
    if indicators.sr is not None:
        success = indicators.sr == 1.0
    payload = report.to_json()
    return RunRecord(
        experiment=experiment,
        problem=report.problem,
        algorithm=report.algorithm,
        run_index=report.run,
        seed=str(report.seed),
        evaluations=report.evaluations,
        wall_time=report.wall_time,
        igd=payload["indicators"]["igd"],
        nof=payload["indicators"]["nof"],
        roots_found=indicators.roots_found,
        qr=payload["indicators"]["qr"],
        success=success,
        error=report.error or "",
        report=payload,
    )


@transaction.atomic
def save_experiment(
    result: ExperimentResult, config: Optional[ExperimentConfig] = None, name: str = ""
) -> Experiment:
    """Сохранить эксперимент и все отчёты одной транзакцией."""
    config = config or result.config
    experiment = Experiment.objects.create(
        name=name or ",".join(config.problems),
        seed=config.seed,
        runs=config.runs,
        config=_config_payload(config),
    )
    records: List[RunRecord] = [_record(experiment, r) for r in result.reports]
    RunRecord.objects.bulk_create(records)
    logger.info("Эксперимент #%s: сохранено %d прогонов", experiment.pk, len(records))
    return experiment
