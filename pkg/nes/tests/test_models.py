import pytest
from django.db import IntegrityError

from nes.models import Experiment, RunRecord
from nes.services.experiment import (
    MONES,
    VR_DR_JADE,
    ExperimentConfig,
    run_experiment,
)
from nes.services.persistence import save_experiment

pytestmark = pytest.mark.django_db


@pytest.fixture
def result(tmp_path):
    config = ExperimentConfig(
        problems=["F1", "nine_roots"],
        algorithms=[MONES, VR_DR_JADE],
        runs=1,
        seed=7,
        out=tmp_path / "out",
        nfes_max=200,
        pop_size=20,
    )
    return run_experiment(config, write=False)


def test_save_experiment(result):
    experiment = save_experiment(result)
    assert experiment.name == "F1,nine_roots"
    assert experiment.config["out"].endswith("out")
    assert RunRecord.objects.filter(experiment=experiment).count() == 4

    failed = experiment.records.get(problem="nine_roots", algorithm=VR_DR_JADE)
    assert "схемы редукции" in failed.error
    assert failed.success is None

    record = experiment.records.get(problem="F1", algorithm=MONES)
    report = next(
        r for r in result.reports if (r.problem, r.algorithm) == ("F1", MONES)
    )
    assert record.seed == str(report.seed)
    assert record.success in (True, False)
    assert record.report["algorithm"] == MONES


def test_unique_run_per_cell(result):
    experiment = save_experiment(result, name="дубль")
    record = experiment.records.first()
    with pytest.raises(IntegrityError):
        RunRecord.objects.create(
            experiment=experiment,
            problem=record.problem,
            algorithm=record.algorithm,
            run_index=record.run_index,
            seed="0",
        )


def test_str(result):
    experiment = save_experiment(result, name="демо")
    assert str(experiment) == "демо (seed=7)"
    assert Experiment.objects.count() == 1
