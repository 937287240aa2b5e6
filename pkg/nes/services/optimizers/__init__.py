"""Эволюционные движки: JADE, NSGA-II и внешние циклы над ними."""

from nes.services.optimizers.jade import DeParams, Jade, JadeResult, jade_run
from nes.services.optimizers.mones import MonesOutcome, mones_run
from nes.services.optimizers.nsga2 import GaParams, Nsga2Result, nsga2_run
from nes.services.optimizers.repulsion import DrOutcome, DrTraceEntry, dr_loop

__all__ = [
    "DeParams",
    "DrOutcome",
    "DrTraceEntry",
    "GaParams",
    "Jade",
    "JadeResult",
    "MonesOutcome",
    "Nsga2Result",
    "dr_loop",
    "jade_run",
    "mones_run",
    "nsga2_run",
]
