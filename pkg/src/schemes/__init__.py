from src.schemes.low_complexity import (
    IsSettings,
    is_direction,
    is_step1,
    mrc_step1,
    null_space_direction,
    power_alloc_sca,
    run_scheme,
    zf_power,
    zf_step1,
)
from src.schemes.pibf import PibfSettings, initialize, run_pibf, run_pibf_tcssa
from src.schemes.result import ConvergenceTrace, SchemeResult

__all__ = [
    "ConvergenceTrace",
    "IsSettings",
    "PibfSettings",
    "SchemeResult",
    "initialize",
    "is_direction",
    "is_step1",
    "mrc_step1",
    "null_space_direction",
    "power_alloc_sca",
    "run_pibf",
    "run_pibf_tcssa",
    "run_scheme",
    "zf_power",
    "zf_step1",
]
