from src.network.evaluation import (
    FeasibilityReport,
    aerial_rate,
    aerial_sinr,
    check_constraints,
    effective_noise,
    interference_levels,
    merit_mu,
    penalty_F,
    satellite_interference,
    terrestrial_rates,
    terrestrial_sinr,
    terrestrial_sinrs,
)
from src.network.models import (
    BeamformerSet,
    EffectiveNoise,
    LiftedIterate,
    NormalizedBeamformers,
    PowerAllocation,
    top_eig,
)
from src.network.scenario import ScenarioConfig

__all__ = [
    "BeamformerSet",
    "EffectiveNoise",
    "FeasibilityReport",
    "LiftedIterate",
    "NormalizedBeamformers",
    "PowerAllocation",
    "ScenarioConfig",
    "aerial_rate",
    "aerial_sinr",
    "check_constraints",
    "effective_noise",
    "interference_levels",
    "merit_mu",
    "penalty_F",
    "satellite_interference",
    "terrestrial_rates",
    "terrestrial_sinr",
    "terrestrial_sinrs",
    "top_eig",
]
