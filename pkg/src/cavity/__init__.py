"""Cavity-QED single-photon source."""

from src.cavity.mode_average import (
    ModeAverageResult,
    ModeDistribution,
    average_over_mode,
    shape_error,
)
from src.cavity.params import (
    CavityError,
    CavityParams,
    cooperativity,
    emission_probability,
    kappa_from_mirrors,
    raman_efficiency,
    repetition_rate,
    sweep_asymmetry,
)
from src.cavity.vstirap import (
    DrivePulse,
    EmissionRecord,
    shape_drive_pulse,
    simulate_vstirap,
)

__all__ = [
    "CavityError",
    "CavityParams",
    "DrivePulse",
    "EmissionRecord",
    "ModeAverageResult",
    "ModeDistribution",
    "average_over_mode",
    "cooperativity",
    "emission_probability",
    "kappa_from_mirrors",
    "raman_efficiency",
    "repetition_rate",
    "shape_drive_pulse",
    "shape_error",
    "simulate_vstirap",
    "sweep_asymmetry",
]
