"""EIT vapour-cell quantum memory."""

from src.memory.medium import (
    FeasibilityReport,
    LambdaMedium,
    MemoryModelError,
    check_feasibility,
    control_for_fit,
    gamma_p,
    gamma_s_eff,
    group_velocity,
    optical_depth,
    storage_efficiency_decay,
)
from src.memory.propagation import (
    PropagationResult,
    SpinWave,
    group_delay,
    propagate,
    spin_wave_profile,
)
from src.memory.schedule import ControlSchedule

__all__ = [
    "ControlSchedule",
    "FeasibilityReport",
    "LambdaMedium",
    "MemoryModelError",
    "PropagationResult",
    "SpinWave",
    "check_feasibility",
    "control_for_fit",
    "gamma_p",
    "gamma_s_eff",
    "group_delay",
    "group_velocity",
    "optical_depth",
    "propagate",
    "spin_wave_profile",
    "storage_efficiency_decay",
]
