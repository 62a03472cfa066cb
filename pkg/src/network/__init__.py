"""Entangled states and repeat-until-success cluster building."""

from src.network.rus import (
    RusConfig,
    RusError,
    RusEvent,
    RusRunStats,
    expected_build_time,
    expected_coherence_weight,
    expected_memory_age,
    simulate_batch,
    simulate_rus,
)
from src.network.states import (
    EntanglementError,
    TwoQubitState,
    concurrence,
    measurement_probabilities,
    wilk_states,
)

__all__ = [
    "EntanglementError",
    "RusConfig",
    "RusError",
    "RusEvent",
    "RusRunStats",
    "TwoQubitState",
    "concurrence",
    "expected_build_time",
    "expected_coherence_weight",
    "expected_memory_age",
    "measurement_probabilities",
    "simulate_batch",
    "simulate_rus",
]
