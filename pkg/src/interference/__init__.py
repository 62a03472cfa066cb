"""Photon indistinguishability: overlaps and two-photon interference."""

from src.interference.hom import (
    CoincidenceRecord,
    InterferenceError,
    OverlapReport,
    align_in_time,
    beat_minima,
    delay_marginal,
    hom_coincidence,
    mode_overlap,
    storage_interference_test,
)

__all__ = [
    "CoincidenceRecord",
    "InterferenceError",
    "OverlapReport",
    "align_in_time",
    "beat_minima",
    "delay_marginal",
    "hom_coincidence",
    "mode_overlap",
    "storage_interference_test",
]
