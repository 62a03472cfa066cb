"""Photon wavepackets, time grids and their file format."""

from src.photon.convergence import ConvergenceError, check_converged
from src.photon.models import (
    PhotonWavepacket,
    TimeGrid,
    frozen_array,
    gaussian_wavepacket,
    sin2_wavepacket,
)

__all__ = [
    "ConvergenceError",
    "PhotonWavepacket",
    "TimeGrid",
    "check_converged",
    "frozen_array",
    "gaussian_wavepacket",
    "sin2_wavepacket",
]
