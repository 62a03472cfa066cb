"""Two-qubit pure states for atom-photon and photon-photon entanglement.

Basis labels: the atom's m_F = -1 is 0 and m_F = +1 is 1; a σ⁺ photon is 0 and
a σ⁻ photon is 1. Amplitudes are ordered |00⟩, |01⟩, |10⟩, |11⟩.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.photon.models import frozen_array

STATE_NORM_TOLERANCE = 1e-12
BASIS = ("00", "01", "10", "11")


class EntanglementError(ValueError):
    """Raised for two-qubit states that are not normalized."""


@dataclass(frozen=True)
class TwoQubitState:
    amplitudes: np.ndarray = field(repr=False)
    labels: tuple[str, str] = ("atom", "photon")

    def __post_init__(self) -> None:
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.shape != (4,):
            raise EntanglementError(f"A two-qubit state has 4 amplitudes, got {amplitudes.shape}")
        object.__setattr__(self, "amplitudes", frozen_array(amplitudes))

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def inner(self, other: TwoQubitState) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        terms = " + ".join(
            f"({amp:.3g})|{label}⟩"
            for amp, label in zip(self.amplitudes, BASIS, strict=True)
            if abs(amp) > 0
        )
        return f"TwoQubitState[{self.labels[0]},{self.labels[1]}]({terms})"


def _require_normalized(s: TwoQubitState) -> None:
    if abs(s.norm - 1.0) > STATE_NORM_TOLERANCE:
        raise EntanglementError(f"state is not normalized (norm {s.norm:.15g})")


def wilk_states(sign: Literal["+", "-"] = "+") -> tuple[TwoQubitState, TwoQubitState]:
    """Atom-photon state after the first emission and the photon pair after mapping.

    ψ_A = (|-1,σ⁺⟩ ± |+1,σ⁻⟩)/√2 for atom and first photon;
    ψ_B = (|σ⁻,σ⁺⟩ ± |σ⁺,σ⁻⟩)/√2 for the two photons once the atom's state has
    been mapped onto the second photon.
    """
    if sign not in ("+", "-"):
        raise EntanglementError(f"sign must be '+' or '-', got {sign!r}")
    phase = 1.0 if sign == "+" else -1.0
    r = 1.0 / math.sqrt(2.0)
    psi_a = TwoQubitState(np.array([r, 0.0, 0.0, phase * r]), labels=("atom", "photon"))
    psi_b = TwoQubitState(np.array([0.0, phase * r, r, 0.0]), labels=("photon", "photon"))
    return psi_a, psi_b


def concurrence(s: TwoQubitState) -> float:
    """Pure-state concurrence 2|a₀₀a₁₁ - a₀₁a₁₀|."""
    _require_normalized(s)
    a00, a01, a10, a11 = s.amplitudes
    return min(2.0 * abs(a00 * a11 - a01 * a10), 1.0)


def measurement_probabilities(s: TwoQubitState) -> dict[str, float]:
    """Outcome probabilities of measuring both qubits in the computational basis."""
    _require_normalized(s)
    return {
        label: float(abs(amp) ** 2)
        for label, amp in zip(BASIS, s.amplitudes, strict=True)
    }
