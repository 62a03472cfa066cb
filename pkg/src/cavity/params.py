"""Cavity parameters and the analytic figures of merit of a V-STIRAP source.

Rates are angular and expressed in rad/μs (2π·MHz); mirror terms are power
fractions (1 ppm = 1e-6); geometry is in μm.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

# Speed of light in μm/μs.
SPEED_OF_LIGHT = 299_792_458.0


class CavityError(ValueError):
    """Raised when a cavity quantity is undefined for the given parameters."""


class CavityParams(BaseModel):
    """Atom-cavity system: coupling, decay rates, mirrors and mode geometry."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    g: float = Field(..., ge=0, description="Atom-cavity coupling g (rad/μs)")
    kappa: float = Field(..., ge=0, description="Cavity field decay κ (rad/μs)")
    gamma: float = Field(
        ..., ge=0, description="Atomic polarization decay γ (rad/μs)"
    )
    t1: float = Field(
        default=0.0, ge=0, description="Input mirror power transmittance T₁"
    )
    t2: float = Field(
        default=0.0, ge=0, description="Output mirror power transmittance T₂"
    )
    h: float = Field(default=0.0, ge=0, description="Scatter loss per mirror H")
    cavity_length: float = Field(
        default=0.0, ge=0, description="Mirror separation L_cav (μm)"
    )
    mode_waist: float = Field(default=0.0, ge=0, description="Mode waist w (μm)")

    @property
    def mirror_loss(self) -> float:
        """Total round-trip loss T₁ + T₂ + 2H."""
        return self.t1 + self.t2 + 2.0 * self.h


@dataclass(frozen=True)
class AsymmetryRow:
    """One point of a mirror-asymmetry sweep."""

    t2: float
    kappa: float
    p_emit: float
    cooperativity: float


def raman_efficiency(p: CavityParams) -> float:
    """Adiabatic V-STIRAP bound g²/(γκ+g²), the bracketed factor of P_E."""
    if p.g == 0.0:
        return 0.0
    return p.g**2 / (p.gamma * p.kappa + p.g**2)


def emission_probability(p: CavityParams) -> float:
    """Probability that a photon leaves through the output mirror.

    P_E = [T₂/(T₁+T₂+2H)]·[g²/(γκ+g²)].

    Raises:
        CavityError: If no mirror transmits or scatters ("no output channel").
    """
    loss = p.mirror_loss
    if loss <= 0.0:
        raise CavityError("no output channel: T1 + T2 + 2H must be positive")
    value = (p.t2 / loss) * raman_efficiency(p)
    return min(max(value, 0.0), 1.0)


def cooperativity(p: CavityParams) -> float:
    """Single-atom cooperativity C = g²/(2κγ)."""
    if p.kappa <= 0.0 or p.gamma <= 0.0:
        raise CavityError("undefined cooperativity: kappa and gamma must be positive")
    return p.g**2 / (2.0 * p.kappa * p.gamma)


def kappa_from_mirrors(p: CavityParams) -> float:
    """Field decay rate of a two-mirror standing-wave cavity, c·(T₁+T₂+2H)/(4L)."""
    if p.cavity_length <= 0.0:
        raise CavityError(
            f"cavity_length must be positive to derive kappa, got {p.cavity_length}"
        )
    return SPEED_OF_LIGHT * p.mirror_loss / (4.0 * p.cavity_length)


def sweep_asymmetry(
    p_base: CavityParams, t2_values: Sequence[float]
) -> list[AsymmetryRow]:
    """Emission probability and cooperativity while the output mirror varies.

    κ is recomputed from the mirrors for every T₂; T₁, H and the geometry stay
    as given in ``p_base``. Rows come back in input order.
    """
    if len(t2_values) == 0:
        raise CavityError("t2_values must not be empty")
    rows: list[AsymmetryRow] = []
    for t2 in t2_values:
        if t2 <= 0.0:
            raise CavityError(f"every T2 must be positive, got {t2}")
        point = p_base.model_copy(update={"t2": float(t2)})
        kappa = kappa_from_mirrors(point)
        point = point.model_copy(update={"kappa": kappa})
        rows.append(
            AsymmetryRow(
                t2=float(t2),
                kappa=kappa,
                p_emit=emission_probability(point),
                cooperativity=cooperativity(point),
            )
        )
    logger.debug(f"Swept {len(rows)} output-mirror transmittances")
    return rows


def repetition_rate(photon_duration: float, repump_time: float) -> float:
    """Photons per μs when every emission is followed by a repumping stage."""
    period = photon_duration + repump_time
    if period <= 0.0:
        raise CavityError("photon_duration + repump_time must be positive")
    return 1.0 / period
