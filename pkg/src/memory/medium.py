"""Λ-medium parameters and the closed-form EIT relations.

Lengths are in cm, times in μs and rates in rad/μs, so velocities come out in
cm/μs.
"""

from __future__ import annotations

import logging
import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)


class MemoryModelError(ValueError):
    """Raised for an unusable medium, schedule or storage result."""


class LambdaMedium(BaseModel):
    """Warm vapour cell with buffer gas, treated as a homogeneous Λ system."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    length: float = Field(..., gt=0, description="Cell length L (cm)")
    alpha: float = Field(
        ..., ge=0, description="Resonant absorption coefficient α (1/cm)"
    )
    gamma_p_natural: float = Field(
        ..., ge=0, description="Natural optical coherence decay (rad/μs)"
    )
    collision_rate: float = Field(
        default=0.0, ge=0, description="Buffer-gas pressure broadening (rad/μs)"
    )
    gamma_s: float = Field(default=0.0, ge=0, description="Spin-wave decay γ_S (rad/μs)")
    diffusion_const: float = Field(
        default=0.0, ge=0, description="Atomic diffusion constant D (cm²/μs)"
    )
    wavevector_mismatch: float = Field(
        default=0.0, description="Δk = k_c - k_s between control and signal (1/cm)"
    )
    detuning: float = Field(default=0.0, description="One-photon detuning Δ (rad/μs)")

    @model_validator(mode="after")
    def _check_broadening(self) -> LambdaMedium:
        if self.gamma_p_natural + self.collision_rate <= 0.0:
            raise ValueError("gamma_p_natural + collision_rate must be positive")
        return self


def optical_depth(m: LambdaMedium) -> float:
    """d = α·L."""
    return m.alpha * m.length


def gamma_p(m: LambdaMedium) -> float:
    """Optical coherence decay including pressure broadening."""
    return m.gamma_p_natural + m.collision_rate


def gamma_s_eff(m: LambdaMedium) -> float:
    """Spin-wave decay including motional dephasing, γ_S + D·Δk²."""
    return m.gamma_s + m.diffusion_const * m.wavevector_mismatch**2


def group_velocity(m: LambdaMedium, omega_c: float) -> float:
    """Slow-light group velocity 2|Ω_c|²/(α·γ_P) in cm/μs."""
    if m.alpha <= 0.0:
        raise MemoryModelError("no medium: alpha must be positive for slow light")
    return 2.0 * omega_c**2 / (m.alpha * gamma_p(m))


def control_for_fit(m: LambdaMedium, tau: float, fill: float = 0.8) -> float:
    """Control Rabi frequency whose group velocity fits a τ-long pulse into fill·L."""
    if tau <= 0.0:
        raise MemoryModelError(f"pulse duration must be positive, got {tau}")
    if not 0.0 < fill <= 1.0:
        raise MemoryModelError(f"fill must lie in (0, 1], got {fill}")
    if m.alpha <= 0.0:
        raise MemoryModelError("no medium: alpha must be positive for slow light")
    v_g = fill * m.length / tau
    return math.sqrt(v_g * m.alpha * gamma_p(m) / 2.0)


class FeasibilityReport(BaseModel):
    """Dimensionless margins of the storage window for one pulse duration.

    Storage works when ``lower_margin`` is below one, ``upper_margin`` is well
    below one and ``adiabaticity`` is well above one.
    """

    model_config = ConfigDict(frozen=True)

    lower_margin: float = Field(..., gt=0, description="(v_g/L)·τ")
    upper_margin: float = Field(..., gt=0, description="1/(τ·v_g·√(α/L))")
    adiabaticity: float = Field(..., gt=0, description="τ·d·γ_P")
    group_velocity: float = Field(..., gt=0, description="v_g (cm/μs)")


def check_feasibility(m: LambdaMedium, omega_c: float, tau: float) -> FeasibilityReport:
    """Evaluate the pulse-duration window and the adiabaticity condition.

    Raises:
        MemoryModelError: If τ is not positive, the medium is empty, or the
            control is off (stopped light has no finite margins).
    """
    if tau <= 0.0:
        raise MemoryModelError(f"pulse duration must be positive, got {tau}")
    v_g = group_velocity(m, omega_c)
    if v_g <= 0.0:
        raise MemoryModelError("control field is off: group velocity is zero")
    report = FeasibilityReport(
        lower_margin=v_g * tau / m.length,
        upper_margin=1.0 / (tau * v_g * math.sqrt(m.alpha / m.length)),
        adiabaticity=tau * optical_depth(m) * gamma_p(m),
        group_velocity=v_g,
    )
    logger.debug(
        f"Feasibility τ={tau:g} μs, Ω_c={omega_c:.4g}: lower={report.lower_margin:.4g} "
        f"upper={report.upper_margin:.4g} adiabaticity={report.adiabaticity:.4g}"
    )
    return report


def storage_efficiency_decay(eta0: float, m: LambdaMedium, hold: float) -> float:
    """η₀·exp(-2·γ_S_eff·T) for a hold time T."""
    if not 0.0 <= eta0 <= 1.0:
        raise MemoryModelError(f"eta0 must lie in [0, 1], got {eta0}")
    if hold < 0.0:
        raise MemoryModelError(f"hold time must be non-negative, got {hold}")
    return eta0 * math.exp(-2.0 * gamma_s_eff(m) * hold)
