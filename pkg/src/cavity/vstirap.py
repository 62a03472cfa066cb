"""Time-domain V-STIRAP emission and inverse drive-pulse shaping.

The single-excitation state is c_u|u,0⟩ + c_e|e,0⟩ + c_g|g,1⟩ with

    ċ_u = -i(Ω/2)c_e
    ċ_e = -(γ + iΔ)c_e - i(Ω/2)c_u - i g c_g
    ċ_g = -κ c_g - i g c_e

and the photon leaving the cavity has amplitude φ(t) = √(2κ)·c_g(t).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp, trapezoid

from src.cavity.params import CavityError, CavityParams, raman_efficiency
from src.photon.convergence import ConvergenceError, check_converged
from src.photon.models import NORM_TOLERANCE, PhotonWavepacket, TimeGrid, frozen_array

logger = logging.getLogger(__name__)

# Population left in the cavity mode at the end of a simulation above which the
# emitted photon is considered truncated.
CAVITY_TAIL_LIMIT = 1e-4
# Agreement required between the solution and its half-step re-solution.
EMISSION_TOLERANCE = 1e-4
# |c_u|² below which the pump state is treated as exhausted while shaping.
DEPLETION_FLOOR = 1e-8


@dataclass(frozen=True)
class DrivePulse:
    """Real, non-negative Rabi frequency Ω(t) in rad/μs on a uniform grid."""

    grid: TimeGrid
    omega: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega, dtype=float)
        if omega.shape != (self.grid.n,):
            raise CavityError(
                f"Drive has shape {omega.shape}, grid expects ({self.grid.n},)"
            )
        if not np.all(np.isfinite(omega)):
            raise CavityError("Drive pulse contains non-finite samples")
        if np.any(omega < 0.0):
            raise CavityError("Drive pulse must be non-negative")
        object.__setattr__(self, "omega", frozen_array(omega))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def peak(self) -> float:
        return float(self.omega.max())

    def at(self, t: float) -> float:
        """Linear interpolation, zero outside the grid."""
        return float(np.interp(t, self.grid.times, self.omega, left=0.0, right=0.0))

    @classmethod
    def linear_ramp(
        cls, grid: TimeGrid, omega_max: float, t_on: float, t_ramp: float
    ) -> DrivePulse:
        """Zero until ``t_on``, linear rise to ``omega_max`` over ``t_ramp``, then held."""
        if omega_max < 0.0 or t_ramp <= 0.0:
            raise CavityError("linear ramp needs omega_max >= 0 and t_ramp > 0")
        fraction = np.clip((grid.times - t_on) / t_ramp, 0.0, 1.0)
        return cls(grid, omega_max * fraction)


@dataclass(frozen=True)
class EmissionRecord:
    """Outcome of one V-STIRAP simulation.

    Attributes:
        photon: Output wavepacket √(2κ)·c_g(t).
        p_emit: Probability emitted through the cavity, 2κ∫|c_g|²dt.
        p_spont: Probability lost to spontaneous emission, 2γ∫|c_e|²dt.
        p_residual: Population still in the system at the final time.
        diagnostics: Solver settings and the convergence check.
    """

    photon: PhotonWavepacket
    p_emit: float
    p_spont: float
    p_residual: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.p_emit + self.p_spont + self.p_residual


def _solve(
    p: CavityParams,
    drive: DrivePulse,
    detuning: float,
    max_step: float,
    rtol: float,
    atol: float,
) -> tuple[np.ndarray, str]:
    times = drive.times
    omega = drive.omega
    g, kappa, gamma = p.g, p.kappa, p.gamma
    decay_e = gamma + 1j * detuning

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        half_omega = 0.5 * np.interp(t, times, omega)
        c_u, c_e, c_g = y[0], y[1], y[2]
        return np.array(
            [
                -1j * half_omega * c_e,
                -decay_e * c_e - 1j * half_omega * c_u - 1j * g * c_g,
                -kappa * c_g - 1j * g * c_e,
                2.0 * kappa * abs(c_g) ** 2,
                2.0 * gamma * abs(c_e) ** 2,
            ],
            dtype=complex,
        )

    y0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0], dtype=complex)
    solution = solve_ivp(
        rhs,
        (float(times[0]), float(times[-1])),
        y0,
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
    )
    if not solution.success:
        raise ConvergenceError(
            f"V-STIRAP integration failed: {solution.message}",
            diagnostics={"max_step": max_step, "message": solution.message},
        )
    return solution.y, solution.message


def simulate_vstirap(
    p: CavityParams,
    drive: DrivePulse,
    detuning: float = 0.0,
    *,
    check_convergence: bool = True,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> EmissionRecord:
    """Integrate the atom-cavity system from |u,0⟩ under ``drive``.

    The solver step is capped at the drive spacing. With ``check_convergence``
    the run is repeated with half that cap and the emission probabilities must
    agree to within 1e-4.

    Raises:
        CavityError: If κ is zero (no output channel for the photon).
        ConvergenceError: If the solver fails or the refinement disagrees.
    """
    if p.kappa <= 0.0:
        raise CavityError("no output channel: kappa must be positive to emit")
    max_step = drive.grid.dt
    y, message = _solve(p, drive, detuning, max_step, rtol, atol)
    c_u, c_e, c_g = y[0], y[1], y[2]
    p_emit = float(y[3, -1].real)
    p_spont = float(y[4, -1].real)
    p_residual = float(abs(c_u[-1]) ** 2 + abs(c_e[-1]) ** 2 + abs(c_g[-1]) ** 2)
    diagnostics: dict[str, Any] = {
        "method": "DOP853",
        "max_step": max_step,
        "rtol": rtol,
        "atol": atol,
        "solver_message": message,
    }

    if check_convergence:
        fine, _ = _solve(p, drive, detuning, 0.5 * max_step, rtol, atol)
        diagnostics["emission_change"] = check_converged(
            "p_emit",
            p_emit,
            float(fine[3, -1].real),
            EMISSION_TOLERANCE,
            diagnostics,
        )

    cavity_tail = float(abs(c_g[-1]) ** 2)
    diagnostics["cavity_population_end"] = cavity_tail
    if cavity_tail >= CAVITY_TAIL_LIMIT:
        logger.warning(
            f"Cavity still holds {cavity_tail:.3g} population at t={drive.grid.t_stop:.4g} μs; "
            "the photon is truncated"
        )

    amplitude = math.sqrt(2.0 * p.kappa) * c_g
    norm_slack = float(trapezoid(np.abs(amplitude) ** 2, dx=drive.grid.dt)) - 1.0
    if norm_slack > 0.0:
        amplitude = amplitude / math.sqrt(1.0 + norm_slack)
    photon = PhotonWavepacket(drive.grid, amplitude)
    logger.debug(
        f"V-STIRAP g={p.g:.4g} κ={p.kappa:.4g} γ={p.gamma:.4g}: "
        f"p_emit={p_emit:.6f} p_spont={p_spont:.6f} p_residual={p_residual:.2e}"
    )
    return EmissionRecord(
        photon=photon,
        p_emit=p_emit,
        p_spont=p_spont,
        p_residual=p_residual,
        diagnostics=diagnostics,
    )


def _real_envelope(target: PhotonWavepacket) -> np.ndarray:
    """Target amplitude with its global phase removed; rejects chirped targets."""
    amplitude = target.amplitude
    magnitude = np.abs(amplitude)
    peak = int(np.argmax(magnitude))
    if magnitude[peak] == 0.0:
        raise CavityError("target wavepacket is empty")
    aligned = amplitude * np.conj(amplitude[peak]) / magnitude[peak]
    if np.max(np.abs(aligned.imag)) > 1e-6 * magnitude[peak]:
        raise CavityError("target wavepacket phase must be uniform to be shaped")
    if np.min(aligned.real) < -1e-6 * magnitude[peak]:
        raise CavityError("target wavepacket changes sign; phase must be uniform")
    return np.clip(aligned.real, 0.0, None)


def shape_drive_pulse(p: CavityParams, target: PhotonWavepacket) -> DrivePulse:
    """Drive Ω(t) that makes the resonant system emit ``target``.

    The target fixes c_g; the cavity equation then fixes c_e, probability
    bookkeeping fixes c_u, and the excited-state equation is solved for Ω.

    Raises:
        CavityError: If the target norm exceeds the adiabatic bound
            g²/(γκ+g²), or if the pump state empties before the target ends.
    """
    if p.g <= 0.0 or p.kappa <= 0.0:
        raise CavityError("shaping needs positive g and kappa")
    bound = raman_efficiency(p)
    norm = target.norm
    if norm > bound + NORM_TOLERANCE:
        raise CavityError(
            f"target exceeds emission bound: norm {norm:.6f} > g²/(γκ+g²) = {bound:.6f}"
        )

    grid = target.grid
    dt = grid.dt
    g, kappa, gamma = p.g, p.kappa, p.gamma

    envelope = _real_envelope(target)
    # Emitted field is √(2κ)·c_g; the minus sign keeps Ω positive.
    a_g = envelope / math.sqrt(2.0 * kappa)
    da_g = np.gradient(a_g, dt, edge_order=2)
    # c_e = -i·b with b real.
    b = (kappa * a_g + da_g) / g
    db = np.gradient(b, dt, edge_order=2)

    lost = 2.0 * kappa * cumulative_trapezoid(a_g**2, dx=dt, initial=0.0)
    lost += 2.0 * gamma * cumulative_trapezoid(b**2, dx=dt, initial=0.0)
    pump = 1.0 - b**2 - a_g**2 - lost

    numerator = 2.0 * (db + gamma * b + g * a_g)
    remaining = target.norm - cumulative_trapezoid(envelope**2, dx=dt, initial=0.0)
    needed = (np.abs(numerator) > 1e-9 * np.abs(numerator).max()) & (
        remaining > 1e-9
    )
    if np.any(needed & (pump <= DEPLETION_FLOOR)):
        first = float(grid.times[np.flatnonzero(needed & (pump <= DEPLETION_FLOOR))[0]])
        raise CavityError(
            f"target not adiabatically reachable: pump state exhausted at t={first:.4g} μs"
        )

    c_u = np.sqrt(np.clip(pump, DEPLETION_FLOOR, None))
    omega = np.where(pump > DEPLETION_FLOOR, numerator / c_u, 0.0)
    negative = float(omega.min())
    if negative < 0.0:
        if negative < -1e-6 * float(omega.max()):
            logger.warning(
                f"Clipping drive to zero where shaping asked for {negative:.3g} rad/μs"
            )
        omega = np.clip(omega, 0.0, None)
    logger.info(
        f"Shaped drive for a {target.duration:.4g} μs photon: "
        f"peak Ω={float(omega.max()):.4g} rad/μs, pump left {float(pump[-1]):.4f}"
    )
    return DrivePulse(grid, omega)
