"""Weak-probe Maxwell-Bloch propagation through an EIT vapour cell.

In the retarded frame the probe E, optical coherence P and spin wave S obey

    ∂t P = -(γ_P + iΔ)P + iE + iΩ_c(t)S
    ∂t S = -γ_S,eff S + iΩ_c(t)P
    ∂z E = i·a·P,   a = α·γ_P/2

The cell is cut into ``n_z`` slices. Time stepping is trapezoidal (implicit,
so the stiff γ_P of a buffer-gas cell needs no tiny step); the implicit field
coupling between slices is a first-order linear recurrence along z, solved
with ``scipy.signal.lfilter``. The probability density held by the atoms is
a·(|P|² + |S|²) per cm.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import lfilter

from src.memory.medium import (
    LambdaMedium,
    MemoryModelError,
    gamma_p,
    gamma_s_eff,
    optical_depth,
)
from src.memory.schedule import ControlSchedule
from src.photon.convergence import check_converged
from src.photon.models import PhotonWavepacket, TimeGrid, frozen_array
from src.utils.output import csv_text

logger = logging.getLogger(__name__)

DEFAULT_SLICES = 400
# Largest Ω·h (and Δ·h) allowed inside one trapezoidal sub-step.
MAX_PHASE_STEP = 0.2
# Relative change of the headline efficiency allowed under refinement.
RELATIVE_TOLERANCE = 0.01
FIELD_MAP_POSITIONS = 101
FIELD_MAP_TIMES = 400
NOTHING_STORED = 1e-6


@dataclass(frozen=True)
class SpinWave:
    """Normalized spin-wave amplitude S(z) on slice centres (cm^-1/2)."""

    z_grid: np.ndarray = field(repr=False)
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        z = np.asarray(self.z_grid, dtype=float)
        amplitude = np.asarray(self.amplitude, dtype=complex)
        if z.shape != amplitude.shape or z.ndim != 1 or len(z) < 2:
            raise MemoryModelError("spin wave needs matching 1-D position and amplitude arrays")
        object.__setattr__(self, "z_grid", frozen_array(z))
        object.__setattr__(self, "amplitude", frozen_array(amplitude))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.density) * (self.z_grid[1] - self.z_grid[0]))

    @property
    def peak_position(self) -> float:
        return float(self.z_grid[int(np.argmax(self.density))])


@dataclass(frozen=True)
class FieldMap:
    """|E(z, t_r)|² on a decimated set of slice boundaries and times."""

    z_grid: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    intensity: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PropagationResult:
    """Outcome of one write/hold/read run.

    Fractions are relative to the input photon's norm.
    """

    transmitted: PhotonWavepacket
    retrieved: PhotonWavepacket
    leaked_fraction: float
    stored_fraction: float
    efficiency: float
    field_map: FieldMap
    spin_wave_snapshot: SpinWave | None
    direction: str
    diagnostics: dict[str, Any] = field(default_factory=dict)


@dataclass
class _March:
    e_out: np.ndarray
    stored: float
    snapshot: np.ndarray | None
    map_times: list[float]
    map_rows: list[np.ndarray]
    z_centres: np.ndarray
    z_boundaries: np.ndarray
    substeps: int


def _support(packet: PhotonWavepacket) -> tuple[float, float]:
    intensity = packet.intensity
    peak = float(intensity.max())
    if peak == 0.0:
        raise MemoryModelError("input photon is empty")
    inside = np.flatnonzero(intensity > 1e-12 * peak)
    return float(packet.times[inside[0]]), float(packet.times[inside[-1]])


def _step_index(grid: TimeGrid, t: float) -> int:
    return min(max(int(round((t - grid.t_start) / grid.dt)), 0), grid.n - 1)


def _march(
    m: LambdaMedium, e_in: np.ndarray, schedule: ControlSchedule, n_z: int
) -> _March:
    grid = schedule.grid
    omega = schedule.omega_c
    coupling = 0.5 * m.alpha * gamma_p(m)
    decay_p = gamma_p(m) + 1j * m.detuning
    decay_s = gamma_s_eff(m)
    dz = m.length / n_z

    fastest = max(float(omega.max()), abs(m.detuning))
    substeps = max(1, math.ceil(grid.dt * fastest / MAX_PHASE_STEP))
    h2 = 0.5 * grid.dt / substeps
    sigma = 1.0 + h2 * decay_s
    beta = h2 * coupling * dz

    k_hold = _step_index(grid, schedule.hold_start) if schedule.stores else -1
    k_mid = _step_index(grid, schedule.hold_mid) if schedule.stores else -1
    stride = max(1, math.ceil(grid.n / FIELD_MAP_TIMES))
    boundary_idx = np.unique(
        np.round(np.linspace(0, n_z, min(n_z + 1, FIELD_MAP_POSITIONS))).astype(int)
    )

    p = np.zeros(n_z, dtype=complex)
    s = np.zeros(n_z, dtype=complex)
    e_out = np.zeros(grid.n, dtype=complex)
    e_out[0] = e_in[0]
    stored = 0.0
    snapshot: np.ndarray | None = None
    map_times: list[float] = []
    map_rows: list[np.ndarray] = []

    def record(k: int) -> None:
        prefix = np.concatenate(([0.0], np.cumsum(p)))
        field_at = e_in[k] + 1j * coupling * dz * prefix[boundary_idx]
        map_times.append(float(grid.t_start + k * grid.dt))
        map_rows.append(np.abs(field_at) ** 2)

    for k in range(grid.n):
        if k == k_hold:
            stored = float(coupling * dz * np.sum(np.abs(s) ** 2))
        if k == k_mid:
            snapshot = s.copy()
            if schedule.retrieval_direction == "counter":
                s = s[::-1].copy()
                p = p[::-1].copy()
        if k % stride == 0:
            record(k)
        if k == grid.n - 1:
            break

        for sub in range(substeps):
            w0, w1 = sub / substeps, (sub + 1) / substeps
            omega0 = omega[k] + w0 * (omega[k + 1] - omega[k])
            omega1 = omega[k] + w1 * (omega[k + 1] - omega[k])
            field0 = e_in[k] + w0 * (e_in[k + 1] - e_in[k])
            field1 = e_in[k] + w1 * (e_in[k + 1] - e_in[k])

            local = field0 + 1j * coupling * dz * (np.cumsum(p) - 0.5 * p)
            rhs_p = p + h2 * (-decay_p * p + 1j * local + 1j * omega0 * s)
            rhs_s = s + h2 * (-decay_s * s + 1j * omega0 * p)

            q = 1.0 + h2 * decay_p + (h2 * omega1) ** 2 / sigma + 0.5 * beta
            r = rhs_p + 1j * h2 * field1 + 1j * h2 * omega1 * rhs_s / sigma
            running = lfilter([1.0 / q], [1.0, -(1.0 - beta / q)], r)
            before = np.concatenate(([0.0], running[:-1]))
            p = (r - beta * before) / q
            s = (rhs_s + 1j * h2 * omega1 * p) / sigma

        e_out[k + 1] = e_in[k + 1] + 1j * coupling * dz * np.sum(p)

    return _March(
        e_out=e_out,
        stored=stored,
        snapshot=snapshot,
        map_times=map_times,
        map_rows=map_rows,
        z_centres=(np.arange(n_z) + 0.5) * dz,
        z_boundaries=boundary_idx * dz,
        substeps=substeps,
    )


def _energy(values: np.ndarray, dt: float) -> float:
    if len(values) < 2:
        return 0.0
    return float(trapezoid(np.abs(values) ** 2, dx=dt))


def _headline(run: _March, schedule: ControlSchedule, input_norm: float) -> float:
    grid = schedule.grid
    if schedule.stores:
        k_read = _step_index(grid, schedule.read_start)
        return _energy(run.e_out[k_read:], grid.dt) / input_norm
    return _energy(run.e_out, grid.dt) / input_norm


def propagate(
    m: LambdaMedium,
    input: PhotonWavepacket,
    schedule: ControlSchedule,
    *,
    n_z: int = DEFAULT_SLICES,
    check_convergence: bool = True,
) -> PropagationResult:
    """Send ``input`` through the cell under ``schedule`` and collect the output.

    With ``check_convergence`` the run is repeated with twice the slices and
    half the time step; the efficiency (or, without storage, the transmitted
    fraction) must change by less than 1%.

    Raises:
        MemoryModelError: If the medium is empty, the input is empty, or the
            schedule does not cover the input photon.
        ConvergenceError: If the refined run disagrees.
    """
    if m.alpha <= 0.0:
        raise MemoryModelError("no medium: alpha must be positive")
    if n_z < 2:
        raise MemoryModelError(f"n_z must be at least 2, got {n_z}")
    grid = schedule.grid
    first, last = _support(input)
    if first < grid.t_start - 0.5 * grid.dt or last > grid.t_stop + 0.5 * grid.dt:
        raise MemoryModelError(
            f"schedule [{grid.t_start:.4g}, {grid.t_stop:.4g}] μs is shorter than "
            f"the input support [{first:.4g}, {last:.4g}] μs"
        )
    if schedule.stores and last > schedule.read_start:
        logger.warning("Input photon still arriving after the read phase starts")
    if not input.grid.same_as(grid):
        logger.warning("Resampling the input photon onto the control schedule grid")
    probe = input.resampled(grid)
    input_norm = probe.norm

    run = _march(m, probe.amplitude, schedule, n_z)
    headline = _headline(run, schedule, input_norm)
    diagnostics: dict[str, Any] = {
        "n_z": n_z,
        "dt": grid.dt,
        "substeps": run.substeps,
    }
    if check_convergence:
        fine_schedule = schedule.refined(2)
        fine = _march(m, input.resampled(fine_schedule.grid).amplitude, fine_schedule, 2 * n_z)
        fine_headline = _headline(fine, fine_schedule, input_norm)
        diagnostics["efficiency_change"] = check_converged(
            "efficiency" if schedule.stores else "transmission",
            headline,
            fine_headline,
            RELATIVE_TOLERANCE * max(headline, 1e-3),
            diagnostics,
        )

    e_out = run.e_out
    out_norm = _energy(e_out, grid.dt)
    if out_norm > 1.0:
        logger.warning(f"Output norm {out_norm:.9g} exceeds one; rescaling")
        e_out = e_out / math.sqrt(out_norm)
    transmitted = PhotonWavepacket(grid, e_out)

    if schedule.stores:
        k_hold = _step_index(grid, schedule.hold_start)
        k_read = _step_index(grid, schedule.read_start)
        leaked = _energy(e_out[: k_hold + 1], grid.dt) / input_norm
        retrieved_amp = np.where(np.arange(grid.n) >= k_read, e_out, 0.0)
        stored = run.stored / input_norm
    else:
        leaked = out_norm / input_norm
        retrieved_amp = np.zeros(grid.n, dtype=complex)
        stored = 0.0
    retrieved = PhotonWavepacket(grid, retrieved_amp)
    efficiency = min(max(retrieved.norm / input_norm, 0.0), 1.0)

    coupling = 0.5 * m.alpha * gamma_p(m)
    snapshot = None
    if run.snapshot is not None:
        snapshot = SpinWave(run.z_centres, math.sqrt(coupling) * run.snapshot)
    field_map = FieldMap(
        z_grid=run.z_boundaries,
        times=np.array(run.map_times),
        intensity=np.array(run.map_rows),
    )
    logger.info(
        f"EIT run d={optical_depth(m):.3g} ({schedule.retrieval_direction}): "
        f"leaked={leaked:.4f} stored={stored:.4f} η={efficiency:.4f}"
    )
    return PropagationResult(
        transmitted=transmitted,
        retrieved=retrieved,
        leaked_fraction=leaked,
        stored_fraction=stored,
        efficiency=efficiency,
        field_map=field_map,
        spin_wave_snapshot=snapshot,
        direction=schedule.retrieval_direction,
        diagnostics=diagnostics,
    )


def spin_wave_profile(result: PropagationResult) -> SpinWave:
    """Spin wave at the middle of the hold phase."""
    if result.spin_wave_snapshot is None or result.stored_fraction < NOTHING_STORED:
        raise MemoryModelError("nothing stored: the control was never switched off")
    return result.spin_wave_snapshot


def group_delay(result: PropagationResult, input: PhotonWavepacket) -> float:
    """Delay of the transmitted intensity peak behind the input peak (μs)."""
    return result.transmitted.peak_time - input.peak_time


def summary_payload(result: PropagationResult, m: LambdaMedium) -> dict[str, Any]:
    return {
        "eta": result.efficiency,
        "leaked": result.leaked_fraction,
        "stored": result.stored_fraction,
        "direction": result.direction,
        "d": optical_depth(m),
        "gamma_p": gamma_p(m),
        "gamma_s": gamma_s_eff(m),
    }


def field_map_csv(field_map: FieldMap) -> str:
    """Long-format CSV ``z_cm,t_r_us,intensity``."""
    n_t, n_z = field_map.intensity.shape
    return csv_text(
        ("z_cm", "t_r_us", "intensity"),
        [
            np.tile(field_map.z_grid, n_t),
            np.repeat(field_map.times, n_z),
            field_map.intensity.ravel(),
        ],
    )


def spin_wave_csv(spin_wave: SpinWave) -> str:
    return csv_text(
        ("z_cm", "re_s", "im_s"),
        [spin_wave.z_grid, spin_wave.amplitude.real, spin_wave.amplitude.imag],
    )
