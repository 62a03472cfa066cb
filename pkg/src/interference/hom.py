"""Mode overlap and Hong-Ou-Mandel coincidences of single-photon wavepackets."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from src.photon.models import PhotonWavepacket, TimeGrid
from src.utils.output import csv_text

logger = logging.getLogger(__name__)

UNIT_NORM_TOLERANCE = 1e-6
# Longest time axis kept for the joint detection density.
MAX_DENSITY_SAMPLES = 1500
SUPPORT_THRESHOLD = 1e-12


class InterferenceError(ValueError):
    """Raised for empty or unnormalized photons."""


@dataclass(frozen=True)
class OverlapReport:
    overlap: complex
    fidelity: float


@dataclass(frozen=True)
class CoincidenceRecord:
    """Joint detection density p(t₁, t₂) behind a 50:50 beam splitter.

    ``density[i, j]`` is the density at t₁ = times[i], t₂ = times[j].
    """

    integrated: float
    fidelity: float
    times: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _common_grid(a: PhotonWavepacket, b: PhotonWavepacket) -> TimeGrid:
    if a.grid.same_as(b.grid):
        return a.grid
    dt = min(a.grid.dt, b.grid.dt)
    start = min(a.grid.t_start, b.grid.t_start)
    stop = max(a.grid.t_stop, b.grid.t_stop)
    logger.warning(
        f"Resampling wavepackets onto a common grid [{start:.4g}, {stop:.4g}] μs, dt={dt:.3g}"
    )
    return TimeGrid.uniform(start, stop, dt)


def _on_common_grid(
    a: PhotonWavepacket, b: PhotonWavepacket
) -> tuple[PhotonWavepacket, PhotonWavepacket]:
    grid = _common_grid(a, b)
    return a.resampled(grid), b.resampled(grid)


def mode_overlap(a: PhotonWavepacket, b: PhotonWavepacket) -> OverlapReport:
    """Inner product ⟨a|b⟩ and the norm-independent fidelity |⟨a|b⟩|²/(‖a‖²‖b‖²)."""
    a, b = _on_common_grid(a, b)
    norm_a, norm_b = a.norm, b.norm
    if norm_a == 0.0 or norm_b == 0.0:
        raise InterferenceError("mode overlap of an empty wavepacket is undefined")
    overlap = complex(trapezoid(np.conj(a.amplitude) * b.amplitude, dx=a.grid.dt))
    fidelity = min(abs(overlap) ** 2 / (norm_a * norm_b), 1.0)
    return OverlapReport(overlap=overlap, fidelity=fidelity)


def _check_unit(packet: PhotonWavepacket, label: str, rescale: bool) -> PhotonWavepacket:
    norm = packet.norm
    if norm == 0.0:
        raise InterferenceError(f"{label} photon is empty")
    if abs(norm - 1.0) <= UNIT_NORM_TOLERANCE:
        return packet
    if not rescale:
        raise InterferenceError(
            f"{label} photon has norm {norm:.9g}; normalize it or pass rescale=True"
        )
    return packet.normalized()


def _crop(a: np.ndarray, b: np.ndarray) -> slice:
    weight = np.abs(a) ** 2 + np.abs(b) ** 2
    inside = np.flatnonzero(weight > SUPPORT_THRESHOLD * weight.max())
    return slice(max(int(inside[0]) - 1, 0), int(inside[-1]) + 2)


def hom_coincidence(
    a: PhotonWavepacket, b: PhotonWavepacket, *, rescale: bool = False
) -> CoincidenceRecord:
    """Coincidence density and probability for photons meeting on a beam splitter.

    p(t₁,t₂) = ¼|φ_a(t₁)φ_b(t₂) - φ_a(t₂)φ_b(t₁)|² over the whole plane, so the
    integrated coincidence equals ½(1 - fidelity).

    Raises:
        InterferenceError: If a photon is empty, or not unit-norm and
            ``rescale`` is False.
    """
    a = _check_unit(a, "first", rescale)
    b = _check_unit(b, "second", rescale)
    a, b = _on_common_grid(a, b)

    window = _crop(a.amplitude, b.amplitude)
    amp_a = a.amplitude[window]
    amp_b = b.amplitude[window]
    times = a.times[window]
    dt = a.grid.dt
    stride = max(1, math.ceil(len(times) / MAX_DENSITY_SAMPLES))
    if stride > 1:
        logger.debug(f"Decimating the coincidence grid by {stride}")
        amp_a, amp_b, times = amp_a[::stride], amp_b[::stride], times[::stride]
        dt *= stride

    # Renormalize on the working grid so the quadrature identities hold exactly.
    amp_a = amp_a / math.sqrt(float(trapezoid(np.abs(amp_a) ** 2, dx=dt)))
    amp_b = amp_b / math.sqrt(float(trapezoid(np.abs(amp_b) ** 2, dx=dt)))
    overlap = complex(trapezoid(np.conj(amp_a) * amp_b, dx=dt))
    fidelity = min(abs(overlap) ** 2, 1.0)

    exchange = np.outer(amp_a, amp_b) - np.outer(amp_b, amp_a)
    density = 0.25 * np.abs(exchange) ** 2
    integrated = float(trapezoid(trapezoid(density, dx=dt, axis=1), dx=dt))
    integrated = min(max(integrated, 0.0), 0.5)
    logger.debug(f"HOM: fidelity={fidelity:.6f} coincidence={integrated:.6f}")
    return CoincidenceRecord(
        integrated=integrated, fidelity=fidelity, times=times, density=density
    )


def delay_marginal(record: CoincidenceRecord) -> tuple[np.ndarray, np.ndarray]:
    """G(τ) = ∫p(t, t+τ)dt against the detection delay τ = t₂ - t₁."""
    n = len(record.times)
    offsets = np.arange(-(n - 1), n)
    marginal = np.array(
        [np.trace(record.density, offset=int(k)) for k in offsets]
    ) * record.dt
    return offsets * record.dt, marginal


def beat_minima(record: CoincidenceRecord) -> np.ndarray:
    """Delays at which the coincidence marginal has a local minimum."""
    taus, marginal = delay_marginal(record)
    peak = float(marginal.max())
    if peak == 0.0:
        return np.array([])
    indices, _ = find_peaks(-marginal, prominence=1e-6 * peak)
    return taus[indices]


def align_in_time(reference: PhotonWavepacket, packet: PhotonWavepacket) -> PhotonWavepacket:
    """Shift ``packet`` so its intensity centroid coincides with ``reference``'s."""
    return packet.shifted(reference.centroid - packet.centroid)


def storage_interference_test(
    source: PhotonWavepacket, memory_output: PhotonWavepacket
) -> CoincidenceRecord:
    """HOM test of a retrieved photon against a fresh photon from the source.

    The retrieved packet is normalized (loss alone does not spoil the test) and
    the fresh photon is timed to arrive together with it. The record's
    fidelity is the storage-coherence figure.
    """
    if memory_output.norm == 0.0:
        raise InterferenceError("memory returned no photon")
    retrieved = memory_output.normalized()
    fresh = align_in_time(retrieved, source.normalized()).resampled(retrieved.grid)
    record = hom_coincidence(fresh, retrieved, rescale=True)
    logger.info(
        f"Storage coherence: fidelity={record.fidelity:.4f}, "
        f"coincidence={record.integrated:.4f}"
    )
    return record


def density_csv(record: CoincidenceRecord, max_points: int = 200) -> str:
    """Long-format CSV ``t1_us,t2_us,p`` decimated to at most ``max_points`` per axis."""
    stride = max(1, math.ceil(len(record.times) / max_points))
    times = record.times[::stride]
    density = record.density[::stride, ::stride]
    n = len(times)
    return csv_text(
        ("t1_us", "t2_us", "p"),
        [np.repeat(times, n), np.tile(times, n), density.ravel()],
    )


def marginal_csv(record: CoincidenceRecord) -> str:
    taus, marginal = delay_marginal(record)
    return csv_text(("tau_us", "g"), [taus, marginal])
