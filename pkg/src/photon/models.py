"""Time grids and single-photon wavepackets shared by every simulator."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

logger = logging.getLogger(__name__)

# Numerical slack on the "squared norm is a probability" invariant.
NORM_TOLERANCE = 1e-6


def frozen_array(values: np.ndarray) -> np.ndarray:
    """Read-only copy of ``values``, for arrays held by frozen dataclasses."""
    array = np.array(values, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling of time in microseconds.

    Attributes:
        t_start: Time of the first sample (μs).
        dt: Sample spacing (μs).
        n: Number of samples.
    """

    t_start: float
    dt: float
    n: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.t_start):
            raise ValueError(f"t_start must be finite, got {self.t_start}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.n < 2:
            raise ValueError(f"A time grid needs at least 2 samples, got {self.n}")

    @classmethod
    def uniform(cls, t_start: float, t_stop: float, dt: float) -> TimeGrid:
        """Build the grid covering ``[t_start, t_stop]`` with spacing ``dt``."""
        n = int(round((t_stop - t_start) / dt)) + 1
        return cls(t_start=t_start, dt=dt, n=n)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    @property
    def t_stop(self) -> float:
        return self.t_start + self.dt * (self.n - 1)

    def refined(self, factor: int = 2) -> TimeGrid:
        """Same span sampled ``factor`` times more densely."""
        return TimeGrid(self.t_start, self.dt / factor, (self.n - 1) * factor + 1)

    def same_as(self, other: TimeGrid) -> bool:
        return (
            self.n == other.n
            and math.isclose(self.t_start, other.t_start, abs_tol=1e-12)
            and math.isclose(self.dt, other.dt, rel_tol=1e-12)
        )


@dataclass(frozen=True)
class PhotonWavepacket:
    """Complex temporal amplitude φ(t) of a single photon in μs^(-1/2).

    The squared norm ∫|φ|²dt is the probability that the photon exists, so it
    never exceeds one.
    """

    grid: TimeGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amplitude = np.asarray(self.amplitude, dtype=complex)
        if amplitude.shape != (self.grid.n,):
            raise ValueError(
                f"Amplitude has shape {amplitude.shape}, grid expects ({self.grid.n},)"
            )
        if not np.all(np.isfinite(amplitude)):
            raise ValueError("Wavepacket amplitude contains non-finite samples")
        object.__setattr__(self, "amplitude", frozen_array(amplitude))
        if self.norm > 1.0 + NORM_TOLERANCE:
            raise ValueError(
                f"Wavepacket norm {self.norm:.9g} exceeds one; not a single photon"
            )

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def norm(self) -> float:
        """Squared norm ∫|φ(t)|²dt (trapezoid rule)."""
        return float(trapezoid(self.intensity, dx=self.grid.dt))

    @property
    def centroid(self) -> float:
        """Intensity-weighted mean time."""
        total = self.norm
        if total == 0.0:
            raise ValueError("Centroid of an empty wavepacket is undefined")
        return float(trapezoid(self.times * self.intensity, dx=self.grid.dt) / total)

    @property
    def peak_time(self) -> float:
        """Time of the intensity maximum, refined by a parabola through 3 samples."""
        intensity = self.intensity
        i = int(np.argmax(intensity))
        t = float(self.times[i])
        if 0 < i < self.grid.n - 1:
            left, mid, right = intensity[i - 1], intensity[i], intensity[i + 1]
            curvature = left - 2.0 * mid + right
            if curvature < 0.0:
                t += 0.5 * self.grid.dt * (left - right) / curvature
        return t

    @property
    def duration(self) -> float:
        """Full width at half maximum of the intensity (μs), 0 for an empty packet."""
        intensity = self.intensity
        peak = float(intensity.max())
        if peak == 0.0:
            return 0.0
        half = 0.5 * peak
        above = np.flatnonzero(intensity >= half)
        first, last = int(above[0]), int(above[-1])
        t = self.times

        def crossing(i_out: int, i_in: int) -> float:
            y_out, y_in = intensity[i_out], intensity[i_in]
            return float(t[i_out] + (half - y_out) / (y_in - y_out) * (t[i_in] - t[i_out]))

        t_rise = crossing(first - 1, first) if first > 0 else float(t[first])
        t_fall = crossing(last + 1, last) if last < self.grid.n - 1 else float(t[last])
        return t_fall - t_rise

    def scaled(self, factor: complex) -> PhotonWavepacket:
        return PhotonWavepacket(self.grid, self.amplitude * factor)

    def normalized(self) -> PhotonWavepacket:
        """Unit-norm copy (the photon conditioned on its existence)."""
        norm = self.norm
        if norm == 0.0:
            raise ValueError("Cannot normalize an empty wavepacket")
        return self.scaled(1.0 / math.sqrt(norm))

    def shifted(self, delay: float) -> PhotonWavepacket:
        """Same samples, moved later in time by ``delay`` μs."""
        grid = TimeGrid(self.grid.t_start + delay, self.grid.dt, self.grid.n)
        return PhotonWavepacket(grid, self.amplitude)

    def time_reversed(self) -> PhotonWavepacket:
        """Mirror image about the grid centre, φ(t) -> φ*(t_start + t_stop - t)."""
        return PhotonWavepacket(self.grid, np.conj(self.amplitude[::-1]))

    def resampled(self, grid: TimeGrid) -> PhotonWavepacket:
        """Linear interpolation onto ``grid``; zero outside the original span."""
        if grid.same_as(self.grid):
            return self
        t_new, t_old = grid.times, self.times
        real = np.interp(t_new, t_old, self.amplitude.real, left=0.0, right=0.0)
        imag = np.interp(t_new, t_old, self.amplitude.imag, left=0.0, right=0.0)
        amplitude = real + 1j * imag
        # Interpolation can nudge a saturated packet just past unit norm.
        norm = float(trapezoid(np.abs(amplitude) ** 2, dx=grid.dt))
        if norm > 1.0:
            amplitude = amplitude / math.sqrt(norm)
        return PhotonWavepacket(grid, amplitude)


def sin2_wavepacket(
    grid: TimeGrid,
    duration: float,
    probability: float = 1.0,
    start: float = 0.0,
) -> PhotonWavepacket:
    """Photon with amplitude ∝ sin²(π(t-start)/duration) on its support.

    Args:
        grid: Sampling grid; should cover ``[start, start + duration]``.
        duration: Full length of the support (μs).
        probability: Squared norm of the photon.
        start: Beginning of the support (μs).
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    t = grid.times - start
    inside = (t >= 0.0) & (t <= duration)
    shape = np.where(inside, np.sin(np.pi * t / duration) ** 2, 0.0)
    # ∫ sin⁴ over one support equals 3/8 of its length.
    amplitude = math.sqrt(probability / (0.375 * duration)) * shape
    return PhotonWavepacket(grid, amplitude.astype(complex))


def gaussian_wavepacket(
    grid: TimeGrid,
    center: float,
    sigma: float,
    probability: float = 1.0,
    detuning: float = 0.0,
) -> PhotonWavepacket:
    """Gaussian photon whose intensity has standard deviation ``sigma`` (μs).

    ``detuning`` (rad/μs) shifts the carrier, φ -> φ·exp(-iΔω(t - center)).
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    t = grid.times - center
    envelope = (2.0 * np.pi * sigma**2) ** -0.25 * np.exp(-(t**2) / (4.0 * sigma**2))
    amplitude = math.sqrt(probability) * envelope * np.exp(-1j * detuning * t)
    return PhotonWavepacket(grid, amplitude)
