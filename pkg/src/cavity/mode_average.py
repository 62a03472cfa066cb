"""Averaging V-STIRAP emission over atoms spread across the cavity mode.

An atom at radius r from the cavity axis couples with g(r) = g_max·exp(-r²/w²).
Atoms loaded uniformly in area over a disc of radius ``radius_cutoff·w`` give a
coupling whose log, u = ln(g_max/g) = r²/w², is uniformly distributed.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from src.cavity.params import CavityError, CavityParams
from src.cavity.vstirap import DrivePulse, EmissionRecord, simulate_vstirap
from src.photon.models import PhotonWavepacket

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ModeBin:
    g: float
    weight: float


@dataclass(frozen=True)
class ModeDistribution:
    """Discrete distribution of coupling strengths with weights summing to one."""

    g_max: float
    bins: tuple[ModeBin, ...]
    rule: str = "custom"

    def __post_init__(self) -> None:
        if self.g_max <= 0.0:
            raise CavityError(f"g_max must be positive, got {self.g_max}")
        if not self.bins:
            raise CavityError("mode distribution needs at least one bin")
        for item in self.bins:
            if not 0.0 < item.g <= self.g_max * (1.0 + 1e-12):
                raise CavityError(f"bin coupling {item.g} outside (0, g_max]")
            if item.weight < 0.0:
                raise CavityError(f"bin weight must be non-negative, got {item.weight}")
        total = sum(item.weight for item in self.bins)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise CavityError(f"mode weights sum to {total:.12g}, expected 1")

    @classmethod
    def delta(cls, g: float) -> ModeDistribution:
        """Every atom at the same coupling."""
        return cls(g_max=g, bins=(ModeBin(g=g, weight=1.0),), rule="delta")

    @classmethod
    def gaussian_area(
        cls, g_max: float, n_bins: int = 20, radius_cutoff: float = 1.0
    ) -> ModeDistribution:
        """Area-uniform loading of a Gaussian mode, binned evenly in g.

        Args:
            g_max: On-axis coupling (rad/μs).
            n_bins: Number of equal-width bins between the cutoff coupling and g_max.
            radius_cutoff: Outermost loaded radius in units of the mode waist.
        """
        if n_bins < 1:
            raise CavityError(f"n_bins must be at least 1, got {n_bins}")
        if radius_cutoff <= 0.0:
            raise CavityError(f"radius_cutoff must be positive, got {radius_cutoff}")
        u_max = radius_cutoff**2
        edges = np.linspace(g_max * math.exp(-u_max), g_max, n_bins + 1)
        u_edges = np.log(g_max / edges)
        weights = (u_edges[:-1] - u_edges[1:]) / u_max
        centres = 0.5 * (edges[:-1] + edges[1:])
        bins = tuple(
            ModeBin(g=float(g), weight=float(w)) for g, w in zip(centres, weights, strict=True)
        )
        return cls(g_max=g_max, bins=bins, rule="gaussian_area")

    @property
    def mean_g(self) -> float:
        return sum(item.g * item.weight for item in self.bins)


@dataclass(frozen=True)
class BinEmission:
    g: float
    weight: float
    p_emit: float


@dataclass(frozen=True)
class ModeAverageResult:
    """Ensemble-averaged photon and the per-coupling emission table.

    ``photon`` is normalized to unit area; ``p_emit`` is the weighted mean
    emission probability before that normalization.
    """

    photon: PhotonWavepacket
    bins: tuple[BinEmission, ...]
    p_emit: float


def average_over_mode(
    p: CavityParams,
    drive: DrivePulse,
    dist: ModeDistribution,
    *,
    threads: int = 1,
    check_convergence: bool = True,
) -> ModeAverageResult:
    """Run :func:`simulate_vstirap` per bin and average the intensities.

    Bins are independent and may run on ``threads`` workers; results are
    combined in bin order.
    """
    if threads < 1:
        raise CavityError(f"threads must be at least 1, got {threads}")

    def run(item: ModeBin) -> EmissionRecord:
        return simulate_vstirap(
            p.model_copy(update={"g": item.g}),
            drive,
            check_convergence=check_convergence,
        )

    if threads == 1:
        records = [run(item) for item in dist.bins]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, dist.bins))

    intensity = np.zeros(drive.grid.n)
    for item, record in zip(dist.bins, records, strict=True):
        intensity += item.weight * record.photon.intensity
    area = float(trapezoid(intensity, dx=drive.grid.dt))
    if area <= 0.0:
        raise CavityError("no atom in the distribution emitted a photon")
    photon = PhotonWavepacket(drive.grid, np.sqrt(intensity / area).astype(complex))
    table = tuple(
        BinEmission(g=item.g, weight=item.weight, p_emit=record.p_emit)
        for item, record in zip(dist.bins, records, strict=True)
    )
    p_emit = sum(row.weight * row.p_emit for row in table)
    logger.info(
        f"Averaged {len(table)} couplings ({dist.rule}): mean p_emit={p_emit:.4f}, "
        f"peak at {photon.peak_time:.4g} μs"
    )
    return ModeAverageResult(photon=photon, bins=table, p_emit=p_emit)


def shape_error(a: PhotonWavepacket, b: PhotonWavepacket) -> float:
    """L2 distance between the unit-area intensity profiles of two photons."""
    if a.norm == 0.0 or b.norm == 0.0:
        raise CavityError("shape error of an empty wavepacket is undefined")
    b_on_a = b.resampled(a.grid) if not b.grid.same_as(a.grid) else b
    profile_a = a.intensity / a.norm
    profile_b = b_on_a.intensity / float(trapezoid(b_on_a.intensity, dx=a.grid.dt))
    return math.sqrt(float(trapezoid((profile_a - profile_b) ** 2, dx=a.grid.dt)))


def emission_table(result: ModeAverageResult) -> Sequence[np.ndarray]:
    """Columns ``g, weight, p_emit`` for CSV output."""
    return [
        np.array([row.g for row in result.bins]),
        np.array([row.weight for row in result.bins]),
        np.array([row.p_emit for row in result.bins]),
    ]
