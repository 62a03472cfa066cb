import math

import numpy as np
import pytest

from src.interference.hom import (
    InterferenceError,
    align_in_time,
    beat_minima,
    delay_marginal,
    density_csv,
    hom_coincidence,
    mode_overlap,
    storage_interference_test,
)
from src.photon.models import PhotonWavepacket, TimeGrid, gaussian_wavepacket, sin2_wavepacket


@pytest.fixture
def grid() -> TimeGrid:
    return TimeGrid.uniform(-5.0, 5.0, 0.005)


def test_identical_photons_never_coincide(grid):
    photon = gaussian_wavepacket(grid, center=0.0, sigma=0.5)
    record = hom_coincidence(photon, photon)
    assert record.fidelity == pytest.approx(1.0, abs=1e-9)
    assert record.integrated == pytest.approx(0.0, abs=1e-9)


def test_disjoint_photons_behave_classically():
    grid = TimeGrid.uniform(0.0, 4.0, 0.01)
    early = sin2_wavepacket(grid, duration=1.0, start=0.0)
    late = sin2_wavepacket(grid, duration=1.0, start=2.0)
    record = hom_coincidence(early, late)
    assert record.fidelity == pytest.approx(0.0, abs=1e-12)
    assert record.integrated == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("offset", [0.1, 0.5, 1.0])
def test_gaussian_time_offset(grid, offset):
    sigma = 0.5
    a = gaussian_wavepacket(grid, center=0.0, sigma=sigma)
    b = gaussian_wavepacket(grid, center=offset, sigma=sigma)
    expected = math.exp(-(offset**2) / (4.0 * sigma**2))
    assert mode_overlap(a, b).fidelity == pytest.approx(expected, abs=1e-6)
    record = hom_coincidence(a, b)
    assert record.fidelity == pytest.approx(expected, abs=1e-6)


def test_coincidence_matches_fidelity_and_is_symmetric(grid):
    a = gaussian_wavepacket(grid, center=-0.3, sigma=0.4)
    b = gaussian_wavepacket(grid, center=0.4, sigma=0.7, detuning=1.5)
    forward = hom_coincidence(a, b)
    backward = hom_coincidence(b, a)
    assert forward.integrated == pytest.approx(0.5 * (1.0 - forward.fidelity), abs=1e-9)
    assert backward.integrated == pytest.approx(forward.integrated, abs=1e-12)
    assert np.allclose(forward.density, forward.density.T)


def test_global_phase_does_not_matter(grid):
    a = gaussian_wavepacket(grid, center=0.0, sigma=0.5)
    b = gaussian_wavepacket(grid, center=0.3, sigma=0.5)
    plain = hom_coincidence(a, b)
    rotated = hom_coincidence(a, b.scaled(np.exp(1.1j)))
    assert rotated.integrated == pytest.approx(plain.integrated, abs=1e-12)


class TestNormalization:
    def test_lossy_photon_is_rejected(self, grid):
        a = gaussian_wavepacket(grid, center=0.0, sigma=0.5)
        lossy = gaussian_wavepacket(grid, center=0.0, sigma=0.5, probability=0.5)
        with pytest.raises(InterferenceError, match="rescale=True"):
            hom_coincidence(a, lossy)

    def test_rescale_conditions_on_detection(self, grid):
        a = gaussian_wavepacket(grid, center=0.0, sigma=0.5)
        lossy = gaussian_wavepacket(grid, center=0.2, sigma=0.5, probability=0.5)
        rescaled = hom_coincidence(a, lossy, rescale=True)
        reference = hom_coincidence(a, lossy.normalized())
        assert rescaled.integrated == pytest.approx(reference.integrated)

    def test_empty_photon(self, grid):
        empty = PhotonWavepacket(grid, np.zeros(grid.n, dtype=complex))
        with pytest.raises(InterferenceError):
            hom_coincidence(empty, empty, rescale=True)
        with pytest.raises(InterferenceError):
            mode_overlap(empty, gaussian_wavepacket(grid, 0.0, 0.5))


def test_overlap_on_different_grids_resamples(caplog):
    fine = TimeGrid.uniform(-4.0, 4.0, 0.002)
    coarse = TimeGrid.uniform(-5.0, 5.0, 0.004)
    a = gaussian_wavepacket(fine, center=0.0, sigma=0.5)
    b = gaussian_wavepacket(coarse, center=0.0, sigma=0.5)
    assert mode_overlap(a, b).fidelity == pytest.approx(1.0, abs=1e-5)
    assert "Resampling" in caplog.text


def test_quantum_beats_follow_the_frequency_difference():
    grid = TimeGrid.uniform(-5.0, 5.0, 0.01)
    a = gaussian_wavepacket(grid, center=0.0, sigma=1.0)
    b = gaussian_wavepacket(grid, center=0.0, sigma=1.0, detuning=2.0 * math.pi * 2.0)
    record = hom_coincidence(a, b)

    taus, marginal = delay_marginal(record)
    assert np.allclose(marginal, marginal[::-1])

    minima = beat_minima(record)
    central = minima[np.abs(minima) <= 2.0 + 1e-9]
    assert np.any(np.isclose(central, 0.0, atol=1e-9))
    assert np.allclose(np.diff(central), 0.5, atol=0.011)


def test_align_in_time():
    grid = TimeGrid.uniform(0.0, 3.0, 0.01)
    reference = sin2_wavepacket(grid, duration=1.0, start=1.5)
    packet = sin2_wavepacket(grid, duration=1.0, start=0.0)
    aligned = align_in_time(reference, packet)
    assert aligned.centroid == pytest.approx(reference.centroid, abs=1e-9)


def test_storage_interference_ignores_loss_and_delay():
    grid = TimeGrid.uniform(0.0, 3.0, 0.005)
    source = sin2_wavepacket(grid, duration=1.0, probability=0.8, start=0.5)
    retrieved = source.scaled(math.sqrt(0.5)).shifted(1.0)
    record = storage_interference_test(source, retrieved)
    assert record.fidelity == pytest.approx(1.0, abs=1e-6)
    assert record.integrated == pytest.approx(0.0, abs=1e-6)


def test_storage_interference_needs_a_photon():
    grid = TimeGrid.uniform(0.0, 1.0, 0.01)
    source = sin2_wavepacket(grid, duration=1.0)
    with pytest.raises(InterferenceError, match="no photon"):
        storage_interference_test(source, source.scaled(0.0))


def test_density_csv_is_decimated(grid):
    photon = gaussian_wavepacket(grid, center=0.0, sigma=0.5)
    text = density_csv(hom_coincidence(photon, photon), max_points=50)
    lines = text.splitlines()
    assert lines[0] == "t1_us,t2_us,p"
    assert len(lines) - 1 <= 50 * 50
