"""Shared fixtures: parameter sets and photons used across the suite."""

import math
from collections.abc import Callable

import pytest

from src.cavity.params import CavityParams, kappa_from_mirrors
from src.memory.medium import LambdaMedium
from src.network.rus import RusConfig
from src.photon.models import PhotonWavepacket, TimeGrid, sin2_wavepacket

TWO_PI = 2.0 * math.pi


@pytest.fixture
def reference_cavity() -> CavityParams:
    """g_max, κ, γ = 2π·{15, 12, 3} rad/μs."""

    return CavityParams(g=TWO_PI * 15, kappa=TWO_PI * 12, gamma=TWO_PI * 3)


@pytest.fixture
def mirror_cavity() -> CavityParams:
    """100 μm cavity with T₁ = H = 2 ppm and T₂ = 100 ppm; κ from the mirrors."""

    base = CavityParams(
        g=TWO_PI * 15,
        kappa=0.0,
        gamma=TWO_PI * 3,
        t1=2e-6,
        t2=100e-6,
        h=2e-6,
        cavity_length=100.0,
    )
    return base.model_copy(update={"kappa": kappa_from_mirrors(base)})


@pytest.fixture
def buffer_gas_medium() -> LambdaMedium:
    """20 cm cell, d = 15, neon buffer gas adding 2π·200 MHz to γ_P."""

    return LambdaMedium(
        length=20.0,
        alpha=0.75,
        gamma_p_natural=TWO_PI * 3,
        collision_rate=TWO_PI * 200,
    )


@pytest.fixture
def sin2_target() -> PhotonWavepacket:
    """1 μs sin² photon with norm 0.8 on [0, 1.5] μs."""

    grid = TimeGrid.uniform(0.0, 1.5, 0.001)
    return sin2_wavepacket(grid, duration=1.0, probability=0.8)


@pytest.fixture
def rus_config() -> Callable[..., RusConfig]:
    """Factory for always-loaded chain configurations."""

    def make(**overrides: object) -> RusConfig:
        values: dict[str, object] = {
            "eta_store": 1.0,
            "eta_detect": 1.0,
            "p_bsm": 1.0,
            "gamma_s_memory": 0.0,
            "photon_slot": 5.0,
            "reset_time": 10.0,
            "target_chain_length": 3,
            "ideal_loading": True,
        }
        values.update(overrides)
        return RusConfig(**values)

    return make
