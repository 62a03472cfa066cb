"""Closed-form EIT relations and control schedules."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.memory.medium import (
    LambdaMedium,
    MemoryModelError,
    check_feasibility,
    control_for_fit,
    gamma_p,
    gamma_s_eff,
    group_velocity,
    optical_depth,
    storage_efficiency_decay,
)
from src.memory.schedule import ControlSchedule
from src.photon.models import TimeGrid


@pytest.fixture
def unit_medium() -> LambdaMedium:
    return LambdaMedium(length=10.0, alpha=1.0, gamma_p_natural=2.0)


class TestGroupVelocity:
    def test_reference_value(self, unit_medium):
        assert group_velocity(unit_medium, 1.0) == pytest.approx(1.0)

    def test_quadratic_in_control(self, unit_medium):
        assert group_velocity(unit_medium, 2.0) == pytest.approx(4.0)

    def test_control_off_stops_light(self, unit_medium):
        assert group_velocity(unit_medium, 0.0) == 0.0

    def test_no_medium(self):
        empty = LambdaMedium(length=1.0, alpha=0.0, gamma_p_natural=1.0)
        with pytest.raises(MemoryModelError, match="no medium"):
            group_velocity(empty, 1.0)

    def test_buffer_gas_slows_light(self):
        bare = LambdaMedium(length=1.0, alpha=1.0, gamma_p_natural=1.0)
        buffered = bare.model_copy(update={"collision_rate": 9.0})
        assert gamma_p(buffered) == pytest.approx(10.0)
        assert group_velocity(buffered, 3.0) == pytest.approx(group_velocity(bare, 3.0) / 10)


def test_medium_validation():
    with pytest.raises(ValidationError):
        LambdaMedium(length=0.0, alpha=1.0, gamma_p_natural=1.0)
    with pytest.raises(ValidationError):
        LambdaMedium(length=1.0, alpha=1.0, gamma_p_natural=0.0)


def test_motional_dephasing_adds_to_spin_decay():
    m = LambdaMedium(
        length=1.0,
        alpha=1.0,
        gamma_p_natural=1.0,
        gamma_s=0.01,
        diffusion_const=2.0,
        wavevector_mismatch=0.5,
    )
    assert gamma_s_eff(m) == pytest.approx(0.51)


class TestFeasibility:
    def test_pulse_exactly_filling_the_cell(self, unit_medium):
        # v_g = 10 cm/μs through a 10 cm cell.
        report = check_feasibility(unit_medium, math.sqrt(10.0), tau=1.0)
        assert report.group_velocity == pytest.approx(10.0)
        assert report.lower_margin == pytest.approx(1.0)

    def test_fitted_control_in_a_buffer_gas_cell(self, buffer_gas_medium):
        omega = control_for_fit(buffer_gas_medium, tau=1.0, fill=0.8)
        report = check_feasibility(buffer_gas_medium, omega, tau=1.0)
        assert optical_depth(buffer_gas_medium) == pytest.approx(15.0)
        assert report.lower_margin == pytest.approx(0.8)
        assert report.upper_margin == pytest.approx(1.0 / (0.8 * math.sqrt(15.0)))
        assert report.adiabaticity > 1.0

    def test_long_pulses_violate_the_lower_bound(self, unit_medium):
        short = check_feasibility(unit_medium, 1.0, tau=1.0)
        long = check_feasibility(unit_medium, 1.0, tau=1e6)
        assert long.lower_margin > short.lower_margin
        assert long.lower_margin > 1.0
        assert long.upper_margin < short.upper_margin

    def test_control_off_is_an_error(self, unit_medium):
        with pytest.raises(MemoryModelError, match="group velocity is zero"):
            check_feasibility(unit_medium, 0.0, tau=1.0)

    def test_non_positive_duration(self, unit_medium):
        with pytest.raises(MemoryModelError):
            check_feasibility(unit_medium, 1.0, tau=0.0)


class TestDecay:
    def test_decay_law(self):
        m = LambdaMedium(length=1.0, alpha=1.0, gamma_p_natural=1.0, gamma_s=0.25)
        assert storage_efficiency_decay(0.8, m, hold=2.0) == pytest.approx(0.8 * math.exp(-1.0))

    def test_no_decay_without_dephasing(self, unit_medium):
        assert storage_efficiency_decay(0.7, unit_medium, hold=100.0) == pytest.approx(0.7)

    @pytest.mark.parametrize("eta0, hold", [(1.5, 1.0), (-0.1, 1.0), (0.5, -1.0)])
    def test_invalid_arguments(self, unit_medium, eta0, hold):
        with pytest.raises(MemoryModelError):
            storage_efficiency_decay(eta0, unit_medium, hold)


class TestControlSchedule:
    @pytest.fixture
    def schedule(self) -> ControlSchedule:
        return ControlSchedule.storage(
            dt=0.01,
            omega_write=5.0,
            switch_off=1.0,
            hold_time=0.5,
            read_duration=1.0,
            ramp_time=0.1,
        )

    def test_phase_boundaries(self, schedule):
        assert schedule.stores
        assert schedule.retrieval_direction == "counter"
        assert schedule.hold_start == pytest.approx(1.1)
        assert schedule.hold_mid == pytest.approx(1.35)
        assert schedule.read_start == pytest.approx(1.6)
        assert schedule.grid.t_stop == pytest.approx(2.6)

    def test_control_values(self, schedule):
        assert schedule.at(0.5) == pytest.approx(5.0)
        assert schedule.at(1.05) == pytest.approx(2.5, abs=1e-6)
        assert schedule.at(1.3) == 0.0
        assert schedule.at(2.2) == pytest.approx(5.0)

    def test_separate_read_power(self):
        schedule = ControlSchedule.storage(
            dt=0.01,
            omega_write=5.0,
            omega_read=2.0,
            switch_off=0.5,
            hold_time=0.0,
            read_duration=1.0,
            direction="co",
        )
        assert schedule.at(1.2) == pytest.approx(2.0)
        assert schedule.retrieval_direction == "co"

    def test_refined_keeps_the_phases(self, schedule):
        fine = schedule.refined(2)
        assert fine.grid.n == 2 * schedule.grid.n - 1
        assert fine.read_start == schedule.read_start
        assert np.allclose(fine.omega_c[::2], schedule.omega_c)

    def test_constant_schedule_never_stores(self):
        schedule = ControlSchedule.constant(TimeGrid.uniform(0.0, 1.0, 0.1), 3.0)
        assert not schedule.stores
        assert np.all(schedule.omega_c == 3.0)

    def test_read_phase_must_fit(self):
        grid = TimeGrid.uniform(0.0, 1.0, 0.1)
        with pytest.raises(MemoryModelError, match="before the read phase"):
            ControlSchedule(grid, np.ones(grid.n), hold_time=1.0, switch_off=0.5)

    def test_rejects_negative_control_and_unknown_direction(self):
        grid = TimeGrid.uniform(0.0, 1.0, 0.1)
        with pytest.raises(MemoryModelError):
            ControlSchedule(grid, -np.ones(grid.n))
        with pytest.raises(MemoryModelError):
            ControlSchedule(grid, np.ones(grid.n), retrieval_direction="sideways")
