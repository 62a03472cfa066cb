"""Control-field schedules for write, hold and read."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.memory.medium import MemoryModelError
from src.photon.models import TimeGrid, frozen_array

logger = logging.getLogger(__name__)

Direction = Literal["co", "counter"]
DIRECTIONS: tuple[str, ...] = ("co", "counter")


@dataclass(frozen=True)
class ControlSchedule:
    """Sampled control Rabi frequency Ω_c(t) plus the phase boundaries.

    ``switch_off`` is the start of the ramp down; ``None`` means the control is
    never switched off and nothing is stored.
    """

    grid: TimeGrid
    omega_c: np.ndarray = field(repr=False)
    hold_time: float = 0.0
    ramp_time: float = 0.1
    retrieval_direction: Direction = "co"
    switch_off: float | None = None

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega_c, dtype=float)
        if omega.shape != (self.grid.n,):
            raise MemoryModelError(
                f"Control has shape {omega.shape}, grid expects ({self.grid.n},)"
            )
        if not np.all(np.isfinite(omega)) or np.any(omega < 0.0):
            raise MemoryModelError("Control Rabi frequency must be finite and >= 0")
        if self.hold_time < 0.0:
            raise MemoryModelError(f"hold_time must be >= 0, got {self.hold_time}")
        if self.ramp_time < 0.0:
            raise MemoryModelError(f"ramp_time must be >= 0, got {self.ramp_time}")
        if self.retrieval_direction not in DIRECTIONS:
            raise MemoryModelError(
                f"retrieval_direction must be one of {DIRECTIONS}, "
                f"got {self.retrieval_direction!r}"
            )
        if self.switch_off is not None and self.read_start > self.grid.t_stop:
            raise MemoryModelError(
                f"Schedule ends at {self.grid.t_stop:.4g} μs, before the read phase "
                f"starts at {self.read_start:.4g} μs"
            )
        object.__setattr__(self, "omega_c", frozen_array(omega))

    @property
    def stores(self) -> bool:
        return self.switch_off is not None

    @property
    def hold_start(self) -> float:
        """End of the ramp down."""
        if self.switch_off is None:
            return self.grid.t_stop
        return self.switch_off + self.ramp_time

    @property
    def hold_mid(self) -> float:
        return self.hold_start + 0.5 * self.hold_time

    @property
    def read_start(self) -> float:
        """Start of the ramp back up."""
        return self.hold_start + self.hold_time

    def at(self, t: np.ndarray | float) -> np.ndarray:
        return np.interp(t, self.grid.times, self.omega_c)

    def refined(self, factor: int = 2) -> ControlSchedule:
        """Same schedule sampled ``factor`` times more densely."""
        grid = self.grid.refined(factor)
        return ControlSchedule(
            grid=grid,
            omega_c=self.at(grid.times),
            hold_time=self.hold_time,
            ramp_time=self.ramp_time,
            retrieval_direction=self.retrieval_direction,
            switch_off=self.switch_off,
        )

    @classmethod
    def constant(cls, grid: TimeGrid, omega_c: float) -> ControlSchedule:
        """Control held at ``omega_c`` for the whole grid."""
        return cls(grid=grid, omega_c=np.full(grid.n, float(omega_c)))

    @classmethod
    def storage(
        cls,
        *,
        dt: float,
        omega_write: float,
        switch_off: float,
        hold_time: float,
        read_duration: float,
        t_start: float = 0.0,
        ramp_time: float = 0.1,
        omega_read: float | None = None,
        direction: Direction = "counter",
    ) -> ControlSchedule:
        """Write at ``omega_write``, ramp to zero, hold, ramp to ``omega_read``, read.

        Ramps are raised cosines of length ``ramp_time``. The grid runs from
        ``t_start`` to the end of a read phase lasting ``read_duration``.
        """
        if switch_off < t_start:
            raise MemoryModelError("switch_off must not precede the schedule start")
        if read_duration <= 0.0:
            raise MemoryModelError(f"read_duration must be positive, got {read_duration}")
        read = omega_write if omega_read is None else omega_read
        t_read = switch_off + ramp_time + hold_time
        grid = TimeGrid.uniform(t_start, t_read + read_duration, dt)
        t = grid.times

        omega = np.zeros(grid.n)
        omega[t < switch_off] = omega_write
        if ramp_time > 0.0:
            down = (t >= switch_off) & (t < switch_off + ramp_time)
            phase = (t[down] - switch_off) / ramp_time
            omega[down] = omega_write * 0.5 * (1.0 + np.cos(np.pi * phase))
            up = (t >= t_read) & (t < t_read + ramp_time)
            phase = (t[up] - t_read) / ramp_time
            omega[up] = read * 0.5 * (1.0 - np.cos(np.pi * phase))
        omega[t >= t_read + ramp_time] = read
        logger.debug(
            f"Storage schedule: off at {switch_off:g} μs, hold {hold_time:g} μs, "
            f"read from {t_read:g} μs ({direction})"
        )
        return cls(
            grid=grid,
            omega_c=omega,
            hold_time=hold_time,
            ramp_time=ramp_time,
            retrieval_direction=direction,
            switch_off=switch_off,
        )
