"""CSV codec for wavepackets: columns ``t_us,re_amp,im_amp``."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from src.photon.models import PhotonWavepacket, TimeGrid
from src.utils.output import atomic_write_text, csv_text

WAVEPACKET_HEADER = ("t_us", "re_amp", "im_amp")


def wavepacket_csv(packet: PhotonWavepacket) -> str:
    return csv_text(
        WAVEPACKET_HEADER,
        [packet.times, packet.amplitude.real, packet.amplitude.imag],
    )


def write_wavepacket_csv(packet: PhotonWavepacket, path: str | Path) -> Path:
    return atomic_write_text(Path(path), wavepacket_csv(packet))


def read_wavepacket_csv(path: str | Path) -> PhotonWavepacket:
    """Parse a wavepacket file written by :func:`write_wavepacket_csv`.

    The time column must be uniformly spaced; anything else raises
    ``ValueError``.
    """
    file_path = Path(path)
    lines = file_path.read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != WAVEPACKET_HEADER:
        raise ValueError(f"{file_path} is not a wavepacket file (bad header)")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    if data.shape[0] < 2 or data.shape[1] != 3:
        raise ValueError(f"{file_path} needs at least two rows of three columns")
    t = data[:, 0]
    steps = np.diff(t)
    dt = float(steps.mean())
    if not np.allclose(steps, dt, rtol=1e-6, atol=1e-12):
        raise ValueError(f"{file_path} is not uniformly sampled in time")
    grid = TimeGrid(t_start=float(t[0]), dt=dt, n=len(t))
    return PhotonWavepacket(grid, data[:, 1] + 1j * data[:, 2])
