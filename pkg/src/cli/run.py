"""Scenario runner: dispatches a validated config to the simulators and writes outputs."""

from __future__ import annotations

import logging
import math
import time
from argparse import ArgumentParser, Namespace
from collections.abc import Callable, Sequence
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console
from rich.logging import RichHandler

from src.cavity.mode_average import (
    ModeDistribution,
    average_over_mode,
    emission_table,
    shape_error,
)
from src.cavity.params import (
    cooperativity,
    emission_probability,
    raman_efficiency,
    sweep_asymmetry,
)
from src.cavity.vstirap import DrivePulse, shape_drive_pulse, simulate_vstirap
from src.config.scenario_config import (
    PPM,
    SCENARIOS,
    ConfigError,
    PhotonSection,
    ScenarioConfig,
    load_config,
    with_seed,
)
from src.interference.hom import (
    beat_minima,
    density_csv,
    hom_coincidence,
    marginal_csv,
    mode_overlap,
    storage_interference_test,
)
from src.memory.medium import (
    check_feasibility,
    control_for_fit,
    group_velocity,
)
from src.memory.propagation import (
    field_map_csv,
    propagate,
    spin_wave_csv,
    summary_payload,
)
from src.memory.schedule import ControlSchedule
from src.network.rus import (
    RusError,
    batch_jsonl,
    batch_summary,
    expected_build_time,
    expected_coherence_weight,
    expected_memory_age,
    simulate_batch,
)
from src.photon.convergence import ConvergenceError
from src.photon.io import wavepacket_csv
from src.photon.models import (
    PhotonWavepacket,
    TimeGrid,
    gaussian_wavepacket,
    sin2_wavepacket,
)
from src.utils.output import RunOutputs, atomic_write_text, json_text
from src.utils.path_safety import ensure_output_dir
from src.utils.system_info import host_summary, recommend_threads

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
# Gaussian intensity FWHM in units of σ.
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

DOMAIN_ERRORS: tuple[type[Exception], ...] = (ValueError, RusError, ConvergenceError)


def artifact_version() -> str:
    try:
        return version("hybrid-qnode")
    except PackageNotFoundError:
        return "0.1.0"


class RunManifest(BaseModel):
    """Record of one scenario run, written as ``manifest.json``."""

    scenario: str
    version: str
    status: Literal["ok", "failed"]
    config: dict[str, Any] = Field(..., description="Validated config in internal units")
    duration_s: float = Field(..., ge=0, description="Wall-clock duration")
    outputs: list[str] = Field(default_factory=list)
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    error: str | None = None
    host: dict[str, Any] = Field(default_factory=dict)


def build_photon(section: PhotonSection, grid: TimeGrid) -> PhotonWavepacket:
    """Sample the photon described by a config section on ``grid``."""
    if section.shape == "gaussian":
        assert section.center is not None and section.sigma is not None
        return gaussian_wavepacket(
            grid, section.center, section.sigma, section.probability, section.detuning
        )
    assert section.duration is not None
    packet = sin2_wavepacket(grid, section.duration, section.probability, section.start)
    if section.detuning != 0.0:
        carrier = np.exp(-1j * section.detuning * (grid.times - section.start))
        packet = PhotonWavepacket(grid, packet.amplitude * carrier)
    return packet


def photon_duration(section: PhotonSection) -> float:
    """Pulse duration τ: the sin² support, or the intensity FWHM of a Gaussian."""
    if section.shape == "gaussian":
        assert section.sigma is not None
        return FWHM_PER_SIGMA * section.sigma
    assert section.duration is not None
    return section.duration


def _grid(section: Any) -> TimeGrid:
    if section.t_stop <= section.t_start:
        raise ConfigError("t_stop must be later than t_start")
    return TimeGrid.uniform(section.t_start, section.t_stop, section.dt)


def _photon_summary(packet: PhotonWavepacket) -> dict[str, float]:
    return {
        "norm": packet.norm,
        "peak_time_us": packet.peak_time,
        "duration_us": packet.duration,
    }


def _run_emit(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.cavity is not None and cfg.drive is not None
    drive = cfg.drive
    pulse = DrivePulse.linear_ramp(_grid(drive), drive.omega_max, drive.t_on, drive.t_ramp)
    record = simulate_vstirap(cfg.cavity, pulse, drive.detuning)
    summary: dict[str, Any] = {
        "p_emit": record.p_emit,
        "p_spont": record.p_spont,
        "p_residual": record.p_residual,
        "raman_bound": raman_efficiency(cfg.cavity),
        **_photon_summary(record.photon),
    }
    if cfg.cavity.mirror_loss > 0.0:
        summary["p_emit_analytic"] = emission_probability(cfg.cavity)
    if cfg.cavity.kappa > 0.0 and cfg.cavity.gamma > 0.0:
        summary["cooperativity"] = cooperativity(cfg.cavity)
    out.write_text("photon.csv", wavepacket_csv(record.photon))
    out.write_json("emission.json", summary)
    return record.diagnostics


def _run_shape(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.cavity is not None and cfg.target is not None
    target = build_photon(cfg.target, _grid(cfg.target))
    pulse = shape_drive_pulse(cfg.cavity, target)
    record = simulate_vstirap(cfg.cavity, pulse)
    fidelity = mode_overlap(record.photon, target).fidelity
    out.write_csv("drive.csv", ("t_us", "omega"), [pulse.times, pulse.omega])
    out.write_text("photon.csv", wavepacket_csv(record.photon))
    out.write_json(
        "roundtrip.json",
        {
            "fidelity": fidelity,
            "p_emit": record.p_emit,
            "target_norm": target.norm,
            "peak_omega": pulse.peak,
        },
    )
    return record.diagnostics


def _run_sweep(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.cavity is not None and cfg.sweep is not None
    rows = sweep_asymmetry(cfg.cavity, cfg.sweep.t2)
    out.write_csv(
        "sweep.csv",
        ("t2_ppm", "p_emit", "cooperativity", "kappa"),
        [
            np.array([row.t2 / PPM for row in rows]),
            np.array([row.p_emit for row in rows]),
            np.array([row.cooperativity for row in rows]),
            np.array([row.kappa for row in rows]),
        ],
    )
    return {"points": len(rows)}


def _run_mode_average(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.cavity is not None and cfg.target is not None and cfg.mode is not None
    mode = cfg.mode
    target = build_photon(cfg.target, _grid(cfg.target))
    shaping = cfg.cavity.model_copy(update={"g": cfg.cavity.g * mode.shape_fraction})
    pulse = shape_drive_pulse(shaping, target)
    if mode.rule == "delta":
        dist = ModeDistribution.delta(cfg.cavity.g)
    else:
        dist = ModeDistribution.gaussian_area(cfg.cavity.g, mode.n_bins, mode.radius_cutoff)
    result = average_over_mode(cfg.cavity, pulse, dist, threads=threads)
    out.write_text("mode_average.csv", wavepacket_csv(result.photon))
    out.write_csv("mode_bins.csv", ("g", "weight", "p_emit"), emission_table(result))
    out.write_json(
        "summary.json",
        {
            "p_emit": result.p_emit,
            "peak_time_us": result.photon.peak_time,
            "target_peak_time_us": target.peak_time,
            "shape_error": shape_error(result.photon, target),
        },
    )
    return {"bins": len(result.bins), "rule": dist.rule}


def _write_omega(cfg: ScenarioConfig) -> float:
    assert cfg.medium is not None and cfg.input is not None
    control = cfg.control
    if control is not None and control.omega is not None:
        return control.omega
    fill = control.fill if control is not None else 0.8
    return control_for_fit(cfg.medium, photon_duration(cfg.input), fill)


def _run_store(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.medium is not None and cfg.input is not None and cfg.control is not None
    control = cfg.control
    omega = _write_omega(cfg)
    if control.mode == "constant":
        assert control.t_stop is not None
        grid = TimeGrid.uniform(control.t_start, control.t_stop, control.dt)
        schedule = ControlSchedule.constant(grid, omega)
    else:
        assert control.switch_off is not None
        schedule = ControlSchedule.storage(
            dt=control.dt,
            omega_write=omega,
            switch_off=control.switch_off,
            hold_time=control.hold_time,
            read_duration=control.read_duration,
            t_start=control.t_start,
            ramp_time=control.ramp_time,
            omega_read=control.omega_read,
            direction=control.direction,
        )
    probe = build_photon(cfg.input, schedule.grid)
    result = propagate(cfg.medium, probe, schedule, n_z=control.n_z)

    summary = summary_payload(result, cfg.medium)
    summary["omega_c"] = omega
    if omega > 0.0:
        summary["group_velocity"] = group_velocity(cfg.medium, omega)
    if result.retrieved.norm > 0.0:
        summary["storage_fidelity"] = storage_interference_test(
            probe, result.retrieved
        ).fidelity
    out.write_text("transmitted.csv", wavepacket_csv(result.transmitted))
    out.write_text("retrieved.csv", wavepacket_csv(result.retrieved))
    out.write_text("field_map.csv", field_map_csv(result.field_map))
    if result.spin_wave_snapshot is not None:
        out.write_text("spin_wave.csv", spin_wave_csv(result.spin_wave_snapshot))
    out.write_json("summary.json", summary)
    return result.diagnostics


def _run_feasibility(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.medium is not None and cfg.input is not None
    omega = _write_omega(cfg)
    tau = photon_duration(cfg.input)
    report = check_feasibility(cfg.medium, omega, tau)
    out.write_json("feasibility.json", {**report.model_dump(), "omega_c": omega, "tau_us": tau})
    return {}


def _hom_record(cfg: ScenarioConfig) -> Any:
    assert cfg.hom is not None
    grid = _grid(cfg.hom)
    a = build_photon(cfg.hom.a, grid)
    b = build_photon(cfg.hom.b, grid)
    return hom_coincidence(a, b, rescale=cfg.hom.rescale)


def _run_hom(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    record = _hom_record(cfg)
    out.write_text("density.csv", density_csv(record))
    out.write_json(
        "summary.json", {"fidelity": record.fidelity, "coincidence": record.integrated}
    )
    return {}


def _run_beat(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    record = _hom_record(cfg)
    minima = beat_minima(record)
    spacing = float(np.mean(np.diff(minima))) if len(minima) > 1 else None
    out.write_text("density.csv", density_csv(record))
    out.write_text("marginal.csv", marginal_csv(record))
    out.write_json(
        "summary.json",
        {
            "fidelity": record.fidelity,
            "coincidence": record.integrated,
            "beat_minima_us": minima.tolist(),
            "beat_period_us": spacing,
        },
    )
    return {}


def _run_rus(cfg: ScenarioConfig, out: RunOutputs, threads: int) -> dict[str, Any]:
    assert cfg.rus is not None
    results = simulate_batch(cfg.rus, cfg.n_runs, threads)
    out.write_text("runs.jsonl", batch_jsonl(results))
    out.write_text("summary.csv", batch_summary(cfg.rus, results))
    diagnostics: dict[str, Any] = {"runs": len(results)}
    if cfg.rus.ideal_loading:
        mean_time, mean_attempts = expected_build_time(cfg.rus)
        diagnostics["expected_time_ms"] = mean_time
        diagnostics["expected_attempts"] = mean_attempts
        diagnostics["expected_weight"] = expected_coherence_weight(cfg.rus)
        diagnostics["expected_memory_age_ms"] = expected_memory_age(cfg.rus)
    return diagnostics


Handler = Callable[[ScenarioConfig, RunOutputs, int], dict[str, Any]]

HANDLERS: dict[str, Handler] = {
    "emit": _run_emit,
    "shape": _run_shape,
    "sweep-cavity": _run_sweep,
    "mode-average": _run_mode_average,
    "store": _run_store,
    "feasibility": _run_feasibility,
    "hom": _run_hom,
    "beat": _run_beat,
    "rus": _run_rus,
}


def run_scenario(
    cfg: ScenarioConfig, out_dir: str | Path | None = None, threads: int = 1
) -> RunManifest:
    """Run one scenario and write its data files plus ``manifest.json``.

    Data files appear only if the run succeeds. A failed run leaves just a
    manifest with ``status = "failed"`` and re-raises the error.
    """
    directory = ensure_output_dir(out_dir if out_dir is not None else cfg.output_dir)
    outputs = RunOutputs(directory)
    started = time.perf_counter()
    echo = cfg.model_dump(mode="json")
    logger.info(f"Running '{cfg.scenario}' into {directory}")
    try:
        diagnostics = HANDLERS[cfg.scenario](cfg, outputs, threads)
    except DOMAIN_ERRORS as exc:
        outputs.discard()
        manifest = RunManifest(
            scenario=cfg.scenario,
            version=artifact_version(),
            status="failed",
            config=echo,
            duration_s=time.perf_counter() - started,
            diagnostics=getattr(exc, "diagnostics", {}),
            error=f"{type(exc).__name__}: {exc}",
            host=host_summary(),
        )
        atomic_write_text(directory / MANIFEST_NAME, json_text(manifest.model_dump()))
        raise
    written = outputs.commit()
    manifest = RunManifest(
        scenario=cfg.scenario,
        version=artifact_version(),
        status="ok",
        config=echo,
        duration_s=time.perf_counter() - started,
        outputs=[path.name for path in written],
        diagnostics=diagnostics,
        host=host_summary(),
    )
    atomic_write_text(directory / MANIFEST_NAME, json_text(manifest.model_dump()))
    return manifest


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def build_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--config", type=Path, required=True, help="Path to the TOML scenario file"
    )
    common.add_argument(
        "--out", type=Path, help="Output directory (overrides [output] dir)"
    )
    common.add_argument("--seed", type=int, help="Base random seed (overrides rng_seed)")
    common.add_argument(
        "--threads",
        type=int,
        help="Worker threads for independent runs (default: CPU count, at most 8)",
    )
    common.add_argument(
        "--verbose", action="store_true", help="Log solver details at DEBUG level"
    )

    parser = ArgumentParser(
        prog="qnode",
        description="Simulate a hybrid cavity-photon / vapour-memory quantum network node",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        commands.add_parser(name, parents=[common], help=f"Run a '{name}' scenario")
    return parser


def main(argv: Sequence[str] | None = None, console: Console | None = None) -> int:
    args: Namespace = build_parser().parse_args(argv)
    console = console or Console(stderr=True)
    configure_logging(args.verbose)
    try:
        cfg = load_config(args.config, scenario=args.command)
        if args.seed is not None:
            cfg = with_seed(cfg, args.seed)
        threads = recommend_threads(args.threads)
        manifest = run_scenario(cfg, args.out, threads)
    except DOMAIN_ERRORS as exc:
        console.print(f"❌ {exc}", style="bold red")
        return 1
    console.print(
        f"✅ {manifest.scenario} finished: {len(manifest.outputs)} files "
        f"in {manifest.duration_s:.2f}s",
        style="bold green",
    )
    return 0
