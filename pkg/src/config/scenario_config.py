"""Scenario configuration: TOML parsing, validation and unit conversion.

Scenario files give rates in MHz, mirror terms in ppm, cavity geometry in μm,
cell geometry in cm and times in μs. :func:`parse_config` converts every rate
to rad/μs (multiplying by ``angular_factor``, 2π by default) and every ppm
value to a fraction; the returned :class:`ScenarioConfig` is in internal units
and nothing downstream converts again.
"""

from __future__ import annotations

import logging
import math
import sys
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from src.cavity.params import CavityError, CavityParams, kappa_from_mirrors
from src.memory.medium import LambdaMedium
from src.network.rus import RusConfig
from src.utils.output import atomic_write_text, json_text

logger = logging.getLogger(__name__)

PPM = 1e-6

SCENARIOS: dict[str, tuple[str, ...]] = {
    "emit": ("cavity", "drive"),
    "shape": ("cavity", "target"),
    "sweep-cavity": ("cavity", "sweep"),
    "mode-average": ("cavity", "target", "mode"),
    "store": ("medium", "input", "control"),
    "feasibility": ("medium", "input"),
    "hom": ("hom",),
    "beat": ("hom",),
    "rus": ("rus",),
}
TOP_LEVEL_KEYS = ("scenario", "angular_factor", "rng_seed")
SECTION_KEYS = (
    "cavity",
    "drive",
    "target",
    "mode",
    "sweep",
    "medium",
    "control",
    "input",
    "hom",
    "rus",
    "output",
)


class ConfigError(ValueError):
    """Raised for malformed, incomplete or non-physical scenario files."""


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CavitySection(_Section):
    g: float = Field(..., ge=0, description="Coupling g (MHz)")
    kappa: float | None = Field(
        default=None, ge=0, description="Field decay κ (MHz); derived from the mirrors if omitted"
    )
    gamma: float = Field(..., ge=0, description="Polarization decay γ (MHz)")
    t1: float = Field(default=0.0, ge=0, description="Input mirror transmittance (ppm)")
    t2: float = Field(default=0.0, ge=0, description="Output mirror transmittance (ppm)")
    h: float = Field(default=0.0, ge=0, description="Scatter loss per mirror (ppm)")
    cavity_length: float = Field(default=0.0, ge=0, description="Mirror separation (μm)")
    mode_waist: float = Field(default=0.0, ge=0, description="Mode waist (μm)")


class GridSection(_Section):
    t_start: float = Field(default=0.0, description="First sample (μs)")
    t_stop: float = Field(..., description="Last sample (μs)")
    dt: float = Field(default=0.001, gt=0, description="Sample spacing (μs)")


class DriveSection(GridSection):
    omega_max: float = Field(..., ge=0, description="Final Rabi frequency (MHz)")
    t_on: float = Field(default=0.0, description="Start of the linear ramp (μs)")
    t_ramp: float = Field(..., gt=0, description="Ramp duration (μs)")
    detuning: float = Field(default=0.0, description="One-photon detuning Δ (MHz)")


class PhotonSection(_Section):
    shape: Literal["sin2", "gaussian"] = "sin2"
    probability: float = Field(default=1.0, ge=0, le=1, description="Photon norm")
    duration: float | None = Field(default=None, gt=0, description="sin² support (μs)")
    start: float = Field(default=0.0, description="Start of the sin² support (μs)")
    center: float | None = Field(default=None, description="Gaussian centre (μs)")
    sigma: float | None = Field(default=None, gt=0, description="Gaussian width (μs)")
    detuning: float = Field(default=0.0, description="Carrier offset (MHz)")


class TargetSection(PhotonSection):
    t_start: float = Field(default=0.0, description="First sample (μs)")
    t_stop: float = Field(..., description="Last sample (μs)")
    dt: float = Field(default=0.001, gt=0, description="Sample spacing (μs)")


class ModeSection(_Section):
    rule: Literal["gaussian_area", "delta"] = "gaussian_area"
    n_bins: int = Field(default=20, ge=1)
    radius_cutoff: float = Field(default=1.0, gt=0, description="Loaded radius / waist")
    shape_fraction: float = Field(
        default=1.0, gt=0, le=1, description="Coupling, relative to g_max, the drive is shaped for"
    )


class SweepSection(_Section):
    t2: list[float] = Field(
        ..., min_length=1, description="Output transmittances (ppm, stored as fractions)"
    )


class MediumSection(_Section):
    length: float = Field(..., gt=0, description="Cell length (cm)")
    alpha: float = Field(..., ge=0, description="Absorption coefficient (1/cm)")
    gamma_p_natural: float = Field(..., ge=0, description="Optical decay (MHz)")
    collision_rate: float = Field(default=0.0, ge=0, description="Pressure broadening (MHz)")
    gamma_s: float = Field(default=0.0, ge=0, description="Spin-wave decay (MHz)")
    diffusion_const: float = Field(default=0.0, ge=0, description="D (cm²/μs)")
    wavevector_mismatch: float = Field(default=0.0, description="Δk (1/cm)")
    detuning: float = Field(default=0.0, description="One-photon detuning (MHz)")


class ControlSection(_Section):
    mode: Literal["storage", "constant"] = "storage"
    omega: float | None = Field(
        default=None, ge=0, description="Write Rabi frequency (MHz); fitted to the cell if omitted"
    )
    omega_read: float | None = Field(default=None, ge=0, description="Read Rabi frequency (MHz)")
    fill: float = Field(default=0.8, gt=0, le=1, description="Cell fraction the slowed pulse fills")
    switch_off: float | None = Field(default=None, description="Start of the ramp down (μs)")
    hold_time: float = Field(default=0.0, ge=0, description="Storage time (μs)")
    read_duration: float = Field(default=3.0, gt=0, description="Read window (μs)")
    ramp_time: float = Field(default=0.1, ge=0, description="Switch duration (μs)")
    direction: Literal["co", "counter"] = "counter"
    t_start: float = Field(default=0.0, description="First sample (μs)")
    t_stop: float | None = Field(default=None, description="Last sample, constant mode (μs)")
    dt: float = Field(default=0.002, gt=0, description="Sample spacing (μs)")
    n_z: int = Field(default=400, ge=2, description="Spatial slices")


class HomSection(GridSection):
    rescale: bool = False
    a: PhotonSection
    b: PhotonSection


class RusSection(_Section):
    n_runs: int = Field(default=1, ge=1)
    n_cavities: int = 2
    atom_arrival_rate: float = 1.0
    interaction_time: float = 1.0
    photon_slot: float | None = None
    eta_store: float = 0.8
    eta_detect: float = 0.5
    p_bsm: float = 0.5
    gamma_s_memory: float = Field(default=0.0, description="Memory decay (MHz)")
    reset_time: float = 10.0
    target_chain_length: int = 3
    ideal_loading: bool = False
    max_attempts: int = 1_000_000
    record_events: bool = False


class OutputSection(_Section):
    dir: str = "out"


class ScenarioConfig(BaseModel):
    """Validated scenario in internal units (rad/μs, μs, cm, μm, fractions)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: str
    angular_factor: float = 2.0 * math.pi
    rng_seed: int = 0
    output_dir: str = "out"
    cavity: CavityParams | None = None
    drive: DriveSection | None = None
    target: TargetSection | None = None
    mode: ModeSection | None = None
    sweep: SweepSection | None = None
    medium: LambdaMedium | None = None
    control: ControlSection | None = None
    input: PhotonSection | None = None
    hom: HomSection | None = None
    rus: RusConfig | None = None
    n_runs: int = 1


_SECTION_MODELS: dict[str, type[_Section]] = {
    "cavity": CavitySection,
    "drive": DriveSection,
    "target": TargetSection,
    "mode": ModeSection,
    "sweep": SweepSection,
    "medium": MediumSection,
    "control": ControlSection,
    "input": PhotonSection,
    "hom": HomSection,
    "rus": RusSection,
    "output": OutputSection,
}


def _describe(section: str, error: ValidationError) -> str:
    first = error.errors()[0]
    key = ".".join([section, *(str(part) for part in first["loc"])])
    if first["type"] == "missing":
        return f"missing required key '{key}'"
    if first["type"] == "extra_forbidden":
        return f"unknown key '{key}'"
    return f"invalid value for '{key}': {first['msg']}"


def _section(raw: Mapping[str, Any], name: str) -> Any:
    data = raw[name]
    if not isinstance(data, Mapping):
        raise ConfigError(f"'{name}' must be a table")
    try:
        return _SECTION_MODELS[name].model_validate(dict(data))
    except ValidationError as exc:
        raise ConfigError(_describe(name, exc)) from exc


def _scaled_photon(photon: PhotonSection, scale: float) -> PhotonSection:
    if photon.shape == "sin2" and photon.duration is None:
        raise ConfigError("missing required key 'duration' for a sin2 photon")
    if photon.shape == "gaussian" and (photon.center is None or photon.sigma is None):
        raise ConfigError("missing required key 'center'/'sigma' for a gaussian photon")
    return photon.model_copy(update={"detuning": photon.detuning * scale})


def _cavity(section: CavitySection, scale: float, scenario: str) -> CavityParams:
    params = CavityParams(
        g=section.g * scale,
        kappa=(section.kappa or 0.0) * scale,
        gamma=section.gamma * scale,
        t1=section.t1 * PPM,
        t2=section.t2 * PPM,
        h=section.h * PPM,
        cavity_length=section.cavity_length,
        mode_waist=section.mode_waist,
    )
    if scenario == "sweep-cavity" and section.cavity_length <= 0.0:
        raise ConfigError("missing required key 'cavity.cavity_length'")
    if section.kappa is None and scenario != "sweep-cavity":
        try:
            kappa = kappa_from_mirrors(params)
        except CavityError as exc:
            raise ConfigError("missing required key 'cavity.kappa'") from exc
        logger.info(f"Derived κ = {kappa:.6g} rad/μs from the mirrors")
        params = params.model_copy(update={"kappa": kappa})
    return params


def _medium(section: MediumSection, scale: float) -> LambdaMedium:
    try:
        return LambdaMedium(
            length=section.length,
            alpha=section.alpha,
            gamma_p_natural=section.gamma_p_natural * scale,
            collision_rate=section.collision_rate * scale,
            gamma_s=section.gamma_s * scale,
            diffusion_const=section.diffusion_const,
            wavevector_mismatch=section.wavevector_mismatch,
            detuning=section.detuning * scale,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid medium: {exc.errors()[0]['msg']}") from exc


def _rus(section: RusSection, scale: float, seed: int) -> RusConfig:
    values = section.model_dump(exclude={"n_runs", "photon_slot"})
    values["gamma_s_memory"] = section.gamma_s_memory * scale
    values["rng_seed"] = seed
    if section.photon_slot is not None:
        values["photon_slot"] = section.photon_slot
    try:
        return RusConfig(**values)
    except ValidationError as exc:
        raise ConfigError(_describe("rus", exc)) from exc


def parse_config(
    text: str | Mapping[str, Any], scenario: str | None = None
) -> ScenarioConfig:
    """Validate a scenario document and convert it to internal units.

    Args:
        text: TOML source, or an already parsed mapping.
        scenario: Scenario requested by the caller. It fills a missing
            `scenario` key and must match a present one.

    Returns:
        The validated :class:`ScenarioConfig`.

    Raises:
        ConfigError: On malformed TOML, a missing or unknown key (named with
            its dotted path), or a non-physical value.
    """
    if isinstance(text, str):
        try:
            raw: Mapping[str, Any] = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"Malformed scenario file: {exc}") from exc
    else:
        raw = text

    for key in raw:
        if key not in TOP_LEVEL_KEYS and key not in SECTION_KEYS:
            raise ConfigError(f"unknown key '{key}'")
    if scenario is not None:
        declared = raw.get("scenario", scenario)
        if declared != scenario:
            raise ConfigError(
                f"scenario file describes '{declared}' but '{scenario}' was requested"
            )
    scenario = raw.get("scenario", scenario)
    if scenario is None:
        raise ConfigError("missing required key 'scenario'")
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario '{scenario}'; expected one of {', '.join(SCENARIOS)}"
        )
    for name in SCENARIOS[scenario]:
        if name not in raw:
            raise ConfigError(f"missing required key '{name}'")

    scale = raw.get("angular_factor", 2.0 * math.pi)
    if not isinstance(scale, int | float) or isinstance(scale, bool) or scale <= 0:
        raise ConfigError(f"angular_factor must be a positive number, got {scale!r}")
    seed = raw.get("rng_seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"rng_seed must be a non-negative integer, got {seed!r}")
    scale = float(scale)

    sections = {name: _section(raw, name) for name in SECTION_KEYS if name in raw}
    fields: dict[str, Any] = {
        "scenario": scenario,
        "angular_factor": scale,
        "rng_seed": seed,
        "output_dir": sections["output"].dir if "output" in sections else "out",
    }
    if "cavity" in sections:
        fields["cavity"] = _cavity(sections["cavity"], scale, scenario)
    if "drive" in sections:
        drive = sections["drive"]
        fields["drive"] = drive.model_copy(
            update={
                "omega_max": drive.omega_max * scale,
                "detuning": drive.detuning * scale,
            }
        )
    if "target" in sections:
        fields["target"] = _scaled_photon(sections["target"], scale)
    if "mode" in sections:
        fields["mode"] = sections["mode"]
    if "sweep" in sections:
        sweep = sections["sweep"]
        fields["sweep"] = sweep.model_copy(update={"t2": [t2 * PPM for t2 in sweep.t2]})
    if "medium" in sections:
        fields["medium"] = _medium(sections["medium"], scale)
    if "control" in sections:
        control = sections["control"]
        if control.mode == "storage" and control.switch_off is None:
            raise ConfigError("missing required key 'control.switch_off'")
        if control.mode == "constant" and control.t_stop is None:
            raise ConfigError("missing required key 'control.t_stop'")
        fields["control"] = control.model_copy(
            update={
                "omega": None if control.omega is None else control.omega * scale,
                "omega_read": None
                if control.omega_read is None
                else control.omega_read * scale,
            }
        )
    if "input" in sections:
        fields["input"] = _scaled_photon(sections["input"], scale)
    if "hom" in sections:
        hom = sections["hom"]
        fields["hom"] = hom.model_copy(
            update={"a": _scaled_photon(hom.a, scale), "b": _scaled_photon(hom.b, scale)}
        )
    if "rus" in sections:
        fields["rus"] = _rus(sections["rus"], scale, seed)
        fields["n_runs"] = sections["rus"].n_runs

    config = ScenarioConfig(**fields)
    logger.debug(f"Parsed '{scenario}' scenario (angular_factor={scale:.6g})")
    return config


def load_config(config_path: str | Path, scenario: str | None = None) -> ScenarioConfig:
    """Read a TOML scenario file and validate it.

    Raises:
        ConfigError: If the file cannot be read or fails validation.
    """
    path = Path(config_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Unable to read scenario file {path}: {exc.strerror or exc}") from exc
    config = parse_config(text, scenario)
    logger.info(f"Loaded '{config.scenario}' scenario from {path}")
    return config


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    """Copy of ``config`` with a different base seed."""
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    update: dict[str, Any] = {"rng_seed": seed}
    if config.rus is not None:
        update["rus"] = config.rus.model_copy(update={"rng_seed": seed})
    return config.model_copy(update=update)


def save_config(config: ScenarioConfig, config_path: Path) -> None:
    """Write the validated config, in internal units, as JSON."""
    atomic_write_text(config_path, json_text(config.model_dump(mode="json")))
    logger.info(f"Saved scenario configuration to {config_path}")
