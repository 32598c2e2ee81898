"""Run configuration: defaults, validation, unit conversions, YAML loading.

All dB / dBm quantities convert to linear units exactly once, at the
config boundary; everything downstream works in watts and linear ratios.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np
import yaml

from .geometry import MovementRegion
from .rates import CSR, PSR, ScenarioConfig
from .swarm import SwarmConfig

SCHEMES = ("proposed-sapso", "proposed-pso", "fpa", "random-psi")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RunConfig:
    """One experiment description; field defaults are the reference setup."""

    scenario: str = PSR
    scheme: str = "proposed-sapso"
    seeds: tuple = (0,)

    # system size
    n_antennas: int = 4  # K
    n_ris: int = 8  # M
    n_levels: int = 8  # phase-grid size per element
    n_paths: int = 9  # propagation paths per link
    n_users: int = 1  # primary users drawn from user_positions

    # geometry (metres)
    wavelength: float = 0.1
    region_side_wavelengths: float = 3.0
    region_center: tuple = (3.0, 0.0, 0.0)
    ris_position: tuple = (0.0, 30.0, 40.0)
    user_positions: tuple = ((0.0, 60.0, 0.0), (0.0, 80.0, 0.0))
    min_spacing_wavelengths: float = 0.5

    # link budget
    power_dbm: float = 38.0
    noise_power: float = 1e-12
    gain_db: float = -10.0  # per-link reference channel gain
    pathloss_exponent: float = 1.3

    # secondary decoding thresholds and symbol span
    gamma_pmin_db: float = 20.0
    gamma_cmin_db: float = 20.0
    symbol_span: int = 50  # L

    # bounded-error levels
    g_bs: float = 0.05
    g_u: float = 0.1

    # swarm constants
    n_particles: int = 150
    n_swarm_iters: int = 150
    inertia: float = 1.2
    c1: float = 1.4
    c2: float = 1.4
    swarm_penalty: float = 50.0
    t0: float = 1.0

    # solver loop controls
    ao_tol: float = 1e-2
    ao_max_iters: int = 25
    sca_tol: float = 1e-3
    sca_max_iters: int = 30
    selector_penalty: float = 25.0

    # sweep / output
    sweep_name: str = ""
    sweep_values: tuple = ()
    out_dir: str = "results"
    n_workers: int = 1
    verify_samples: int = 1000

    def __post_init__(self):
        if self.scenario not in (PSR, CSR):
            raise ValueError("scenario must be 'psr' or 'csr'")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        for name in (
            "n_antennas", "n_ris", "n_levels", "n_paths", "n_users",
            "wavelength", "region_side_wavelengths", "min_spacing_wavelengths",
            "noise_power", "symbol_span", "n_particles", "n_swarm_iters",
            "inertia", "c1", "c2", "swarm_penalty", "t0", "ao_tol",
            "ao_max_iters", "sca_tol", "sca_max_iters", "verify_samples",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.g_bs < 0 or self.g_u < 0:
            raise ValueError("uncertainty levels must be nonnegative")
        if self.n_users > len(self.user_positions):
            raise ValueError("n_users exceeds the listed user positions")
        if self.sweep_name:
            known = {f.name for f in fields(self)}
            if self.sweep_name not in known:
                raise ValueError(f"sweep axis {self.sweep_name!r} is not a config field")
            if self.sweep_name in ("sweep_name", "sweep_values", "seeds", "out_dir", "scheme", "scenario"):
                raise ValueError(f"cannot sweep over {self.sweep_name!r}")
            if not self.sweep_values:
                raise ValueError("sweep_values must be nonempty when sweep_name is set")

    # --- derived linear-unit quantities ---

    @property
    def power(self) -> float:
        """Transmit budget in watts."""
        return dbm_to_watts(self.power_dbm)

    @property
    def gamma_pmin(self) -> float:
        return db_to_linear(self.gamma_pmin_db)

    @property
    def gamma_cmin(self) -> float:
        return db_to_linear(self.gamma_cmin_db)

    @property
    def gain(self) -> float:
        return db_to_linear(self.gain_db)

    @property
    def min_spacing(self) -> float:
        return self.min_spacing_wavelengths * self.wavelength

    @property
    def region(self) -> MovementRegion:
        """Planar square movement region centred on region_center."""
        cx, cy, cz = self.region_center
        half = self.region_side_wavelengths * self.wavelength / 2.0
        return MovementRegion(cx - half, cx + half, cy - half, cy + half, cz, cz)

    def scenario_config(self) -> ScenarioConfig:
        return ScenarioConfig(
            scenario=self.scenario, noise_power=self.noise_power,
            gamma_pmin=self.gamma_pmin, gamma_cmin=self.gamma_cmin,
            symbol_span=self.symbol_span,
        )

    def swarm_config(self) -> SwarmConfig:
        return SwarmConfig(
            n_particles=self.n_particles, n_iterations=self.n_swarm_iters,
            inertia=self.inertia, c1=self.c1, c2=self.c2,
            penalty=self.swarm_penalty, t0=self.t0,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _flatten(node: dict, out: dict) -> dict:
    """Collapse nested config sections into flat field assignments."""
    for key, value in node.items():
        if isinstance(value, dict):
            _flatten(value, out)
        else:
            if key in out:
                raise ValueError(f"duplicate config key {key!r}")
            out[key] = value
    return out


def config_from_dict(data: dict) -> RunConfig:
    flat = _flatten(dict(data), {})
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(flat) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("seeds", "sweep_values", "region_center", "ris_position"):
        if key in flat and isinstance(flat[key], list):
            flat[key] = tuple(flat[key])
    if "user_positions" in flat:
        flat["user_positions"] = tuple(tuple(p) for p in flat["user_positions"])
    return RunConfig(**flat)


def load_config(path: str) -> RunConfig:
    """Read a YAML config file (flat keys or nested sections)."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError("config file must contain a mapping")
    return config_from_dict(data)
