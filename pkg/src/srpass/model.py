"""Configuration, spatial grid, and condensate profile.

Everything downstream (integrator, ensembles, oracles) consumes the three
types defined here. All dynamics are parameterized by the dimensionless
gain alone; separate light-speed or coupling constants never enter the
equations of motion, they only appear in the unit-conversion report.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as _const

# physical defaults: 130 um condensate driven at k = 8.05e6 1/m
DEFAULT_WAVENUMBER = 8.05e6
DEFAULT_LENGTH_M = 130e-6
DEFAULT_LAMBDA = DEFAULT_WAVENUMBER * DEFAULT_LENGTH_M  # ~1046.5
RB87_MASS_KG = 86.909180527 * _const.u

_SEED_MAX = 2**64


class ConfigError(ValueError):
    """Invalid model configuration or config file."""


@dataclass(frozen=True)
class ModelConfig:
    """Physical and numerical parameters for one simulation setup.

    Parameters
    ----------
    gamma : float
        Dimensionless superradiant gain. Controls the exponential growth
        rate of the end-fire field.
    n_atoms : float
        Condensate atom number.
    lambda_len : float
        Dimensionless condensate length (laser wavenumber times physical
        length).
    grid_points : int
        Number of spatial grid cells.
    dtau : float or None
        Time step in dimensionless time. None selects 1e-3 for gamma <= 1
        and 1e-3 / gamma above, keeping gamma * dtau constant.
    tau_max : float or None
        Integration horizon. None selects 20 / gamma, several times the
        typical passage time at moderate thresholds.
    backward_enabled : bool
        Couple the backward-recoiling side-mode. Off reproduces
        conventional superradiance.
    rng_seed : int
        Master seed; trajectory streams are derived from (seed, index).
    """

    gamma: float = 1.0
    n_atoms: float = 1e6
    lambda_len: float = DEFAULT_LAMBDA
    grid_points: int = 400
    dtau: float | None = None
    tau_max: float | None = None
    backward_enabled: bool = True
    rng_seed: int = 12345

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ConfigError(f"gamma must be positive and finite, got {self.gamma}")
        if not (self.n_atoms > 0 and math.isfinite(self.n_atoms)):
            raise ConfigError(f"n_atoms must be positive, got {self.n_atoms}")
        if not (self.lambda_len > 0 and math.isfinite(self.lambda_len)):
            raise ConfigError(f"lambda_len must be positive, got {self.lambda_len}")
        if not (isinstance(self.grid_points, int) and self.grid_points >= 2):
            raise ConfigError(f"grid_points must be an integer >= 2, got {self.grid_points}")
        if self.dtau is None:
            object.__setattr__(self, "dtau", 1e-3 if self.gamma <= 1.0 else 1e-3 / self.gamma)
        if not (self.dtau > 0 and math.isfinite(self.dtau)):
            raise ConfigError(f"dtau must be positive, got {self.dtau}")
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", 20.0 / self.gamma)
        if not (self.tau_max > 0 and math.isfinite(self.tau_max)):
            raise ConfigError(f"tau_max must be positive, got {self.tau_max}")
        if not isinstance(self.backward_enabled, bool):
            raise ConfigError("backward_enabled must be a bool")
        if not (isinstance(self.rng_seed, int) and 0 <= self.rng_seed < _SEED_MAX):
            raise ConfigError(f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")

    @property
    def dxi(self) -> float:
        return self.lambda_len / self.grid_points

    def replace(self, **changes) -> "ModelConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered spatial grid on [0, lambda_len]."""

    xi: np.ndarray
    dxi: float

    @classmethod
    def from_config(cls, cfg: ModelConfig) -> "Grid":
        dxi = cfg.dxi
        xi = (np.arange(cfg.grid_points) + 0.5) * dxi
        xi.setflags(write=False)
        return cls(xi=xi, dxi=dxi)

    def __len__(self) -> int:
        return self.xi.size


@dataclass(frozen=True)
class CondensateProfile:
    """Condensate density and its cumulative integral on a grid.

    density[i] is the atom density per unit dimensionless length at the
    cell center xi[i]; cumulative[i] is the exact running integral of the
    density from 0 to xi[i]. density_at / cumulative_at evaluate the same
    quantities at arbitrary positions.
    """

    grid: Grid
    density: np.ndarray
    cumulative: np.ndarray
    density_at: object  # callable xi -> density
    cumulative_at: object  # callable xi -> cumulative density

    @classmethod
    def thomas_fermi(cls, cfg: ModelConfig) -> "CondensateProfile":
        grid = Grid.from_config(cfg)
        dens = thomas_fermi_density(grid.xi, cfg)
        cum = _tf_cumulative(grid.xi, cfg)
        dens.setflags(write=False)
        cum.setflags(write=False)
        return cls(
            grid=grid,
            density=dens,
            cumulative=cum,
            density_at=lambda xi: thomas_fermi_density(xi, cfg),
            cumulative_at=lambda xi: _tf_cumulative(xi, cfg),
        )


def thomas_fermi_density(xi, cfg: ModelConfig):
    """Inverted-parabola condensate density, zero outside [0, lambda_len].

    Peak value is 1.5 N / lambda_len at the center; the integral over the
    full support is exactly N.
    """
    xi = np.asarray(xi, dtype=float)
    lam = cfg.lambda_len
    dens = 6.0 * cfg.n_atoms * (lam * xi - xi**2) / lam**3
    dens = np.where((xi >= 0.0) & (xi <= lam), dens, 0.0)
    return dens if dens.ndim else float(dens)


def _tf_cumulative(xi, cfg: ModelConfig):
    # exact antiderivative of the inverted parabola, clamped to [0, N]
    xi = np.asarray(xi, dtype=float)
    lam = cfg.lambda_len
    x = np.clip(xi, 0.0, lam)
    cum = cfg.n_atoms * (3.0 * x**2 / lam**2 - 2.0 * x**3 / lam**3)
    return cum if cum.ndim else float(cum)


def cumulative_density(profile: CondensateProfile, xi: float) -> float:
    """Running integral of the condensate density from 0 to xi.

    Raises ConfigError if xi lies outside the condensate support.
    """
    lam = profile.grid.dxi * len(profile.grid)
    if not (0.0 <= xi <= lam * (1.0 + 1e-12)):
        raise ConfigError(f"xi={xi} outside [0, {lam}]")
    return float(profile.cumulative_at(xi))


def derived_physical_constants(
    k_laser: float = DEFAULT_WAVENUMBER,
    mass: float = RB87_MASS_KG,
    length: float = DEFAULT_LENGTH_M,
) -> dict:
    """Unit-conversion report from physical inputs.

    Returns the recoil frequency omega_r = hbar k^2 / 2M, the dimensionless
    light speed chi = c k / 2 omega_r, and the dimensionless condensate
    length. chi ~ 5e10 is what justifies slaving the optical field to the
    matter fields; the dynamics never consume it directly.
    """
    if not (k_laser > 0 and mass > 0 and length > 0):
        raise ConfigError("k_laser, mass, length must all be positive")
    omega_r = _const.hbar * k_laser**2 / (2.0 * mass)
    chi = _const.c * k_laser / (2.0 * omega_r)
    return {
        "omega_r": omega_r,
        "chi": chi,
        "lambda_len": k_laser * length,
    }


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(ModelConfig)}


def config_from_dict(data: dict) -> ModelConfig:
    """Build a ModelConfig from a mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    coerced = dict(data)
    # JSON has no integer/float distinction for whole numbers
    if "grid_points" in coerced and isinstance(coerced["grid_points"], float):
        if coerced["grid_points"] != int(coerced["grid_points"]):
            raise ConfigError("grid_points must be an integer")
        coerced["grid_points"] = int(coerced["grid_points"])
    if "rng_seed" in coerced and isinstance(coerced["rng_seed"], float):
        if coerced["rng_seed"] != int(coerced["rng_seed"]):
            raise ConfigError("rng_seed must be an integer")
        coerced["rng_seed"] = int(coerced["rng_seed"])
    try:
        return ModelConfig(**coerced)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ModelConfig:
    """Read a JSON config file. All keys optional, defaults as in ModelConfig."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(data)
