"""Single-trajectory integration of the seeded mean-field equations.

A trajectory starts from Gaussian noise in the forward side-mode (the
semiclassical stand-in for vacuum fluctuations), evolves under the
slaved-field RK4 engine, and records the photon counter
N(tau) = integral of (n_atoms/gamma) |E(end facet)|^2. First-passage
times for each threshold come from linear interpolation of that counter
between the bracketing steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from . import _engine
from .model import CondensateProfile, ConfigError, Grid, ModelConfig


class TrajectoryAbort(RuntimeError):
    """A field amplitude became non-finite during integration."""


@dataclass(frozen=True)
class FieldState:
    """Matter and optical field amplitudes on the grid at one time.

    e_field is always the slaved field of (psi_plus, psi_minus): it is
    recomputed, never evolved independently. psi_minus stays identically
    zero when the backward mode is disabled.
    """

    psi_plus: np.ndarray
    psi_minus: np.ndarray
    e_field: np.ndarray
    tau: float


@dataclass(frozen=True)
class TrajectorySeries:
    """Per-step record of one trajectory: time, counter, end-facet flux."""

    tau: np.ndarray
    n_emitted: np.ndarray
    flux: np.ndarray


def trajectory_rng(master_seed: int, trajectory_index: int) -> Generator:
    """Counter-based per-trajectory stream, independent of scheduling."""
    return Generator(Philox(key=[master_seed, trajectory_index]))


def _normalize_seed(trajectory_seed) -> tuple[int, int]:
    if isinstance(trajectory_seed, (tuple, list)) and len(trajectory_seed) == 2:
        return int(trajectory_seed[0]), int(trajectory_seed[1])
    return int(trajectory_seed), 0


def seed_trajectory(grid: Grid, profile: CondensateProfile, cfg: ModelConfig, rng: Generator) -> FieldState:
    """Draw the stochastic initial state for one trajectory.

    The forward side-mode gets independent complex Gaussian noise per
    cell with mean square 1/dxi, the discrete stand-in for the
    delta-normalized vacuum term; the backward mode and the field start
    empty (the field is then immediately slaved to the noise).
    """
    g = len(grid)
    gg = rng.standard_normal((2, g))
    psi_plus = (gg[0] + 1j * gg[1]) / np.sqrt(2.0 * grid.dxi)
    psi_minus = np.zeros(g, dtype=np.complex128)
    e_field = _slave(psi_plus, psi_minus, profile, cfg)
    return FieldState(psi_plus=psi_plus, psi_minus=psi_minus, e_field=e_field, tau=0.0)


def _slave(psi_plus, psi_minus, profile: CondensateProfile, cfg: ModelConfig) -> np.ndarray:
    psi0 = np.sqrt(profile.density)
    E = np.empty((len(psi_plus), 1), dtype=np.complex128)
    _engine.slave_field(
        np.ascontiguousarray(psi_plus[:, None]),
        np.ascontiguousarray(psi_minus[:, None]),
        psi0,
        profile.grid.dxi,
        cfg.gamma / cfg.n_atoms,
        cfg.backward_enabled,
        E,
    )
    return E[:, 0]


def slaved_field(state: FieldState, profile: CondensateProfile, cfg: ModelConfig) -> np.ndarray:
    """End-fire field amplitude E(xi) slaved to the current matter fields."""
    return _slave(state.psi_plus, state.psi_minus, profile, cfg)


def step(state: FieldState, profile: CondensateProfile, cfg: ModelConfig) -> FieldState:
    """One RK4 step of length cfg.dtau; raises TrajectoryAbort on NaN/Inf."""
    G = len(state.psi_plus)
    PP = np.ascontiguousarray(state.psi_plus[:, None])
    PM = np.ascontiguousarray(state.psi_minus[:, None])
    psi0 = np.sqrt(profile.density)
    coup = cfg.gamma / cfg.n_atoms
    scratch = [np.empty((G, 1), dtype=np.complex128) for _ in range(6)]
    E1, E2, PPa, PMa, KP, KV = scratch
    PMa[:] = 0.0
    _engine.slave_field(PP, PM, psi0, profile.grid.dxi, coup, cfg.backward_enabled, E1)
    _engine.rk4_step(
        PP, PM, psi0, profile.grid.dxi, coup, cfg.backward_enabled,
        cfg.dtau, E1, E2, PPa, PMa, KP, KV,
    )
    if not (np.all(np.isfinite(PP.view(np.float64))) and np.all(np.isfinite(PM.view(np.float64)))):
        raise TrajectoryAbort(f"non-finite field amplitude after step at tau={state.tau}")
    return FieldState(
        psi_plus=PP[:, 0].copy(),
        psi_minus=PM[:, 0].copy(),
        e_field=E1[:, 0].copy(),
        tau=state.tau + cfg.dtau,
    )


def _validate_thresholds(thresholds) -> np.ndarray:
    thr = np.asarray(thresholds, dtype=float)
    if thr.size == 0:
        raise ConfigError("thresholds must be nonempty")
    if np.any(~np.isfinite(thr)) or np.any(thr < 0):
        raise ConfigError("thresholds must be finite and nonnegative")
    if np.any(np.diff(thr) <= 0):
        raise ConfigError("thresholds must be strictly ascending")
    return thr


def passage_times_from_rows(e_rows, steps, h, scale, counters0, tau0, thresholds):
    """First-passage times from recorded end-facet field rows.

    e_rows[k, b] is E(end facet) after k steps for column b; the counter
    is accumulated by trapezoid with per-column offsets counters0. Returns
    (times, counter_end): times[t, b] is the interpolated crossing time of
    thresholds[t] (NaN if not reached within the recorded window).
    """
    rows = e_rows[: steps + 1]
    I = scale * (rows.real**2 + rows.imag**2)
    counter = np.empty_like(I)
    counter[0] = counters0
    if steps > 0:
        np.cumsum(0.5 * h * (I[:-1] + I[1:]), axis=0, out=counter[1:])
        counter[1:] += counters0
    n_thr = len(thresholds)
    B = rows.shape[1]
    times = np.full((n_thr, B), np.nan)
    for t, thr in enumerate(thresholds):
        reached = counter >= thr
        hit = reached.any(axis=0)
        k = np.argmax(reached, axis=0)
        at_start = hit & (k == 0)
        times[t, at_start] = tau0
        inner = hit & (k > 0)
        if np.any(inner):
            ki = k[inner]
            cols = np.nonzero(inner)[0]
            c_hi = counter[ki, cols]
            c_lo = counter[ki - 1, cols]
            frac = (thr - c_lo) / (c_hi - c_lo)
            times[t, inner] = tau0 + (ki - 1 + frac) * h
    return times, counter[steps]


def run_trajectory(
    cfg: ModelConfig,
    profile: CondensateProfile,
    trajectory_seed,
    thresholds,
    record_series: bool = False,
):
    """Integrate one seeded trajectory and report first-passage times.

    trajectory_seed is either a bare integer or a (master_seed, index)
    pair; the latter matches the streams the ensemble module uses, so a
    single trajectory can be replayed out of an ensemble. Returns
    (times, series) where times[i] is the passage time for thresholds[i]
    (NaN when the counter never reaches it before tau_max) and series is
    a TrajectorySeries when record_series else None.
    """
    thr = _validate_thresholds(thresholds)
    master, index = _normalize_seed(trajectory_seed)
    rng = trajectory_rng(master, index)
    grid = profile.grid
    G = len(grid)
    gg = rng.standard_normal((2, G))
    PP = np.ascontiguousarray(((gg[0] + 1j * gg[1]) / np.sqrt(2.0 * grid.dxi))[:, None])
    PM = np.zeros((G, 1), dtype=np.complex128)
    psi0 = np.sqrt(profile.density)
    coup = cfg.gamma / cfg.n_atoms
    scale = cfg.n_atoms / cfg.gamma
    n_steps = int(np.ceil(cfg.tau_max / cfg.dtau - 1e-9))
    e_rows = np.empty((n_steps + 1, 1), dtype=np.complex128)
    counters = np.zeros(1)
    status = np.zeros(1, dtype=np.uint8)
    thr_stop = np.inf if record_series else float(thr[-1])
    steps = _engine.integrate_batch(
        PP, PM, psi0, grid.dxi, coup, cfg.backward_enabled, cfg.dtau,
        n_steps, scale, thr_stop, counters, e_rows, status,
    )
    if status[0] != 0:
        raise TrajectoryAbort(
            f"non-finite field amplitude near tau={steps * cfg.dtau:.6g} "
            f"(gamma={cfg.gamma}, dtau={cfg.dtau})"
        )
    times, _ = passage_times_from_rows(e_rows, steps, cfg.dtau, scale, np.zeros(1), 0.0, thr)
    series = None
    if record_series:
        rows = e_rows[: steps + 1, 0]
        flux = scale * (rows.real**2 + rows.imag**2)
        inc = 0.5 * cfg.dtau * (flux[:-1] + flux[1:])
        n_emit = np.concatenate([[0.0], np.cumsum(inc)])
        series = TrajectorySeries(
            tau=np.arange(steps + 1) * cfg.dtau,
            n_emitted=n_emit,
            flux=flux,
        )
    return times[:, 0], series
