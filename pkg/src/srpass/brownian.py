"""Drifted Brownian motion with one absorbing level.

Independent statistical oracle: first-passage times of X_t = nu*t +
sigma*B_t through the level alpha are inverse-Gaussian distributed with
mu = alpha/nu and lam = alpha**2/sigma**2, which closes the loop on the
fitting machinery without touching the field equations. A passage-time
fit (mean_T, s) maps onto a walk via correspondence_map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

# Euler steps per expected passage when dt is chosen by correspondence_map
_STEPS_PER_PASSAGE = 10_000
_MAX_STEPS = 1_000_000
_BLOCK = 16_384


class PassageTimeout(RuntimeError):
    """Walk failed to reach the absorbing level within the step budget."""


@dataclass(frozen=True)
class DriftSpec:
    nu: float
    sigma: float
    alpha: float
    dt: float

    def __post_init__(self):
        for name in ("nu", "sigma", "alpha", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def correspondence_map(mean_t: float, s: float) -> DriftSpec:
    """Walk parameters reproducing a passage-time fit (mean, s ratio).

    Drift is set to one, so the level equals the mean time and the
    diffusion amplitude is 1/sqrt(s); the implied fit parameters are
    mu = mean_t and lam = s * mean_t**2.
    """
    if not (mean_t > 0 and s > 0):
        raise ValueError(f"mean_t and s must be positive, got {mean_t}, {s}")
    return DriftSpec(
        nu=1.0, sigma=1.0 / np.sqrt(s), alpha=float(mean_t), dt=float(mean_t) / _STEPS_PER_PASSAGE
    )


@numba.njit(cache=True)
def _walk_block(x, t, nu, sigma, alpha, dt, gauss, unif):
    """Advance one walk through a block of pre-drawn noise.

    Returns (crossed, time, position). Crossing is declared either when
    the step lands at or above the level (time interpolated inside the
    step) or, below it, with the Brownian-bridge excursion probability
    exp(-2(alpha-x)(alpha-x_next)/(sigma^2 dt)); the bridge kills the
    O(sqrt(dt)) late bias of the naive walk.
    """
    s2dt = sigma * sigma * dt
    root = sigma * np.sqrt(dt)
    for i in range(gauss.size):
        xn = x + nu * dt + root * gauss[i]
        if xn >= alpha:
            return True, t + dt * (alpha - x) / (xn - x), xn
        p = np.exp(-2.0 * (alpha - x) * (alpha - xn) / s2dt)
        if unif[i] < p:
            return True, t + 0.5 * dt, xn
        x = xn
        t = t + dt
    return False, t, x


def bm_first_passage_sample(spec: DriftSpec, rng: np.random.Generator) -> float:
    """One first-passage time through the absorbing level."""
    x, t = 0.0, 0.0
    steps = 0
    while steps < _MAX_STEPS:
        block = min(_BLOCK, _MAX_STEPS - steps)
        gauss = rng.standard_normal(block)
        unif = rng.random(block)
        crossed, t, x = _walk_block(x, t, spec.nu, spec.sigma, spec.alpha, spec.dt, gauss, unif)
        if crossed:
            return float(t)
        steps += block
    raise PassageTimeout(
        f"no crossing of alpha={spec.alpha} within {_MAX_STEPS} steps of dt={spec.dt}"
    )


def bm_passage_ensemble(spec: DriftSpec, n_samples: int, rng) -> np.ndarray:
    """n_samples independent first-passage times.

    rng may be an integer master seed (sample k then gets its own
    counter-based stream keyed by (seed, k), so results are independent
    of evaluation order) or a Generator, which is spawned per sample.
    """
    if not (isinstance(n_samples, (int, np.integer)) and n_samples >= 0):
        raise ValueError(f"n_samples must be a nonnegative integer, got {n_samples}")
    if isinstance(rng, (int, np.integer)):
        streams = (
            np.random.Generator(np.random.Philox(key=[int(rng), k])) for k in range(n_samples)
        )
    else:
        streams = iter(rng.spawn(n_samples))
    out = np.empty(n_samples)
    for k, stream in enumerate(streams):
        out[k] = bm_first_passage_sample(spec, stream)
    return out
