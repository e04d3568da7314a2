"""Kernel functions against an independent contour-inversion oracle.

Spot values below were frozen from tests/oracles.py (mpmath Talbot
contour, 40 digits), not from the package itself.
"""

import numpy as np
import pytest

from srpass import ModelConfig, CondensateProfile
from srpass.kernels import (
    KERNELS,
    KernelDomainError,
    kernel_F01,
    kernel_F02,
    kernel_F10,
    kernel_F11,
    kernel_F20,
    quantum_emitted_curve,
    quantum_emitted_photons,
    quantum_flux_profile,
    quantum_photon_flux,
)

from oracles import talbot_inverse_laplace

GRID = (0.5, 1.0, 2.0, 5.0)


@pytest.mark.parametrize("mu,nu", sorted(KERNELS))
def test_kernels_match_contour_inversion(mu, nu):
    fn = KERNELS[(mu, nu)]
    for y in GRID:
        for z in GRID:
            got = complex(fn(y, z))
            want = talbot_inverse_laplace(y, z, mu, nu)
            assert got == pytest.approx(want, rel=1e-6), (mu, nu, y, z)


def test_kernel_frozen_spot_values():
    assert complex(kernel_F10(1.0, 1.0)) == pytest.approx(
        1.490315715469639 + 0.7618964400355686j, rel=1e-12
    )
    assert complex(kernel_F01(1.0, 1.0)) == pytest.approx(
        0.4254401947618842 - 0.6370724200579947j, rel=1e-12
    )
    assert complex(kernel_F11(1.0, 1.0)) == pytest.approx(
        0.6994844300467816 - 0.5324377603538776j, rel=1e-12
    )
    assert complex(kernel_F20(1.0, 1.0)) == pytest.approx(
        1.133469746544150 + 0.2821158452756674j, rel=1e-12
    )
    assert complex(kernel_F02(1.0, 1.0)) == pytest.approx(
        -0.1113230190704003 - 0.8749151264930827j, rel=1e-12
    )
    # strong-argument point exercises the scaled-Bessel path
    assert complex(kernel_F10(5.0, 5.0)) == pytest.approx(
        -429.3998701858424 + 940.8621581867980j, rel=1e-10
    )


def test_kernel_limits_z_zero():
    # instantaneous response: single poles start at 1, double poles at 0
    assert kernel_F10(3.0, 0.0) == 1.0 + 0.0j
    assert kernel_F01(3.0, 0.0) == 1.0 + 0.0j
    assert kernel_F11(3.0, 0.0) == 0.0 + 0.0j
    assert kernel_F20(3.0, 0.0) == 0.0 + 0.0j
    assert kernel_F02(3.0, 0.0) == 0.0 + 0.0j


def test_kernel_limits_y_zero():
    """y = 0 reduces each kernel to an elementary transform."""
    z = 1.7
    assert complex(kernel_F10(0.0, z)) == pytest.approx(1.0)
    assert complex(kernel_F01(0.0, z)) == pytest.approx(np.exp(-2j * z))
    assert complex(kernel_F11(0.0, z)) == pytest.approx((1.0 - np.exp(-2j * z)) / 2j)
    assert complex(kernel_F20(0.0, z)) == pytest.approx(z)
    assert complex(kernel_F02(0.0, z)) == pytest.approx(z * np.exp(-2j * z))


def test_kernel_domain_errors():
    for fn in KERNELS.values():
        with pytest.raises(KernelDomainError):
            fn(-0.1, 1.0)
        with pytest.raises(KernelDomainError):
            fn(1.0, -0.1)
        with pytest.raises(KernelDomainError):
            fn(np.nan, 1.0)


@pytest.fixture(scope="module")
def setup():
    cfg = ModelConfig(gamma=1.0)
    return cfg, CondensateProfile.thomas_fermi(cfg)


def test_flux_floor_at_time_zero(setup):
    # F10(y, 0) = 1, so the instantaneous flux is coupling times the
    # cumulative density: gamma at the end facet
    cfg, profile = setup
    assert quantum_photon_flux(cfg.lambda_len, 0.0, cfg, profile) == pytest.approx(
        cfg.gamma, rel=1e-9
    )
    xi = 0.25 * cfg.lambda_len
    want = cfg.gamma / cfg.n_atoms * profile.cumulative_at(xi)
    assert quantum_photon_flux(xi, 0.0, cfg, profile) == pytest.approx(want, rel=1e-9)


def test_flux_zero_at_entrance(setup):
    cfg, profile = setup
    assert quantum_photon_flux(0.0, 2.0, cfg, profile) == 0.0


def test_flux_frozen_value(setup):
    cfg, profile = setup
    assert quantum_photon_flux(cfg.lambda_len, 2.0, cfg, profile) == pytest.approx(
        5.9471632822, rel=1e-7
    )


def test_flux_monotone_in_time_and_space(setup):
    cfg, profile = setup
    lam = cfg.lambda_len
    f = [quantum_photon_flux(lam, t, cfg, profile) for t in (0.0, 1.0, 2.0, 3.0)]
    assert all(b > a for a, b in zip(f, f[1:]))
    g = [quantum_photon_flux(x, 2.0, cfg, profile) for x in (0.1 * lam, 0.5 * lam, lam)]
    assert all(b > a for a, b in zip(g, g[1:]))


def test_flux_domain_errors(setup):
    cfg, profile = setup
    with pytest.raises(KernelDomainError):
        quantum_photon_flux(-1.0, 1.0, cfg, profile)
    with pytest.raises(KernelDomainError):
        quantum_photon_flux(1.0, -1.0, cfg, profile)
    with pytest.raises(KernelDomainError):
        quantum_photon_flux(cfg.lambda_len * 2, 1.0, cfg, profile)


def test_flux_profile_matches_pointwise(setup):
    """The shared-table fast path agrees with adaptive quadrature."""
    cfg, profile = setup
    xi = np.array([0.2, 0.5, 0.9, 1.0]) * cfg.lambda_len
    table = quantum_flux_profile(2.0, cfg, profile, xi=xi)
    point = [quantum_photon_flux(x, 2.0, cfg, profile) for x in xi]
    np.testing.assert_allclose(table, point, rtol=2e-5)


def test_flux_profile_default_grid(setup):
    cfg, profile = setup
    prof = quantum_flux_profile(1.0, cfg, profile)
    assert prof.shape == profile.grid.xi.shape
    assert np.all(np.diff(prof) > 0)  # cumulative in xi


def test_emitted_photons_zero_at_zero(setup):
    cfg, profile = setup
    assert quantum_emitted_photons(0.0, cfg, profile) == 0.0


def test_emitted_curve_monotone_and_consistent(setup):
    cfg, profile = setup
    taus = np.array([0.0, 0.5, 1.0, 2.0, 3.0])
    curve = quantum_emitted_curve(taus, cfg, profile)
    assert curve[0] == 0.0
    assert np.all(np.diff(curve) > 0)
    single = quantum_emitted_photons(3.0, cfg, profile)
    assert single == pytest.approx(curve[-1], rel=1e-6)


def test_emitted_curve_threshold_crossing(setup):
    # frozen from an n_time refinement study: 2.653443 at the default
    # resolution, converged to 2.653455
    cfg, profile = setup
    taus = np.linspace(0.0, 4.0, 2001)
    curve = quantum_emitted_curve(taus, cfg, profile)
    crossing = np.interp(10.0, curve, taus)
    assert crossing == pytest.approx(2.65344, abs=2e-3)


def test_emitted_curve_time_resolution_converged(setup):
    cfg, profile = setup
    taus = np.array([1.0, 2.0, 3.0])
    a = quantum_emitted_curve(taus, cfg, profile, n_time=128)
    b = quantum_emitted_curve(taus, cfg, profile, n_time=512)
    np.testing.assert_allclose(a, b, rtol=1e-5)


def test_emitted_curve_rejects_negative_times(setup):
    cfg, profile = setup
    with pytest.raises(KernelDomainError):
        quantum_emitted_curve(np.array([-1.0, 2.0]), cfg, profile)
