import json

import numpy as np
import pytest
from scipy.integrate import quad

from srpass.model import (
    CondensateProfile,
    ConfigError,
    Grid,
    ModelConfig,
    config_from_dict,
    cumulative_density,
    derived_physical_constants,
    load_config,
    thomas_fermi_density,
)


def test_config_defaults():
    cfg = ModelConfig()
    assert cfg.gamma == 1.0
    assert cfg.n_atoms == 1e6
    assert cfg.grid_points == 400
    assert cfg.lambda_len == pytest.approx(1046.5)
    assert cfg.backward_enabled is True


def test_config_derived_steps():
    # dtau keeps gamma*dtau constant above gamma=1; tau_max scales as 1/gamma
    assert ModelConfig(gamma=0.5).dtau == 1e-3
    assert ModelConfig(gamma=100.0).dtau == pytest.approx(1e-5)
    assert ModelConfig(gamma=4.0).tau_max == pytest.approx(5.0)
    cfg = ModelConfig(dtau=0.01, tau_max=3.0)
    assert (cfg.dtau, cfg.tau_max) == (0.01, 3.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"gamma": 0.0},
        {"gamma": -1.0},
        {"gamma": float("nan")},
        {"n_atoms": 0.0},
        {"lambda_len": -5.0},
        {"grid_points": 1},
        {"grid_points": 2.5},
        {"dtau": 0.0},
        {"tau_max": -1.0},
        {"rng_seed": -1},
        {"rng_seed": 2**64},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ConfigError):
        ModelConfig(**kwargs)


def test_config_replace_keeps_frozen():
    cfg = ModelConfig(gamma=2.0)
    cfg2 = cfg.replace(gamma=3.0)
    assert cfg.gamma == 2.0 and cfg2.gamma == 3.0
    with pytest.raises(Exception):
        cfg.gamma = 5.0


def test_grid_cell_centers():
    cfg = ModelConfig(grid_points=4, lambda_len=8.0)
    grid = Grid.from_config(cfg)
    assert len(grid) == 4
    assert grid.dxi == 2.0
    np.testing.assert_allclose(grid.xi, [1.0, 3.0, 5.0, 7.0])


def test_profile_density_normalization():
    """The inverted parabola integrates to exactly N over the support."""
    cfg = ModelConfig(n_atoms=3e5, lambda_len=100.0)
    val, _ = quad(lambda x: thomas_fermi_density(x, cfg), 0.0, cfg.lambda_len)
    assert val == pytest.approx(3e5, rel=1e-10)


def test_profile_peak_and_edges():
    cfg = ModelConfig()
    lam, n = cfg.lambda_len, cfg.n_atoms
    assert thomas_fermi_density(lam / 2.0, cfg) == pytest.approx(1.5 * n / lam)
    assert thomas_fermi_density(0.0, cfg) == 0.0
    assert thomas_fermi_density(lam, cfg) == 0.0
    assert thomas_fermi_density(-1.0, cfg) == 0.0
    assert thomas_fermi_density(lam + 1.0, cfg) == 0.0


def test_cumulative_matches_quadrature():
    cfg = ModelConfig(n_atoms=1e4, lambda_len=50.0)
    profile = CondensateProfile.thomas_fermi(cfg)
    for xi in (0.0, 7.3, 25.0, 50.0):
        ref, _ = quad(lambda x: thomas_fermi_density(x, cfg), 0.0, xi)
        assert cumulative_density(profile, xi) == pytest.approx(ref, abs=1e-6)
    assert cumulative_density(profile, cfg.lambda_len) == pytest.approx(1e4, rel=1e-12)


def test_cumulative_rejects_outside_support():
    profile = CondensateProfile.thomas_fermi(ModelConfig())
    with pytest.raises(ConfigError):
        cumulative_density(profile, -0.5)
    with pytest.raises(ConfigError):
        cumulative_density(profile, 1e9)


def test_profile_arrays_are_readonly():
    profile = CondensateProfile.thomas_fermi(ModelConfig(grid_points=16))
    with pytest.raises(ValueError):
        profile.density[0] = 1.0
    with pytest.raises(ValueError):
        profile.grid.xi[0] = 1.0


def test_derived_constants_frozen_values():
    # recoil frequency, dimensionless light speed, dimensionless length
    d = derived_physical_constants()
    assert d["omega_r"] == pytest.approx(23676.809130903224, rel=1e-12)
    assert d["chi"] == pytest.approx(50963989141.385124, rel=1e-12)
    assert d["lambda_len"] == pytest.approx(1046.5, rel=1e-12)
    # chi huge is what justifies slaving the field to the matter
    assert d["chi"] > 1e10


def test_derived_constants_rejects_nonpositive():
    with pytest.raises(ConfigError):
        derived_physical_constants(k_laser=-1.0)


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_dict({"gamma": 1.0, "bogus": 2})


def test_config_from_dict_coerces_whole_floats():
    cfg = config_from_dict({"grid_points": 64.0, "rng_seed": 7.0})
    assert cfg.grid_points == 64 and cfg.rng_seed == 7
    with pytest.raises(ConfigError):
        config_from_dict({"grid_points": 64.5})


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"gamma": 2.5, "grid_points": 32}))
    cfg = load_config(path)
    assert cfg.gamma == 2.5
    assert cfg.grid_points == 32
    assert cfg.n_atoms == 1e6  # untouched default


def test_load_config_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(path)
