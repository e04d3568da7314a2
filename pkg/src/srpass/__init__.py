"""Superradiant passage-time statistics from an elongated condensate.

A linearized side-mode model driven by quantum-seeded initial noise:
closed-form kernel oracles, a stochastic trajectory integrator, ensemble
passage-time collection, inverse-Gaussian and Gumbel fitting, and a
drifted-Brownian-motion cross-check.
"""

__version__ = "0.1.0"

from .model import (
    ConfigError,
    CondensateProfile,
    Grid,
    ModelConfig,
    config_from_dict,
    cumulative_density,
    derived_physical_constants,
    load_config,
    thomas_fermi_density,
)
from .kernels import (
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
from .dynamics import (
    FieldState,
    TrajectoryAbort,
    TrajectorySeries,
    run_trajectory,
    seed_trajectory,
    slaved_field,
    step,
    trajectory_rng,
)
from .ensemble import (
    DensityAverage,
    EnsembleSpec,
    PassageSample,
    RunAborted,
    compare_backward_onoff,
    mc_photon_density,
    run_ensemble,
    times_by_threshold,
)
from .stats import (
    FitError,
    FitQuality,
    GumbelParams,
    Histogram,
    IGParams,
    classify_regime,
    fit_gumbel_lsq,
    fit_ig_lsq,
    fit_ig_mle,
    fit_quality,
    fit_s_vs_gamma,
    gumbel_pdf,
    histogram,
    ig_cdf,
    ig_moments,
    ig_pdf,
    ks_statistic,
    overlap,
    s_ratio,
    scaled_histogram,
)
from .brownian import (
    DriftSpec,
    PassageTimeout,
    bm_first_passage_sample,
    bm_passage_ensemble,
    correspondence_map,
)

__all__ = [
    "__version__",
    "ConfigError", "CondensateProfile", "Grid", "ModelConfig",
    "config_from_dict", "cumulative_density", "derived_physical_constants",
    "load_config", "thomas_fermi_density",
    "KernelDomainError", "kernel_F01", "kernel_F02", "kernel_F10",
    "kernel_F11", "kernel_F20", "quantum_emitted_curve",
    "quantum_emitted_photons", "quantum_flux_profile", "quantum_photon_flux",
    "FieldState", "TrajectoryAbort", "TrajectorySeries", "run_trajectory",
    "seed_trajectory", "slaved_field", "step", "trajectory_rng",
    "DensityAverage", "EnsembleSpec", "PassageSample", "RunAborted",
    "compare_backward_onoff", "mc_photon_density", "run_ensemble",
    "times_by_threshold",
    "FitError", "FitQuality", "GumbelParams", "Histogram", "IGParams",
    "classify_regime", "fit_gumbel_lsq", "fit_ig_lsq", "fit_ig_mle",
    "fit_quality", "fit_s_vs_gamma", "gumbel_pdf", "histogram", "ig_cdf",
    "ig_moments", "ig_pdf", "ks_statistic", "overlap", "s_ratio",
    "scaled_histogram",
    "DriftSpec", "PassageTimeout", "bm_first_passage_sample",
    "bm_passage_ensemble", "correspondence_map",
]
