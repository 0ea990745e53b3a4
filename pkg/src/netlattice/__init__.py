"""Ensemble statistics of deep random networks, checked against ring-lattice models.

The package has three layers:

* generation: :mod:`netlattice.config`, :mod:`netlattice.sampler` draw
  network trajectories layer by layer and record norm observables;
* prediction: :mod:`netlattice.theory` evaluates the closed-form saddle
  points, mode variances and cross-covariances the observables should obey;
* measurement: :mod:`netlattice.spectral` and :mod:`netlattice.lattice`
  estimate the same quantities from samples, either from network ensembles
  or from Metropolis chains on the equivalent one-dimensional ring.

:mod:`netlattice.experiments` wires the layers into named end-to-end runs
with pass/fail reports, and :mod:`netlattice.cli` exposes them as a command
line tool.
"""

__version__ = "0.1.0"

from .config import (
    EnsembleConfig,
    config_violations,
    derive_sample_seed,
    load_config,
    save_config,
    validate_config,
)
from .errors import ConfigError, NetLatticeError, Supercritical
from .experiments import (
    ComparisonReport,
    ComparisonRow,
    ExperimentPlan,
    KINDS,
    compare,
    make_plan,
    run_experiment,
)
from .lattice import (
    MetropolisResult,
    RingState,
    effective_sample_size,
    integrated_autocorrelation,
    metropolis_run,
    ring_energy,
    uniform_state,
)
from .observables import LayerObservables, Trajectory, compute_layer_observables
from .plotting import AxesSpec, PlotSeries, emit_plot
from .sampler import EnsembleResult, run_ensemble, sample_trajectory
from .spectral import (
    CrossSpectrumEstimate,
    LorentzianFit,
    SpectrumEstimate,
    ensemble_modes,
    estimate_cross_spectrum,
    estimate_spectrum,
    fft_modes,
    fit_lorentzian,
    fluctuation_series,
    mode_wavevectors,
    reconstruct_series,
)
from .theory import (
    ReluSaddle,
    TheoryPrediction,
    correlation_length,
    eft_coefficients,
    linear_mode_coefficient,
    linear_mode_variance,
    linear_saddle,
    meanfield_fixed_point,
    predict,
    relu_covariance,
    relu_inverse_covariance,
    relu_saddle,
)

__all__ = [
    "AxesSpec",
    "ComparisonReport",
    "ComparisonRow",
    "ConfigError",
    "CrossSpectrumEstimate",
    "EnsembleConfig",
    "EnsembleResult",
    "ExperimentPlan",
    "KINDS",
    "LayerObservables",
    "LorentzianFit",
    "MetropolisResult",
    "NetLatticeError",
    "PlotSeries",
    "ReluSaddle",
    "RingState",
    "SpectrumEstimate",
    "Supercritical",
    "TheoryPrediction",
    "Trajectory",
    "compare",
    "compute_layer_observables",
    "config_violations",
    "correlation_length",
    "derive_sample_seed",
    "effective_sample_size",
    "eft_coefficients",
    "emit_plot",
    "ensemble_modes",
    "estimate_cross_spectrum",
    "estimate_spectrum",
    "fft_modes",
    "fit_lorentzian",
    "fluctuation_series",
    "integrated_autocorrelation",
    "linear_mode_coefficient",
    "linear_mode_variance",
    "linear_saddle",
    "load_config",
    "make_plan",
    "meanfield_fixed_point",
    "metropolis_run",
    "mode_wavevectors",
    "predict",
    "reconstruct_series",
    "relu_covariance",
    "relu_inverse_covariance",
    "relu_saddle",
    "ring_energy",
    "run_ensemble",
    "run_experiment",
    "sample_trajectory",
    "save_config",
    "uniform_state",
    "validate_config",
]
