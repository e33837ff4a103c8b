"""Simulation and likelihood-free inference for a continuous-time
"steps and turns" random walk observed at regular time intervals.

The package simulates the latent walk (exponential step durations, von
Mises turning angles, unit speed) and its discrete-time observation,
computes the four track summaries used for inference, runs rejection ABC
with optional local-linear or neural-network regression corrections over
prior-predictive reference tables, reproduces the cross-validation,
coverage and observation-scale diagnostics, and provides numerical
oracles for the displacement densities.
"""

from .densities import (
    DensityGrid,
    density_mc_check,
    f_s_density,
    f_s_grid,
    f_s_normalization,
    f_v_density,
    f_v_grid,
    f_v_normalization,
    f_z_density,
    f_z_grid,
    f_z_normalization,
)
from .errors import (
    DegenerateTrackError,
    InsufficientPathError,
    QuadratureError,
    SingularRegressionError,
    StepturnError,
    TrackTooShortError,
    TrainingDivergedError,
)
from .experiments import (
    CoverageReport,
    CrossValReport,
    DirectFitResult,
    RScanReport,
    coverage_pvalue,
    coverage_report,
    coverage_test,
    cross_validate,
    direct_fit,
    empirical_coverage,
    md_index,
    prediction_error,
    r_scan,
)
from .inference import (
    PriorSpec,
    ReferenceTable,
    SimConfig,
    WeightedPosterior,
    abc_reject,
    fit,
    generate_reference_table,
    hpd_interval,
    loclinear_adjust,
    neuralnet_adjust,
    standardized_distances,
    weighted_quantile,
)
from .movement import (
    LatentPath,
    MovementParams,
    ObservedTrack,
    change_counts,
    latent_from_steps,
    observe,
    sample_exponential,
    sample_von_mises,
    simulate_latent,
    simulate_until,
    wrap_angle,
)
from .nnet import NetConfig
from .summaries import (
    ObservedDecomposition,
    SummaryVector,
    bessel_ratio,
    bessel_ratio_inverse,
    decompose,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateTrackError",
    "DensityGrid",
    "CoverageReport",
    "CrossValReport",
    "DirectFitResult",
    "InsufficientPathError",
    "LatentPath",
    "MovementParams",
    "NetConfig",
    "ObservedDecomposition",
    "ObservedTrack",
    "PriorSpec",
    "QuadratureError",
    "ReferenceTable",
    "RScanReport",
    "SimConfig",
    "SingularRegressionError",
    "StepturnError",
    "SummaryVector",
    "TrackTooShortError",
    "TrainingDivergedError",
    "WeightedPosterior",
    "abc_reject",
    "bessel_ratio",
    "bessel_ratio_inverse",
    "change_counts",
    "coverage_pvalue",
    "coverage_report",
    "coverage_test",
    "cross_validate",
    "decompose",
    "density_mc_check",
    "direct_fit",
    "empirical_coverage",
    "f_s_density",
    "f_s_grid",
    "f_s_normalization",
    "f_v_density",
    "f_v_grid",
    "f_v_normalization",
    "f_z_density",
    "f_z_grid",
    "f_z_normalization",
    "fit",
    "generate_reference_table",
    "hpd_interval",
    "latent_from_steps",
    "loclinear_adjust",
    "md_index",
    "neuralnet_adjust",
    "observe",
    "prediction_error",
    "r_scan",
    "sample_exponential",
    "sample_von_mises",
    "simulate_latent",
    "simulate_until",
    "standardized_distances",
    "summarize",
    "weighted_quantile",
    "wrap_angle",
]
