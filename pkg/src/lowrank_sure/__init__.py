"""SURE and degrees of freedom for spectral-function estimators of low-rank means."""

from .errors import (
    DegenerateSpectrum,
    InvalidInput,
    LowRankSureError,
    NumericalFailure,
    SimulationAborted,
    SpectralDomainError,
    ThresholdAtSingularValue,
    ZeroSingularValueWithRectangular,
)
from .estimators import (
    Custom,
    HardThreshold,
    ReducedRank,
    SoftThreshold,
    SpectralEstimator,
    SteinConditionReport,
    apply_estimator,
    estimate,
    family_estimator,
    parse_estimator,
    spectral_values,
    validate_stein_conditions,
)
from .matrix import (
    DEFAULT_GAP_TOL,
    DistinctnessReport,
    MatrixObs,
    SvdFactors,
    check_distinct,
    frobenius_norm_sq,
    read_matrix_csv,
    svd_decompose,
    write_matrix_csv,
)
from .oracle import FdConfig, covariance_df, covariance_term, finite_difference_divergence, finite_difference_divergences
from .risk import (
    PathEntry,
    RiskReport,
    SurePath,
    divergence,
    divergence_hard,
    divergence_reduced_rank,
    divergence_soft,
    divergence_spectral_general,
    sure_estimate,
    sure_path,
)
from .simulation import (
    GridPointResult,
    SimConfig,
    SimulationResult,
    bias_confidence,
    default_lambda_grid,
    replicate_rng,
    run_simulation,
    sample_gaussian_matrix,
)

__version__ = "0.1.0"
