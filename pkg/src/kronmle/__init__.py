"""Maximum likelihood estimation in the matrix normal model.

Thresholds on the sample size for existence and uniqueness of the
Kronecker MLE, minimal-rank certificates, canonical forms of matrix
pencils, closed-form maximizers and the flip-flop algorithm.
"""
from .closedform import (
    classify_2x2,
    critical_points_nonunique,
    g0_at_optimum,
    g_min_m2_plus_1,
    mle_m2_plus_1,
)
from .core import (
    DataSample,
    DegenerateSample,
    DimensionError,
    FitReport,
    FitStatus,
    KronMLEError,
    Normalization,
    NotPositiveDefinite,
    PrecisionPair,
    geodesic,
    group_transform,
    log_likelihood,
    profile_objective,
)
from .flipflop import FlipFlopConfig, Init, StepIllDefined, fit, flipflop_step
from .minrank import numeric_min_rank_search, r2, r2_square, s2, sn_m2_equals_2
from .montecarlo import empirical_threshold, prob_real_eigs_2x2, sample_matrix_normal
from .pencil import canonical_pair, canonicalize_pair, real_jordan_pair
from .thresholds import thresholds

__version__ = "0.1.0"

__all__ = [
    "DataSample",
    "DegenerateSample",
    "DimensionError",
    "FitReport",
    "FitStatus",
    "FlipFlopConfig",
    "Init",
    "KronMLEError",
    "Normalization",
    "NotPositiveDefinite",
    "PrecisionPair",
    "StepIllDefined",
    "canonical_pair",
    "canonicalize_pair",
    "classify_2x2",
    "critical_points_nonunique",
    "empirical_threshold",
    "fit",
    "flipflop_step",
    "g0_at_optimum",
    "g_min_m2_plus_1",
    "geodesic",
    "group_transform",
    "log_likelihood",
    "mle_m2_plus_1",
    "numeric_min_rank_search",
    "prob_real_eigs_2x2",
    "profile_objective",
    "r2",
    "r2_square",
    "real_jordan_pair",
    "s2",
    "sample_matrix_normal",
    "sn_m2_equals_2",
    "thresholds",
]
