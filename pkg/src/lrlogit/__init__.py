"""Packing sets, information-theoretic risk floors, and low-rank estimators
for logistic regression with matrix covariates."""

from .bounds import (
    BoundInputs,
    FanoInputs,
    MinimaxBound,
    PackingCardinality,
    SandwichReport,
    bound_constants,
    delta_epsilon,
    fano_lower_bound,
    minimax_lower_bound,
    packing_log_cardinality,
    sandwich_check,
)
from .errors import (
    CardinalityTooLarge,
    ConstructionFailed,
    DegenerateCardinality,
    EmptyRange,
    LrlogitError,
    RankDeficient,
)
from .estimators import (
    DecoderStats,
    FitOptions,
    FitResult,
    MatrixLogisticRegression,
    RiskSummary,
    decode_certificate,
    decoder_error_rate,
    empirical_risk,
    fit_full,
    fit_lowrank,
    min_distance_decode,
    numerical_rank,
    svd_truncate,
)
from .experiment import ExperimentConfig, ExperimentResult, RiskCurveRow, run_experiment
from .model import (
    Dataset,
    KLReport,
    cmi_upper_bound,
    grad_neg_loglik,
    half_normal_check,
    kl_conditional,
    kl_upper_bound,
    neg_loglik,
    sample_dataset,
    sigmoid,
)
from .packing import (
    HypercubeMatrixSet,
    HypercubeVectorSet,
    MaxCardinalities,
    OrthogonalBases,
    PackingSet,
    RankRFactorization,
    VerificationReport,
    assemble_packing,
    auto_epsilon,
    build_core,
    build_factor,
    epsilon_range,
    hamming_failure_bound_matrices,
    hamming_failure_bound_vectors,
    hamming_min,
    load_packing,
    max_cardinalities,
    sample_hypercube_matrices,
    sample_hypercube_vectors,
    sample_orthogonal_bases,
    save_packing,
    verify_packing,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
