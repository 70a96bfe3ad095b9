"""Segmentation and clustering of interval-valued time series with
block-Toeplitz sparse precision models, recurrence-plot image datasets,
and interval forecast scoring."""

from .assignment import AssignmentPath, brute_force_assign, cost_matrix, viterbi_assign
from .imaging import (
    JrpImage,
    RpConfig,
    build_image_dataset,
    jrp_fuse,
    jrp_image,
    rp_matrix,
    thresholds_from_quantile,
)
from .ingest import (
    IntervalSeries,
    WindowBatch,
    build_windows,
    read_interval_csv,
    write_interval_csv,
)
from .likelihood import (
    DEFAULT_SCAD_A,
    ClusterModel,
    ClusterMoments,
    cluster_cost,
    empirical_moments,
    neg_log_lik,
    scad,
    scad_derivative,
)
from .metrics import (
    DEFAULT_KERNEL,
    IntervalForecast,
    d1,
    dK,
    load_features,
    mde,
    ridge_baseline,
)
from .pipeline import (
    FitResult,
    bic_score,
    cv_lambda,
    fit,
    load_model,
    save_model,
    select_k,
)
from .precision import (
    AdmmState,
    SolverConfig,
    convergence_diagnostics,
    estimate_precision,
    penalty_weight_matrix,
)
from .toeplitz import (
    BlockToeplitzIndex,
    ToeplitzMatrix,
    build_index,
    is_block_toeplitz,
    project_average,
)

__all__ = [
    "AssignmentPath",
    "AdmmState",
    "BlockToeplitzIndex",
    "ClusterModel",
    "ClusterMoments",
    "DEFAULT_KERNEL",
    "DEFAULT_SCAD_A",
    "FitResult",
    "IntervalForecast",
    "IntervalSeries",
    "JrpImage",
    "RpConfig",
    "SolverConfig",
    "ToeplitzMatrix",
    "WindowBatch",
    "bic_score",
    "brute_force_assign",
    "build_image_dataset",
    "build_index",
    "build_windows",
    "cluster_cost",
    "convergence_diagnostics",
    "cost_matrix",
    "cv_lambda",
    "d1",
    "dK",
    "empirical_moments",
    "estimate_precision",
    "fit",
    "is_block_toeplitz",
    "jrp_fuse",
    "jrp_image",
    "load_features",
    "load_model",
    "mde",
    "neg_log_lik",
    "penalty_weight_matrix",
    "project_average",
    "read_interval_csv",
    "ridge_baseline",
    "rp_matrix",
    "save_model",
    "scad",
    "scad_derivative",
    "select_k",
    "thresholds_from_quantile",
    "viterbi_assign",
    "write_interval_csv",
]
