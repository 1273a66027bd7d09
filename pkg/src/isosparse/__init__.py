"""Group-sparse thresholding with within-group isolation.

A library for a weakly-convex group penalty whose exact threshold operator
keeps only the dominant coefficients of each group, plus convergent
denoising (Douglas-Rachford, analysis prior) and deconvolution
(forward-backward) solvers, comparison penalties, and reproducible benchmark
experiments.
"""

__version__ = "0.1.0"

from .groups import GroupLayout, SuperGroupLayout, ThresholdParams
from .oracle import (
    GroupNormCost,
    OracleConfig,
    PairProductCost,
    SparseGroupCost,
    SquaredL1Cost,
    brute_force_prox,
    convexity_probe,
)
from .prox import (
    ProxResult,
    gamma_bounds_for_support,
    group_l2_norms,
    hybrid_penalty_value,
    p_shrink,
    penalty_value,
    prox_bivariate_closed_form,
    prox_complex,
    prox_elasso,
    prox_elasso_grouped,
    prox_full,
    prox_hybrid,
    prox_l21,
    prox_sgl,
    prox_single_group_binary,
    prox_single_group_linear,
    soft_threshold,
)
from .solvers import (
    ConvOperator,
    DeconvProblem,
    DenoiseProblem,
    SolverReport,
    dr_denoise,
    fbs_deconvolve,
    spectral_norm,
)
from .stft import StftFrame, tf_group_layout

__all__ = [
    "__version__",
    "GroupLayout",
    "SuperGroupLayout",
    "ThresholdParams",
    "ProxResult",
    "penalty_value",
    "hybrid_penalty_value",
    "soft_threshold",
    "prox_single_group_linear",
    "prox_single_group_binary",
    "prox_bivariate_closed_form",
    "prox_complex",
    "prox_full",
    "prox_hybrid",
    "prox_l21",
    "prox_elasso",
    "prox_elasso_grouped",
    "prox_sgl",
    "p_shrink",
    "gamma_bounds_for_support",
    "group_l2_norms",
    "OracleConfig",
    "PairProductCost",
    "SquaredL1Cost",
    "SparseGroupCost",
    "GroupNormCost",
    "brute_force_prox",
    "convexity_probe",
    "StftFrame",
    "tf_group_layout",
    "ConvOperator",
    "SolverReport",
    "DenoiseProblem",
    "DeconvProblem",
    "spectral_norm",
    "dr_denoise",
    "fbs_deconvolve",
]
