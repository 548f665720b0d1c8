"""Quantization diagnostics for inhomogeneous self-similar measures.

The package computes the two competing moment exponents of such a
measure, predicts the quantization-error decay regime, builds the
constructive codebooks that witness the upper bounds, and estimates the
actual errors by seeded Lloyd optimization.  See the README for the CLI
and the bundled example configurations.
"""

from __future__ import annotations

from .antichain import (
    AntichainRecord,
    build_lambda,
    codebook_from_antichain,
    error_bounds,
    eta_bounds,
    lambda_series,
)
from .antichain2 import (
    CaseTwoRecord,
    build_gamma,
    build_gamma_sigma,
    build_psi,
    lambda_tilde,
    lambda_tilde_series,
    patch_codebook,
    pi_bounds,
)
from .config import ConfigError, RunConfig, example_config_path, load_config
from .dims import (
    EQUAL,
    LOG_CORRECTED,
    PURE_POWER,
    XI1_GREATER,
    XI2_GREATER,
    NumericFailure,
    OrderPrediction,
    XiReport,
    classify,
    find_crossing_r,
    hausdorff_dim_nu,
    moment_sum,
    solve_xi,
)
from .model import (
    CASE_I,
    CASE_II,
    CaseMismatch,
    DegenerateSystem,
    IsmSystem,
    SeparationReport,
    Similitude,
    attractor_hull,
    case_i_system,
    case_ii_system,
    check_separation,
    normalize,
    sample_batch,
    word_map,
)
from .quantizer import (
    OrderFit,
    QuantEstimate,
    empirical_curve,
    estimate_error,
    fit_order,
    optimize_codebook,
    scaled_coefficient,
)
from .words import (
    AntichainSet,
    CardinalityCapExceeded,
    DepthCapExceeded,
    MAX_DEPTH,
    Word,
    format_word,
    parse_word,
    verify_maximal_antichain,
)

__version__ = "0.1.0"

__all__ = [
    "AntichainRecord",
    "AntichainSet",
    "CASE_I",
    "CASE_II",
    "CardinalityCapExceeded",
    "CaseMismatch",
    "CaseTwoRecord",
    "ConfigError",
    "DegenerateSystem",
    "DepthCapExceeded",
    "EQUAL",
    "IsmSystem",
    "LOG_CORRECTED",
    "MAX_DEPTH",
    "NumericFailure",
    "OrderFit",
    "OrderPrediction",
    "PURE_POWER",
    "QuantEstimate",
    "RunConfig",
    "SeparationReport",
    "Similitude",
    "Word",
    "XI1_GREATER",
    "XI2_GREATER",
    "XiReport",
    "attractor_hull",
    "build_gamma",
    "build_gamma_sigma",
    "build_lambda",
    "build_psi",
    "case_i_system",
    "case_ii_system",
    "check_separation",
    "classify",
    "codebook_from_antichain",
    "empirical_curve",
    "error_bounds",
    "estimate_error",
    "eta_bounds",
    "example_config_path",
    "find_crossing_r",
    "fit_order",
    "format_word",
    "hausdorff_dim_nu",
    "lambda_series",
    "lambda_tilde",
    "lambda_tilde_series",
    "load_config",
    "moment_sum",
    "normalize",
    "optimize_codebook",
    "parse_word",
    "patch_codebook",
    "pi_bounds",
    "sample_batch",
    "scaled_coefficient",
    "solve_xi",
    "verify_maximal_antichain",
    "word_map",
]
