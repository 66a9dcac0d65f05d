"""Drift-diffusion modelling of aesthetic score distributions."""

from .distcore import (
    ClassLabel,
    DegenerateHistogramError,
    MomentSet,
    ScoreHistogram,
    classify,
    from_pmf,
    moments,
    normalize,
    sk_boundary,
    sk_point,
)
from .fitting import (
    FitReport,
    FitResult,
    GaussianParams,
    TemplateBank,
    calibrate_scale,
    discretized_gaussian,
    fit_ddd,
    fit_gaussian,
    fit_report,
    rmse,
)
from .metrics import MetricReport, ced, cjs, emd, evaluate, pce, pcs, ped, pjs, pkl
from .simulator import (
    DddParams,
    RaterTrace,
    SimConfig,
    bin_score,
    sample_rater,
    sample_trace,
    simulate_grid,
    simulate_histogram,
    simulate_scores,
)

__version__ = "0.1.0"

__all__ = [
    "bin_score",
    "calibrate_scale",
    "ced",
    "cjs",
    "classify",
    "ClassLabel",
    "DddParams",
    "DegenerateHistogramError",
    "discretized_gaussian",
    "emd",
    "evaluate",
    "fit_ddd",
    "fit_gaussian",
    "fit_report",
    "FitReport",
    "FitResult",
    "from_pmf",
    "GaussianParams",
    "MetricReport",
    "moments",
    "MomentSet",
    "normalize",
    "pce",
    "pcs",
    "ped",
    "pjs",
    "pkl",
    "RaterTrace",
    "rmse",
    "sample_rater",
    "sample_trace",
    "ScoreHistogram",
    "SimConfig",
    "simulate_grid",
    "simulate_histogram",
    "simulate_scores",
    "sk_boundary",
    "sk_point",
    "TemplateBank",
]
