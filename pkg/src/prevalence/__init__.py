"""Bayesian prevalence estimation from imperfect diagnostic tests.

Computes the exact posterior density of disease prevalence from survey counts
and test-calibration counts, marginalizing over the uncertain false-positive
rate and sensitivity (PPP: posterior prevalence probability).  Exposed as a
library, a CLI (``prevalence``), and a JSON service (``prevalence-service``).
"""

from .errors import (
    ComputationError,
    DegenerateTestError,
    RejectionBudgetError,
    SupportOverflowError,
    VanishingMassError,
)
from .numerics import (
    RngState,
    ShapePair,
    beta_log_pdf,
    log_complete_beta,
    log_inc_beta_diff,
    log_mean_exp,
    regularized_inc_beta,
    sample_beta,
    stable_inc_beta_diff,
)
from .inference import (
    CalibrationCounts,
    CountEstimate,
    DeltaResult,
    McConfig,
    McSample,
    McSamples,
    PosteriorGrid,
    PosteriorSummary,
    PriorSet,
    SurveyCounts,
    TestCharacteristics,
    calibration_posterior,
    delta_baseline,
    density_grid_from_samples,
    draw_uv_samples,
    normalize,
    positive_rate,
    posterior_known_grid,
    ppp_posterior,
    quadrature_posterior,
    reweight,
    summarize,
    to_counts,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ComputationError",
    "DegenerateTestError",
    "RejectionBudgetError",
    "SupportOverflowError",
    "VanishingMassError",
    "RngState",
    "ShapePair",
    "beta_log_pdf",
    "log_complete_beta",
    "log_inc_beta_diff",
    "log_mean_exp",
    "regularized_inc_beta",
    "sample_beta",
    "stable_inc_beta_diff",
    "CalibrationCounts",
    "CountEstimate",
    "DeltaResult",
    "McConfig",
    "McSample",
    "McSamples",
    "PosteriorGrid",
    "PosteriorSummary",
    "PriorSet",
    "SurveyCounts",
    "TestCharacteristics",
    "calibration_posterior",
    "delta_baseline",
    "density_grid_from_samples",
    "draw_uv_samples",
    "normalize",
    "positive_rate",
    "posterior_known_grid",
    "ppp_posterior",
    "quadrature_posterior",
    "reweight",
    "summarize",
    "to_counts",
]
