"""End-to-end estimation pipeline shared by the CLI and the JSON service.

Both front ends build an ``EstimateSpec``, call ``run_estimate``, and format
the identical ``EstimateResult``; equal inputs (including the seed) therefore
produce equal numbers regardless of the entry point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .inference import (
    CalibrationCounts,
    CountEstimate,
    DeltaResult,
    McConfig,
    McSamples,
    PosteriorGrid,
    PosteriorSummary,
    PriorSet,
    SurveyCounts,
    calibration_posterior,
    delta_baseline,
    density_grid_from_samples,
    draw_uv_samples,
    quadrature_posterior,
    reweight,
    summarize,
    to_counts,
)
from .numerics import RngState


@dataclass(frozen=True)
class EstimateSpec:
    """One complete estimation request."""

    survey: SurveyCounts
    calibration: CalibrationCounts
    priors: PriorSet
    mc: McConfig
    level: float = 0.95
    reweight_factor: float | None = None
    population: int | None = None
    use_quadrature: bool = False
    quad_points: int = 200

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level!r}")
        if self.reweight_factor is not None and self.reweight_factor <= 0.0:
            raise ValueError(f"reweight factor must be positive, got {self.reweight_factor!r}")
        if self.population is not None and self.population <= 0:
            raise ValueError(f"population must be positive, got {self.population!r}")


@dataclass(frozen=True)
class EstimateResult:
    """Everything the front ends report for one scenario."""

    grid: PosteriorGrid
    summary: PosteriorSummary
    delta: DeltaResult
    counts: CountEstimate | None
    rejection_rate: float
    runtime_ms: float
    seed: int


def run_estimate(spec: EstimateSpec) -> EstimateResult:
    """Compute the posterior grid, optional reweighting, summary, baseline, counts."""
    start = time.perf_counter()
    rejection_rate = 0.0
    if spec.use_quadrature:
        grid = quadrature_posterior(
            spec.survey,
            spec.calibration,
            spec.priors,
            grid_m=spec.mc.grid_m,
            quad_points=spec.quad_points,
        )
    else:
        post_u, post_v = calibration_posterior(spec.calibration, spec.priors)
        samples: McSamples = draw_uv_samples(
            RngState(spec.mc.seed), post_u, post_v, spec.survey, spec.mc
        )
        rejection_rate = samples.rejection_rate
        grid = density_grid_from_samples(samples, spec.survey, spec.mc.grid_m)
    if spec.reweight_factor is not None:
        grid = reweight(grid, spec.reweight_factor)
    summary = summarize(grid, level=spec.level)
    delta = delta_baseline(spec.survey, spec.calibration, level=spec.level)
    counts = to_counts(summary, spec.population) if spec.population is not None else None
    runtime_ms = (time.perf_counter() - start) * 1000.0
    return EstimateResult(
        grid=grid,
        summary=summary,
        delta=delta,
        counts=counts,
        rejection_rate=rejection_rate,
        runtime_ms=runtime_ms,
        seed=spec.mc.seed,
    )
