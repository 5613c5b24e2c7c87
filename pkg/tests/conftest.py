"""Shared fixtures: canonical inputs, frozen oracle data, warmed kernels."""

import json
import os
import time

import pytest

from prevalence import (
    CalibrationCounts,
    McConfig,
    PriorSet,
    ShapePair,
    SurveyCounts,
    ppp_posterior,
)

DATA_PATH = os.path.join(os.path.dirname(__file__), "data", "oracle_cases.json")

# the running example: scenario-3 style survey and calibration counts
SC_SURVEY = SurveyCounts(k=50, n=3330)
SC_CAL = CalibrationCounts(k_u=2, n_u=401, k_v=103, n_v=122)
SC_REWEIGHT = 94 / 50
SC_INFORMATIVE_PRIORS = PriorSet(prior_u=ShapePair(1.0, 99.0), prior_v=ShapePair(1.0, 1.0))


@pytest.fixture(scope="session")
def oracle_data():
    with open(DATA_PATH, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT loading once so timed tests measure the algorithm."""
    ppp_posterior(
        SurveyCounts(k=2, n=10),
        CalibrationCounts(k_u=1, n_u=20, k_v=18, n_v=20),
        PriorSet.uniform(),
        McConfig(n_samples=50, grid_m=20, seed=0),
    )


@pytest.fixture(scope="session")
def sc_uniform_raw():
    """Unreweighted uniform-prior posterior on the running example, timed.

    Returns (grid, wall_seconds) for N = M = 10^4, seed 1.
    """
    config = McConfig(n_samples=10_000, grid_m=10_000, seed=1)
    start = time.perf_counter()
    grid = ppp_posterior(SC_SURVEY, SC_CAL, PriorSet.uniform(), config)
    elapsed = time.perf_counter() - start
    return grid, elapsed
