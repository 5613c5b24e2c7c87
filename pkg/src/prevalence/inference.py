"""Posterior inference for disease prevalence measured with an imperfect test.

A survey observes ``k`` positive results among ``n`` subjects.  The test has
false-positive rate ``u`` (one minus specificity) and sensitivity ``v``, so a
subject tests positive with probability ``p = u + theta * (v - u)`` at
prevalence ``theta``.  With known (u, v) and a uniform prior, the prevalence
posterior is a truncated, rescaled beta density; with (u, v) themselves
estimated from calibration counts, the posterior marginalizes the conditional
density against independent beta posteriors on u and v, truncated to u < v.

Two evaluators of that marginal are provided: ``ppp_posterior``, the Monte
Carlo estimator that draws (u_i, v_i) pairs once and reuses them for every
grid point, and ``quadrature_posterior``, a deterministic tensor quadrature
used as its independent cross-check.  Summaries, population reweighting,
infected-count conversion, and the Rogan-Gladen delta-method baseline round
out the module.

All outputs are density grids over theta_j = j/M normalized so the grid mean
is exactly 1 (rectangle-rule convention, endpoints fully weighted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import betaincinv
from scipy.stats import norm
from numpy.polynomial.legendre import leggauss

from .errors import (
    DegenerateTestError,
    RejectionBudgetError,
    SupportOverflowError,
    VanishingMassError,
)
from .numerics import (
    RngState,
    ShapePair,
    _GL_NODES,
    _GL_WEIGHTS,
    _log_beta,
    _log_inc_beta_diff_array,
    _REG_INC_BETA_UFUNC,
)

__all__ = [
    "SurveyCounts",
    "CalibrationCounts",
    "PriorSet",
    "TestCharacteristics",
    "McConfig",
    "McSample",
    "McSamples",
    "PosteriorGrid",
    "PosteriorSummary",
    "DeltaResult",
    "CountEstimate",
    "positive_rate",
    "posterior_known_grid",
    "calibration_posterior",
    "draw_uv_samples",
    "density_grid_from_samples",
    "ppp_posterior",
    "quadrature_posterior",
    "normalize",
    "summarize",
    "reweight",
    "to_counts",
    "delta_baseline",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurveyCounts:
    """k positive tests out of n subjects tested in the prevalence survey."""

    k: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"survey.n must be positive, got {self.n}")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"survey counts must satisfy 0 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def density_shape(self) -> ShapePair:
        """Beta(k+1, n-k+1), the density evaluated along u + theta (v - u)."""
        return ShapePair(self.k + 1.0, self.n - self.k + 1.0)


@dataclass(frozen=True)
class CalibrationCounts:
    """Test-validation counts: k_u false positives among n_u known negatives,
    k_v true positives among n_v known positives."""

    k_u: int
    n_u: int
    k_v: int
    n_v: int

    def __post_init__(self):
        if self.n_u < 1:
            raise ValueError(f"calibration.n_u must be positive, got {self.n_u}")
        if self.n_v < 1:
            raise ValueError(f"calibration.n_v must be positive, got {self.n_v}")
        if not 0 <= self.k_u <= self.n_u:
            raise ValueError(
                f"calibration counts must satisfy 0 <= k_u <= n_u, got k_u={self.k_u}, n_u={self.n_u}"
            )
        if not 0 <= self.k_v <= self.n_v:
            raise ValueError(
                f"calibration counts must satisfy 0 <= k_v <= n_v, got k_v={self.k_v}, n_v={self.n_v}"
            )


@dataclass(frozen=True)
class PriorSet:
    """Beta priors on the false-positive rate u and sensitivity v."""

    prior_u: ShapePair = field(default_factory=lambda: ShapePair(1.0, 1.0))
    prior_v: ShapePair = field(default_factory=lambda: ShapePair(1.0, 1.0))

    @classmethod
    def uniform(cls) -> "PriorSet":
        return cls(ShapePair(1.0, 1.0), ShapePair(1.0, 1.0))


@dataclass(frozen=True)
class TestCharacteristics:
    """Known test operating point: false-positive rate u < sensitivity v."""

    u: float
    v: float

    def __post_init__(self):
        if not (0.0 <= self.u < self.v <= 1.0):
            raise ValueError(
                f"test characteristics must satisfy 0 <= u < v <= 1, got u={self.u!r}, v={self.v!r}"
            )


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings: N samples, M+1 grid points, seed, rejection budget."""

    n_samples: int = 10_000
    grid_m: int = 10_000
    seed: int = 0
    max_rejection_iters: int = 1_000_000

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.grid_m < 1:
            raise ValueError(f"grid_m must be >= 1, got {self.grid_m}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.max_rejection_iters < 1:
            raise ValueError(f"max_rejection_iters must be >= 1, got {self.max_rejection_iters}")


@dataclass(frozen=True)
class McSample:
    """One accepted (u, v) draw with its cached log weight
    log d = log(v - u) - log(B(v; k+1, n-k+1) - B(u; k+1, n-k+1))."""

    u: float
    v: float
    log_d: float


class McSamples:
    """Accepted Monte Carlo draws, stored as arrays for the grid evaluation.

    Iterating yields ``McSample`` views; ``rejections`` counts the discarded
    (u, v) pairs that violated u < v.
    """

    def __init__(self, u: np.ndarray, v: np.ndarray, log_d: np.ndarray, rejections: int):
        self.u = u
        self.v = v
        self.log_d = log_d
        self.rejections = int(rejections)

    def __len__(self):
        return self.u.size

    def __iter__(self):
        for i in range(self.u.size):
            yield McSample(float(self.u[i]), float(self.v[i]), float(self.log_d[i]))

    @property
    def rejection_rate(self) -> float:
        total = self.u.size + self.rejections
        return self.rejections / total if total else 0.0


@dataclass(frozen=True)
class PosteriorGrid:
    """Density values p_j at theta_j = j/M, normalized to mean(p) = 1."""

    grid_m: int
    densities: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.densities, dtype=float)
        if d.shape != (self.grid_m + 1,):
            raise ValueError(
                f"densities must have length grid_m + 1 = {self.grid_m + 1}, got shape {d.shape}"
            )
        if np.any(d < 0.0) or not np.all(np.isfinite(d)):
            raise ValueError("densities must be finite and nonnegative")
        object.__setattr__(self, "densities", d)

    @property
    def thetas(self) -> np.ndarray:
        return np.arange(self.grid_m + 1) / self.grid_m


@dataclass(frozen=True)
class PosteriorSummary:
    """Equal-tailed credible interval plus mean and median of a density grid."""

    mean: float
    median: float
    ci_low: float
    ci_high: float
    level: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level!r}")
        if not self.ci_low <= self.median <= self.ci_high:
            raise ValueError(
                f"summary ordering violated: ci_low={self.ci_low!r}, "
                f"median={self.median!r}, ci_high={self.ci_high!r}"
            )


@dataclass(frozen=True)
class DeltaResult:
    """Rogan-Gladen point estimate with a delta-method normal interval."""

    point: float
    se: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class CountEstimate:
    """Infected-count readout: values rounded to the nearest thousand plus raw."""

    low: int
    median: int
    high: int
    raw_low: float
    raw_median: float
    raw_high: float


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _mixture_log_density(thetas, u, span, log_w, k, n_minus_k, log_beta_norm):
    """For each theta_j, log sum_i exp(log_w_i + log Beta_pdf(u_i + theta_j * span_i)).

    Each grid point consumes the identical sample set and sums over i in index
    order, so results are independent of any outer parallelism or chunking.
    """
    m1 = thetas.size
    n = u.size
    out = np.empty(m1)
    row = np.empty(n)
    for j in range(m1):
        th = thetas[j]
        mx = -np.inf
        for i in range(n):
            x = u[i] + th * span[i]
            if x <= 0.0:
                val = -np.inf if k > 0.0 else n_minus_k * math.log1p(-x) + log_w[i]
            elif x >= 1.0:
                val = -np.inf if n_minus_k > 0.0 else k * math.log(x) + log_w[i]
            else:
                val = k * math.log(x) + n_minus_k * math.log1p(-x) + log_w[i]
            row[i] = val
            if val > mx:
                mx = val
        if mx == -np.inf:
            out[j] = -np.inf
            continue
        acc = 0.0
        for i in range(n):
            acc += math.exp(row[i] - mx)
        out[j] = mx + math.log(acc) - log_beta_norm
    return out


def _exp_normalize(log_densities: np.ndarray, grid_m: int) -> PosteriorGrid:
    mx = float(np.max(log_densities))
    if mx == -np.inf:
        raise VanishingMassError("all grid densities underflowed to zero")
    return normalize(np.exp(log_densities - mx), grid_m=grid_m)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def positive_rate(theta: float, chars: TestCharacteristics) -> float:
    """Probability of a positive test at prevalence theta: u + theta (v - u)."""
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    return chars.u + theta * (chars.v - chars.u)


def posterior_known_grid(
    survey: SurveyCounts, chars: TestCharacteristics, grid_m: int
) -> PosteriorGrid:
    """Prevalence posterior for known test characteristics, on a (M+1)-point grid.

    Densities are proportional to [u + theta (v-u)]^k [1 - u - theta (v-u)]^(n-k)
    and grid-normalized to mean 1.
    """
    grid_m = _validate_grid_m(grid_m)
    thetas = np.arange(grid_m + 1) / grid_m
    x = chars.u + thetas * (chars.v - chars.u)
    k = float(survey.k)
    nk = float(survey.n - survey.k)
    log_p = np.full(grid_m + 1, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        interior = (x > 0.0) & (x < 1.0)
        log_p[interior] = k * np.log(x[interior]) + nk * np.log1p(-x[interior])
        if k == 0.0:
            log_p[x <= 0.0] = nk * np.log1p(-x[x <= 0.0])
        if nk == 0.0:
            log_p[x >= 1.0] = k * np.log(x[x >= 1.0])
    return _exp_normalize(log_p, grid_m)


def calibration_posterior(
    cal: CalibrationCounts, priors: PriorSet
) -> tuple[ShapePair, ShapePair]:
    """Beta posteriors on (u, v) from calibration counts and the given priors."""
    post_u = ShapePair(cal.k_u + priors.prior_u.a, cal.n_u - cal.k_u + priors.prior_u.b)
    post_v = ShapePair(cal.k_v + priors.prior_v.a, cal.n_v - cal.k_v + priors.prior_v.b)
    return post_u, post_v


def draw_uv_samples(
    rng: RngState,
    post_u: ShapePair,
    post_v: ShapePair,
    survey: SurveyCounts,
    config: McConfig,
) -> McSamples:
    """Draw exactly N pairs (u_i, v_i) with u_i < v_i and cache their log weights.

    Rejected pairs are redrawn jointly (both coordinates).  A sample that
    stays rejected for ``config.max_rejection_iters`` consecutive rounds
    raises RejectionBudgetError: the calibration posteriors put essentially no
    mass on u < v.
    """
    n = config.n_samples
    gen = rng.generator
    u = gen.beta(post_u.a, post_u.b, n)
    v = gen.beta(post_v.a, post_v.b, n)
    rejections = 0
    rounds = 0
    bad = u >= v
    n_bad = int(bad.sum())
    while n_bad:
        rounds += 1
        if rounds > config.max_rejection_iters:
            raise RejectionBudgetError(
                f"{n_bad} sample(s) still violate u < v after "
                f"{config.max_rejection_iters} consecutive redraws"
            )
        rejections += n_bad
        u[bad] = gen.beta(post_u.a, post_u.b, n_bad)
        v[bad] = gen.beta(post_v.a, post_v.b, n_bad)
        bad = u >= v
        n_bad = int(bad.sum())
    shape = survey.density_shape
    log_diff = _log_inc_beta_diff_array(u, v, shape.a, shape.b, _GL_NODES, _GL_WEIGHTS)
    with np.errstate(divide="ignore"):
        log_d = np.log(v - u) - log_diff
    return McSamples(u, v, log_d, rejections)


def density_grid_from_samples(
    samples: McSamples, survey: SurveyCounts, grid_m: int
) -> PosteriorGrid:
    """Monte Carlo density grid from cached samples: per theta_j, the log-space
    average over i of d_i * Beta_pdf(u_i + theta_j (v_i - u_i); k+1, n-k+1)."""
    grid_m = _validate_grid_m(grid_m)
    thetas = np.arange(grid_m + 1) / grid_m
    shape = survey.density_shape
    # folding the 1/N of the average and the beta normalizer into the weights
    log_w = samples.log_d - math.log(len(samples))
    log_p = _mixture_log_density(
        thetas,
        samples.u,
        samples.v - samples.u,
        log_w,
        float(survey.k),
        float(survey.n - survey.k),
        float(_log_beta(shape.a, shape.b)),
    )
    return _exp_normalize(log_p, grid_m)


def ppp_posterior(
    survey: SurveyCounts,
    cal: CalibrationCounts,
    priors: PriorSet,
    config: McConfig,
) -> PosteriorGrid:
    """Posterior prevalence probability density via Monte Carlo marginalization.

    Samples (u_i, v_i) from the calibration posteriors (truncated to u < v) are
    drawn once and reused across the whole theta grid; the per-point average
    runs in log space.  Deterministic for a fixed config.
    """
    post_u, post_v = calibration_posterior(cal, priors)
    samples = draw_uv_samples(RngState(config.seed), post_u, post_v, survey, config)
    return density_grid_from_samples(samples, survey, config.grid_m)


def quadrature_posterior(
    survey: SurveyCounts,
    cal: CalibrationCounts,
    priors: PriorSet,
    grid_m: int,
    quad_points: int = 200,
) -> PosteriorGrid:
    """Deterministic evaluation of the marginal posterior by 2-D quadrature.

    Integrates the same integrand as ``ppp_posterior`` over {0 <= u < v <= 1}
    with a tensor Gauss-Legendre rule in probability coordinates: the outer
    variable is the v-posterior quantile, the inner variable scans the
    u-posterior CDF truncated at F_u(v), so the beta factors are absorbed
    exactly and concentrated calibration posteriors cost no resolution.
    Serves as the independent oracle for the Monte Carlo estimator.
    """
    grid_m = _validate_grid_m(grid_m)
    if quad_points < 200:
        raise ValueError(f"quad_points must be >= 200 per axis, got {quad_points}")
    post_u, post_v = calibration_posterior(cal, priors)
    nodes, weights = leggauss(quad_points)
    x01 = 0.5 * (nodes + 1.0)
    w01 = 0.5 * weights

    v = betaincinv(post_v.a, post_v.b, x01)
    # inner integral over u runs on [0, F_u(v)] per outer node
    s_max = _REG_INC_BETA_UFUNC(post_u.a, post_u.b, v)
    s = s_max[:, None] * x01[None, :]
    u = betaincinv(post_u.a, post_u.b, s)
    v2 = np.broadcast_to(v[:, None], u.shape)

    ok = u < v2
    if not np.any(ok):
        raise VanishingMassError("the region u < v carries no quadrature mass")
    u_flat = np.ascontiguousarray(u[ok])
    v_flat = np.ascontiguousarray(v2[ok])
    shape = survey.density_shape
    log_diff = _log_inc_beta_diff_array(
        u_flat, v_flat, shape.a, shape.b, _GL_NODES, _GL_WEIGHTS
    )
    weight = (w01[:, None] * s_max[:, None] * w01[None, :])[ok]
    with np.errstate(divide="ignore"):
        log_w = np.log(weight) + np.log(v_flat - u_flat) - log_diff

    thetas = np.arange(grid_m + 1) / grid_m
    log_p = _mixture_log_density(
        thetas,
        u_flat,
        v_flat - u_flat,
        log_w,
        float(survey.k),
        float(survey.n - survey.k),
        float(_log_beta(shape.a, shape.b)),
    )
    return _exp_normalize(log_p, grid_m)


def normalize(densities, grid_m: int | None = None) -> PosteriorGrid:
    """Rescale density values so their mean over the M+1 grid points is 1."""
    d = np.asarray(densities, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("densities must be a 1-D sequence with at least two entries")
    if np.any(d < 0.0) or not np.all(np.isfinite(d)):
        raise ValueError("densities must be finite and nonnegative")
    mean = float(d.mean())
    if mean <= 0.0:
        raise VanishingMassError("cannot normalize an all-zero density grid")
    if grid_m is None:
        grid_m = d.size - 1
    return PosteriorGrid(grid_m=grid_m, densities=d / mean)


def summarize(
    grid: PosteriorGrid, level: float = 0.95, support_scale: float = 1.0
) -> PosteriorSummary:
    """Mean, median, and equal-tailed credible interval from a density grid.

    The cumulative distribution is built by the trapezoid rule over the grid
    and quantiles are linearly interpolated; ``support_scale`` rescales the
    theta axis (1 for raw prevalence).
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    if support_scale <= 0.0:
        raise ValueError(f"support_scale must be positive, got {support_scale!r}")
    p = grid.densities
    m = grid.grid_m
    thetas = grid.thetas
    cdf = np.concatenate([[0.0], np.cumsum((p[:-1] + p[1:]) / (2.0 * m))])
    total = float(cdf[-1])
    if total <= 0.0:
        raise VanishingMassError("density grid carries no mass")

    def quantile(q: float) -> float:
        target = q * total
        j = int(np.searchsorted(cdf, target, side="left"))
        if j <= 0:
            return 0.0
        if j > m:
            return 1.0
        c0, c1 = cdf[j - 1], cdf[j]
        if c1 == c0:
            return float(thetas[j])
        frac = (target - c0) / (c1 - c0)
        return float(thetas[j - 1] + frac * (thetas[j] - thetas[j - 1]))

    mean = float(np.trapezoid(thetas * p, thetas) / total)
    alpha = (1.0 - level) / 2.0
    return PosteriorSummary(
        mean=mean * support_scale,
        median=quantile(0.5) * support_scale,
        ci_low=quantile(alpha) * support_scale,
        ci_high=quantile(1.0 - alpha) * support_scale,
        level=level,
    )


def reweight(grid: PosteriorGrid, factor: float) -> PosteriorGrid:
    """Change of variables theta' = factor * theta, resampled onto the same grid.

    The output density is q(theta') = p(theta'/factor)/factor interpolated
    linearly at the original grid points and re-normalized; factor 1 is the
    identity.  Raises SupportOverflowError when more than 1e-6 of the input
    mass would map above theta' = 1.
    """
    factor = float(factor)
    if factor <= 0.0:
        raise ValueError(f"reweight factor must be positive, got {factor!r}")
    if factor == 1.0:
        return grid
    p = grid.densities
    thetas = grid.thetas
    cut = 1.0 / factor
    if cut < 1.0:
        inside = float(np.trapezoid(np.where(thetas <= cut, p, 0.0), thetas))
        total = float(np.trapezoid(p, thetas))
        overflow = 1.0 - inside / total if total > 0.0 else 1.0
        if overflow > 1e-6:
            raise SupportOverflowError(
                f"{overflow:.3g} of the posterior mass maps above 1 under factor {factor}"
            )
    q = np.interp(thetas / factor, thetas, p) / factor
    return normalize(q, grid_m=grid.grid_m)


def to_counts(summary: PosteriorSummary, population: int) -> CountEstimate:
    """Convert prevalence summary to infected counts for a population size.

    Counts are rounded to the nearest thousand (reporting granularity); the
    raw products are carried alongside.
    """
    population = int(population)
    if population <= 0:
        raise ValueError(f"population must be positive, got {population}")

    def thousands(x: float) -> int:
        return int(math.floor(x / 1000.0 + 0.5)) * 1000

    raw = (
        summary.ci_low * population,
        summary.median * population,
        summary.ci_high * population,
    )
    return CountEstimate(
        low=thousands(raw[0]),
        median=thousands(raw[1]),
        high=thousands(raw[2]),
        raw_low=raw[0],
        raw_median=raw[1],
        raw_high=raw[2],
    )


def delta_baseline(
    survey: SurveyCounts, cal: CalibrationCounts, level: float = 0.95
) -> DeltaResult:
    """Rogan-Gladen point estimate with first-order (delta-method) error bars.

    point = (p_hat - u_hat) / (v_hat - u_hat) with plug-in rates from the raw
    counts; the variance propagates survey and calibration binomial noise.
    The normal interval is unconstrained (it may cross 0 or 1) - that contrast
    with the exact posterior is the point of carrying this baseline.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    p_hat = survey.k / survey.n
    u_hat = cal.k_u / cal.n_u
    v_hat = cal.k_v / cal.n_v
    span = v_hat - u_hat
    if span <= 0.0:
        raise DegenerateTestError(
            f"estimated sensitivity {v_hat:.6g} does not exceed the estimated "
            f"false-positive rate {u_hat:.6g}"
        )
    point = (p_hat - u_hat) / span
    var = (
        p_hat * (1.0 - p_hat) / survey.n
        + (1.0 - point) ** 2 * u_hat * (1.0 - u_hat) / cal.n_u
        + point**2 * v_hat * (1.0 - v_hat) / cal.n_v
    ) / span**2
    se = math.sqrt(max(var, 0.0))
    z = float(norm.ppf(0.5 + level / 2.0))
    return DeltaResult(point=point, se=se, ci_low=point - z * se, ci_high=point + z * se)


def _validate_grid_m(grid_m: int) -> int:
    grid_m = int(grid_m)
    if grid_m < 1:
        raise ValueError(f"grid_m must be >= 1, got {grid_m}")
    return grid_m
