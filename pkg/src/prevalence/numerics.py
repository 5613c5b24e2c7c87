"""Special functions, sampling, and log-space primitives.

Everything downstream (posterior grids, Monte Carlo weights, the quadrature
oracle) reduces to three numerical problems solved here:

* evaluating the regularized incomplete beta function I_x(a, b) accurately
  for shapes into the 1e5 range (continued fraction with the standard
  symmetry split at x = (a+1)/(a+b+2));
* differencing incomplete beta values without catastrophic cancellation,
  including the flip B(v;a,b) - B(u;a,b) = B(1-u;b,a) - B(1-v;b,a) that keeps
  both operands away from 1, plus a direct log-space quadrature fallback for
  the rare cases differencing cannot save;
* accumulating products of enormous and tiny factors in log space.

Scalar kernels are JIT-compiled; the public functions validate inputs and
dispatch.  All functions are pure except ``sample_beta``, which advances the
caller's ``RngState``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, vectorize, float64
from numpy.polynomial.legendre import leggauss

from .errors import VanishingMassError

__all__ = [
    "ShapePair",
    "RngState",
    "log_complete_beta",
    "regularized_inc_beta",
    "stable_inc_beta_diff",
    "log_inc_beta_diff",
    "beta_log_pdf",
    "sample_beta",
    "log_mean_exp",
]

_HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)

# 16-point Gauss-Legendre rule used by the quadrature fallback.
_GL_NODES, _GL_WEIGHTS = leggauss(16)


@dataclass(frozen=True)
class ShapePair:
    """Shape parameters (a, b) of a beta distribution; both must be positive and finite."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and a > 0.0):
            raise ValueError(f"shape a must be finite and positive, got {self.a!r}")
        if not (math.isfinite(b) and b > 0.0):
            raise ValueError(f"shape b must be finite and positive, got {self.b!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


class RngState:
    """Seed-deterministic random generator state.

    The same seed always reproduces the same sample stream within this
    implementation (a PCG64 generator).  A state must be owned by a single
    caller at a time; parallel code needs independent, distinctly seeded
    states.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
        self.seed = seed
        self.generator = np.random.default_rng(seed)

    def __repr__(self):
        return f"RngState(seed={self.seed})"


# ---------------------------------------------------------------------------
# scalar kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _stirling_correction(z):
    # lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2]; asymptotic series, z >= 8
    zi = 1.0 / z
    z2 = zi * zi
    return zi * (
        1.0 / 12.0
        + z2
        * (
            -1.0 / 360.0
            + z2
            * (
                1.0 / 1260.0
                + z2
                * (
                    -1.0 / 1680.0
                    + z2 * (1.0 / 1188.0 + z2 * (-691.0 / 360360.0 + z2 * (1.0 / 156.0)))
                )
            )
        )
    )


@njit(cache=True)
def _log_beta(a, b):
    # ln B(a, b).  The naive lgamma(a) + lgamma(b) - lgamma(a+b) loses up to
    # six digits for large shapes (three huge terms cancelling); regrouping via
    # Stirling keeps every term on the scale of the result.
    if a > b:
        a, b = b, a
    if b < 8.0:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    s = a + b
    if a < 8.0:
        return (
            math.lgamma(a)
            + (b - 0.5) * math.log1p(-a / s)
            - a * math.log(s)
            + a
            + _stirling_correction(b)
            - _stirling_correction(s)
        )
    return (
        _HALF_LN_2PI
        - 0.5 * math.log(s)
        + (a - 0.5) * math.log(a / s)
        + (b - 0.5) * math.log(b / s)
        + _stirling_correction(a)
        + _stirling_correction(b)
        - _stirling_correction(s)
    )


@njit(cache=True)
def _log_front(a, b, x):
    # a ln x + b ln(1-x) - ln B(a, b), regrouped against cancellation: each of
    # the raw terms can reach 1e5 in magnitude while the result is O(1).
    if a < 8.0 or b < 8.0:
        return a * math.log(x) + b * math.log1p(-x) - _log_beta(a, b)
    s = a + b
    ah = a / s
    bh = b / s
    ra = (x - ah) / ah
    la = math.log1p(ra) if abs(ra) < 0.5 else math.log(x / ah)
    rb = ((1.0 - x) - bh) / bh
    lb = math.log1p(rb) if abs(rb) < 0.5 else math.log((1.0 - x) / bh)
    return (
        a * la
        + b * lb
        + 0.5 * math.log(ah)
        + 0.5 * math.log(bh)
        + 0.5 * math.log(s)
        - _HALF_LN_2PI
        - _stirling_correction(a)
        - _stirling_correction(b)
        + _stirling_correction(s)
    )


@njit(cache=True)
def _betacf(a, b, x):
    # Modified Lentz evaluation of the continued fraction for I_x(a, b);
    # requires x below the symmetry split.  Worst observed convergence for
    # shapes <= 1e5 is ~250 iterations.
    TINY = 1e-300
    EPS = 1e-16
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, 4000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            break
    return h


@njit(cache=True)
def _reg_inc_beta(a, b, x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_front(a, b, x)) * _betacf(a, b, x) / a
    return 1.0 - math.exp(_log_front(b, a, 1.0 - x)) * _betacf(b, a, 1.0 - x) / b


_REG_INC_BETA_UFUNC = vectorize([float64(float64, float64, float64)], cache=True)(_reg_inc_beta)


@njit(cache=True)
def _log_series_from_zero(x, a, b):
    # log of int_0^x t^(a-1) (1-t)^(b-1) dt via the hypergeometric power
    # series x^a/a * 2F1(a, 1-b; a+1; x); converges for x < 1, quickly for the
    # deep lower tail where this is needed.
    term = 1.0
    total = 1.0
    for m in range(1, 200000):
        term *= (m - b) * (a + m - 1.0) / ((a + m) * m) * x
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return a * math.log(x) - math.log(a) + math.log(total)


@njit(cache=True)
def _log_integrand_max(u, v, a, b):
    # argmax over [u, v] of g(t) = (a-1) ln t + (b-1) ln(1-t)
    am1 = a - 1.0
    bm1 = b - 1.0
    if am1 >= 0.0 and bm1 >= 0.0:
        if a + b > 2.0:
            m = am1 / (a + b - 2.0)
            return min(max(m, u), v)
        return 0.5 * (u + v)  # a = b = 1: flat integrand
    if am1 < 0.0 and bm1 >= 0.0:
        return u
    if bm1 < 0.0 and am1 >= 0.0:
        return v
    # both shapes < 1: interior minimum, maximum at an endpoint
    gu = am1 * math.log(u) + bm1 * math.log1p(-u) if u > 0.0 else np.inf
    gv = am1 * math.log(v) + bm1 * math.log1p(-v) if v < 1.0 else np.inf
    return u if gu >= gv else v


@njit(cache=True)
def _log_diff_quad(u, v, a, b, gl_nodes, gl_weights):
    # log of int_u^v t^(a-1) (1-t)^(b-1) dt by composite Gauss-Legendre in log
    # space.  Panels shrink geometrically toward the integrand's maximum so the
    # rule resolves boundary layers of any scale; contributions are combined
    # with a streaming log-sum-exp.
    am1 = a - 1.0
    bm1 = b - 1.0
    width = v - u
    tstar = _log_integrand_max(u, v, a, b)
    tiny = 1e-308
    scale = width
    if u < tstar < v:
        curv = abs(am1) / max(tstar * tstar, tiny) + abs(bm1) / max((1.0 - tstar) ** 2, tiny)
        if curv > 0.0:
            scale = min(scale, 1.0 / math.sqrt(curv))
    for e in (u, v):
        if 0.0 < e < 1.0:
            slope = abs(am1 / e - bm1 / (1.0 - e))
            if slope > 0.0:
                scale = min(scale, 1.0 / slope)
    depth = int(math.ceil(math.log2(max(width / max(scale, 1e-300), 1.0)))) + 6
    if depth < 6:
        depth = 6
    if depth > 100:
        depth = 100
    mx = -np.inf
    acc = 0.0
    for side in range(2):
        lo_side = u if side == 0 else tstar
        hi_side = tstar if side == 0 else v
        w_side = hi_side - lo_side
        if w_side <= 0.0:
            continue
        prev = 0.0
        for i in range(depth, -1, -1):
            off = w_side * 2.0 ** (-i)
            if off <= prev:
                continue
            if side == 0:
                plo = tstar - off
                phi = tstar - prev
            else:
                plo = tstar + prev
                phi = tstar + off
            half = 0.5 * (phi - plo)
            mid = 0.5 * (phi + plo)
            for q in range(gl_nodes.size):
                t = mid + half * gl_nodes[q]
                if t <= 0.0 or t >= 1.0:
                    continue
                g = am1 * math.log(t) + bm1 * math.log1p(-t) + math.log(half * gl_weights[q])
                if g > mx:
                    acc = acc * math.exp(mx - g) + 1.0
                    mx = g
                else:
                    acc += math.exp(g - mx)
            prev = off
    if mx == -np.inf:
        return -np.inf
    return mx + math.log(acc)


@njit(cache=True)
def _log_inc_beta_diff_scalar(u, v, a, b, gl_nodes, gl_weights):
    # log of the unregularized difference B(v;a,b) - B(u;a,b).  Difference the
    # regularized values on whichever side of the symmetry flip keeps both
    # operands small; when the operands agree to better than a factor 0.1 the
    # subtraction would amplify their last-digit noise, so integrate directly.
    iu = _reg_inc_beta(a, b, u)
    if iu > 0.5:
        hi = _reg_inc_beta(b, a, 1.0 - u)
        lo = _reg_inc_beta(b, a, 1.0 - v)
    else:
        hi = _reg_inc_beta(a, b, v)
        lo = iu
    diff = hi - lo
    if diff > 0.1 * hi and diff > 1e-300:
        return math.log(diff) + _log_beta(a, b)
    if u == 0.0:
        return _log_series_from_zero(v, a, b)
    if v == 1.0:
        return _log_series_from_zero(1.0 - u, b, a)
    return _log_diff_quad(u, v, a, b, gl_nodes, gl_weights)


@njit(cache=True)
def _log_inc_beta_diff_array(u, v, a, b, gl_nodes, gl_weights):
    out = np.empty(u.size)
    for i in range(u.size):
        out[i] = _log_inc_beta_diff_scalar(u[i], v[i], a, b, gl_nodes, gl_weights)
    return out


@njit(cache=True)
def _beta_log_pdf_scalar(x, a, b):
    if x <= 0.0:
        if x < 0.0:
            return np.nan
        if a > 1.0:
            return -np.inf
        if a == 1.0:
            return -_log_beta(a, b)
        return np.inf
    if x >= 1.0:
        if x > 1.0:
            return np.nan
        if b > 1.0:
            return -np.inf
        if b == 1.0:
            return -_log_beta(a, b)
        return np.inf
    return (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - _log_beta(a, b)


# ---------------------------------------------------------------------------
# public interface
# ---------------------------------------------------------------------------


def log_complete_beta(shape: ShapePair) -> float:
    """Natural log of the complete beta function B(a, b)."""
    return float(_log_beta(shape.a, shape.b))


def regularized_inc_beta(x: float, shape: ShapePair) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Monotone nondecreasing in x with I_0 = 0 and I_1 = 1.  The unregularized
    B(x; a, b) is ``regularized_inc_beta(x, p) * exp(log_complete_beta(p))``.

    Raises ValueError for x outside [0, 1].
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return float(_reg_inc_beta(shape.a, shape.b, x))


def log_inc_beta_diff(u, v, shape: ShapePair):
    """Log of the unregularized difference B(v; a, b) - B(u; a, b), vectorized.

    Accepts scalars or arrays for u and v (broadcast together, elementwise
    u < v required).  This is the log-space workhorse behind
    ``stable_inc_beta_diff``; it never underflows, returning -inf only when
    the mass is zero to beyond double-exponent range.
    """
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    v_arr = np.atleast_1d(np.asarray(v, dtype=float))
    u_arr, v_arr = np.broadcast_arrays(u_arr, v_arr)
    if np.any(u_arr < 0.0) or np.any(v_arr > 1.0):
        raise ValueError("u and v must lie in [0, 1]")
    if np.any(u_arr >= v_arr):
        raise ValueError("u < v is required elementwise")
    out = _log_inc_beta_diff_array(
        np.ascontiguousarray(u_arr.ravel()),
        np.ascontiguousarray(v_arr.ravel()),
        shape.a,
        shape.b,
        _GL_NODES,
        _GL_WEIGHTS,
    ).reshape(u_arr.shape)
    if np.isscalar(u) and np.isscalar(v):
        return float(out[()] if out.shape == () else out[0])
    return out


def stable_inc_beta_diff(u: float, v: float, shape: ShapePair) -> float:
    """Unregularized B(v; a, b) - B(u; a, b), strictly positive.

    Uses the symmetry flip B(v;a,b) - B(u;a,b) = B(1-u;b,a) - B(1-v;b,a) when
    both regularized values sit above the distribution bulk, which keeps the
    subtraction away from operands indistinguishable from 1.

    Raises ValueError unless 0 <= u < v <= 1, and VanishingMassError when the
    difference underflows double precision entirely.
    """
    u, v = float(u), float(v)
    if not 0.0 <= u < v <= 1.0:
        raise ValueError(f"need 0 <= u < v <= 1, got u={u!r}, v={v!r}")
    log_diff = float(
        _log_inc_beta_diff_scalar(u, v, shape.a, shape.b, _GL_NODES, _GL_WEIGHTS)
    )
    result = math.exp(log_diff) if log_diff > -math.inf else 0.0
    if result == 0.0:
        raise VanishingMassError(
            f"incomplete beta mass over [{u}, {v}] underflows double precision "
            f"(log value {log_diff:.6g})"
        )
    return result


def beta_log_pdf(x: float, shape: ShapePair) -> float:
    """Log density of Beta(a, b) at x; -inf where the density vanishes at 0 or 1.

    Raises ValueError for x outside [0, 1].
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return float(_beta_log_pdf_scalar(x, shape.a, shape.b))


def sample_beta(rng: RngState, shape: ShapePair) -> float:
    """One Beta(a, b) draw; advances the generator state."""
    return float(rng.generator.beta(shape.a, shape.b))


def log_mean_exp(values, axis=None):
    """log of the mean of exp(values), max-shifted for stability.

    Handles -inf entries; an all--inf input returns -inf.  Exact when all
    values are equal.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("log_mean_exp requires a nonempty input")
    if np.any(np.isnan(arr)) or np.any(arr == np.inf):
        raise ValueError("log_mean_exp requires values in [-inf, inf)")
    mx = np.max(arr, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.mean(np.exp(arr - shift), axis=axis, keepdims=True)) + shift
    out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    if out.ndim == 0:
        return float(out)
    return out
