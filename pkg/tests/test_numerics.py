"""Tests for the special-function and sampling primitives.

Expected values tagged as frozen come from tests/oracles.py (extended
precision, quadrature cross-checked); regenerate with `python tests/oracles.py`.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import betainc as sp_betainc
from scipy.stats import beta as beta_dist, kstest

from prevalence import (
    RngState,
    ShapePair,
    VanishingMassError,
    beta_log_pdf,
    log_complete_beta,
    log_inc_beta_diff,
    log_mean_exp,
    regularized_inc_beta,
    sample_beta,
    stable_inc_beta_diff,
)

SC_SHAPE = ShapePair(51.0, 3281.0)  # Beta_p shapes for the running example


def rel_err_from_logs(got_log, want_log):
    return abs(math.expm1(got_log - want_log))


class TestShapePair:
    @pytest.mark.parametrize("a,b", [(0.0, 1.0), (-1.0, 2.0), (1.0, 0.0), (math.nan, 1.0), (1.0, math.inf)])
    def test_rejects_invalid_shapes(self, a, b):
        with pytest.raises(ValueError):
            ShapePair(a, b)

    def test_accepts_and_coerces(self):
        p = ShapePair(2, 3)
        assert (p.a, p.b) == (2.0, 3.0)


class TestLogCompleteBeta:
    def test_uniform_is_one(self):
        assert log_complete_beta(ShapePair(1, 1)) == 0.0

    def test_two_two(self):
        assert log_complete_beta(ShapePair(2, 2)) == pytest.approx(math.log(1 / 6), rel=1e-14)

    def test_integer_cases_match_exact_factorial_ratio(self, oracle_data):
        for case in oracle_data["log_complete_beta_integer_cases"]:
            got = log_complete_beta(ShapePair(case["a"], case["b"]))
            assert got == pytest.approx(case["value"], rel=1e-13), (case["a"], case["b"])

    def test_finite_for_huge_shapes(self):
        val = log_complete_beta(ShapePair(1e7, 1e7))
        assert math.isfinite(val)
        val = log_complete_beta(ShapePair(1e7, 0.5))
        assert math.isfinite(val)

    def test_symmetric(self):
        assert log_complete_beta(ShapePair(3.5, 1200.0)) == log_complete_beta(ShapePair(1200.0, 3.5))


class TestRegularizedIncBeta:
    def test_uniform_identity(self):
        assert regularized_inc_beta(0.3, ShapePair(1, 1)) == pytest.approx(0.3, abs=1e-15)

    def test_symmetric_half(self):
        assert regularized_inc_beta(0.5, ShapePair(2, 2)) == pytest.approx(0.5, abs=1e-15)

    def test_binomial_tail_identity(self):
        # I_x(2, 5) = P(Bin(6, x) >= 2)
        x = 0.3
        expected = 1.0 - 0.7**6 - 6 * 0.3 * 0.7**5
        assert regularized_inc_beta(x, ShapePair(2, 5)) == pytest.approx(expected, abs=1e-14)

    def test_bounds(self):
        assert regularized_inc_beta(0.0, SC_SHAPE) == 0.0
        assert regularized_inc_beta(1.0, SC_SHAPE) == 1.0

    @pytest.mark.parametrize("x", [-0.1, 1.1, math.nan])
    def test_domain_error(self, x):
        with pytest.raises(ValueError):
            regularized_inc_beta(x, ShapePair(2, 2))

    def test_frozen_oracle_suite(self, oracle_data):
        # contract: absolute error <= 1e-12 for shapes up to 1e5
        worst = 0.0
        for case in oracle_data["reg_inc_beta_cases"]:
            got = regularized_inc_beta(case["x"], ShapePair(case["a"], case["b"]))
            worst = max(worst, abs(got - case["value"]))
        assert worst <= 1e-12

    def test_cross_check_scipy(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a = 10 ** rng.uniform(-1, 4)
            b = 10 ** rng.uniform(-1, 4)
            x = rng.uniform(0, 1)
            assert regularized_inc_beta(x, ShapePair(a, b)) == pytest.approx(
                float(sp_betainc(a, b, x)), abs=5e-12
            )

    @given(
        x=st.floats(0.0, 1.0),
        y=st.floats(0.0, 1.0),
        a=st.floats(0.01, 1e5),
        b=st.floats(0.01, 1e5),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_x(self, x, y, a, b):
        lo, hi = min(x, y), max(x, y)
        p = ShapePair(a, b)
        assert regularized_inc_beta(lo, p) <= regularized_inc_beta(hi, p) + 1e-15

    @given(x=st.floats(0.0, 1.0), a=st.floats(0.01, 1e5), b=st.floats(0.01, 1e5))
    @settings(max_examples=150, deadline=None)
    def test_symmetry_identity(self, x, a, b):
        total = regularized_inc_beta(x, ShapePair(a, b)) + regularized_inc_beta(
            1.0 - x, ShapePair(b, a)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


class TestStableIncBetaDiff:
    def test_full_integral_equals_complete_beta(self):
        for shape in (ShapePair(2, 3), ShapePair(51, 3281), ShapePair(0.5, 4)):
            want = math.exp(log_complete_beta(shape))
            assert stable_inc_beta_diff(0.0, 1.0, shape) == pytest.approx(want, rel=1e-13)

    def test_uniform_interval(self):
        assert stable_inc_beta_diff(0.2, 0.7, ShapePair(1, 1)) == pytest.approx(0.5, rel=1e-14)

    def test_frozen_oracle_suite(self, oracle_data):
        worst = 0.0
        for case in oracle_data["diff_cases"]:
            got = math.log(
                stable_inc_beta_diff(case["u"], case["v"], ShapePair(case["a"], case["b"]))
            )
            worst = max(worst, rel_err_from_logs(got, case["log_value"]))
        assert worst < 1e-8

    def test_upper_tail_flip_case(self, oracle_data):
        # the stability-motivated case: both endpoints far above the bulk
        case = next(
            c
            for c in oracle_data["diff_cases"]
            if (c["u"], c["v"], c["a"], c["b"]) == (0.95, 0.99, 3281.0, 51.0)
        )
        got = stable_inc_beta_diff(0.95, 0.99, ShapePair(3281, 51))
        assert math.log(got) == pytest.approx(case["log_value"], abs=1e-10)

    def test_orders_rejected(self):
        with pytest.raises(ValueError):
            stable_inc_beta_diff(0.7, 0.2, ShapePair(2, 2))
        with pytest.raises(ValueError):
            stable_inc_beta_diff(0.5, 0.5, ShapePair(2, 2))

    def test_vanishing_mass_is_distinct_error(self):
        # interval carries ~exp(-2500) mass: under double precision entirely
        with pytest.raises(VanishingMassError):
            stable_inc_beta_diff(0.2, 0.3, ShapePair(3281, 51))

    def test_log_variant_matches_and_broadcasts(self):
        shape = ShapePair(51, 3281)
        u = np.array([0.001, 0.01, 0.5])
        v = np.array([0.01, 0.9, 0.98])
        logs = log_inc_beta_diff(u, v, shape)
        assert logs.shape == (3,)
        for i in range(3):
            assert logs[i] == pytest.approx(
                math.log(stable_inc_beta_diff(u[i], v[i], shape)), abs=1e-13
            )
        scalar = log_inc_beta_diff(0.001, 0.01, shape)
        assert scalar == pytest.approx(logs[0], abs=0.0)

    @given(
        data=st.tuples(
            st.floats(0.001, 0.999),
            st.floats(0.001, 0.999),
            st.floats(0.001, 0.999),
        ),
        a=st.floats(0.5, 1000.0),
        b=st.floats(0.5, 1000.0),
    )
    @settings(max_examples=120, deadline=None)
    def test_additivity(self, data, a, b):
        u, w, v = sorted(data)
        if not (u < w < v):
            return
        shape = ShapePair(a, b)
        try:
            whole = stable_inc_beta_diff(u, v, shape)
            left = stable_inc_beta_diff(u, w, shape)
            right = stable_inc_beta_diff(w, v, shape)
        except VanishingMassError:
            return
        assert left + right == pytest.approx(whole, rel=1e-9)


class TestBetaLogPdf:
    def test_uniform(self):
        assert beta_log_pdf(0.5, ShapePair(1, 1)) == 0.0

    def test_two_two(self):
        assert beta_log_pdf(0.5, ShapePair(2, 2)) == pytest.approx(math.log(1.5), rel=1e-14)

    def test_frozen_cases(self, oracle_data):
        for case in oracle_data["beta_log_pdf_cases"]:
            got = beta_log_pdf(case["x"], ShapePair(case["a"], case["b"]))
            assert got == pytest.approx(case["value"], rel=1e-12, abs=1e-12), case

    def test_boundaries(self):
        assert beta_log_pdf(0.0, ShapePair(2, 5)) == -math.inf
        assert beta_log_pdf(1.0, ShapePair(2, 5)) == -math.inf
        # a = 1: density at zero is finite (value b)
        assert beta_log_pdf(0.0, ShapePair(1, 4)) == pytest.approx(math.log(4), rel=1e-14)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            beta_log_pdf(1.5, ShapePair(2, 2))

    @pytest.mark.parametrize("a,b", [(2.0, 5.0), (0.7, 3.0), (40.0, 1000.0), (1.0, 1.0)])
    def test_integrates_to_one(self, a, b):
        # rectangle rule on a 1e5-point interior grid
        m = 100_000
        xs = (np.arange(m) + 0.5) / m
        shape = ShapePair(a, b)
        vals = np.array([beta_log_pdf(float(x), shape) for x in xs[:: 1 if m <= 2e5 else 1]])
        integral = float(np.exp(vals).mean())
        assert integral == pytest.approx(1.0, abs=1e-4)


class TestSampleBeta:
    def test_uniform_passes_ks(self):
        rng = RngState(123)
        draws = np.array([sample_beta(rng, ShapePair(1, 1)) for _ in range(100_000)])
        stat = kstest(draws, "uniform")
        assert stat.pvalue > 0.001

    def test_mean_of_skewed_shape(self):
        rng = RngState(42)
        shape = ShapePair(3, 400)
        draws = np.array([sample_beta(rng, shape) for _ in range(100_000)])
        mean = 3 / 403
        sd = math.sqrt(3 * 400 / (403**2 * 404))
        assert abs(draws.mean() - mean) < 3 * sd / math.sqrt(draws.size)

    @pytest.mark.parametrize("a,b", [(3.0, 400.0), (104.0, 20.0)])
    def test_moments_within_four_standard_errors(self, a, b):
        rng = RngState(7)
        n = 100_000
        draws = rng.generator.beta(a, b, n)
        mean, var, _, exkurt = beta_dist.stats(a, b, moments="mvsk")
        mu4 = (exkurt + 3.0) * var**2
        se_mean = math.sqrt(var / n)
        se_var = math.sqrt(max(mu4 - var**2, 0.0) / n)
        assert abs(draws.mean() - mean) < 4 * se_mean
        assert abs(draws.var(ddof=1) - var) < 4 * se_var

    def test_deterministic_given_seed(self):
        shape = ShapePair(2, 9)
        first = [sample_beta(RngState(99), shape) for _ in range(1)]
        a = RngState(5)
        b = RngState(5)
        seq_a = [sample_beta(a, shape) for _ in range(50)]
        seq_b = [sample_beta(b, shape) for _ in range(50)]
        assert seq_a == seq_b
        assert first == [sample_beta(RngState(99), shape)]

    def test_seed_validation(self):
        with pytest.raises(ValueError):
            RngState(-1)
        with pytest.raises(ValueError):
            RngState(2**64)


class TestLogMeanExp:
    def test_constant(self):
        assert log_mean_exp([-3.7, -3.7, -3.7]) == -3.7

    def test_ln2_ln4(self):
        assert log_mean_exp([math.log(2), math.log(4)]) == pytest.approx(math.log(3), rel=1e-15)

    def test_frozen_extended_precision_case(self, oracle_data):
        case = oracle_data["log_mean_exp_case"]
        assert log_mean_exp(case["values"]) == pytest.approx(case["value"], abs=1e-12)

    def test_all_neg_inf(self):
        assert log_mean_exp([-math.inf, -math.inf]) == -math.inf

    def test_partial_neg_inf(self):
        assert log_mean_exp([math.log(2), -math.inf]) == pytest.approx(0.0, abs=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            log_mean_exp([])

    def test_axis_support(self):
        arr = np.array([[math.log(2), math.log(4)], [0.0, 0.0]])
        out = log_mean_exp(arr, axis=1)
        assert out[0] == pytest.approx(math.log(3), rel=1e-15)
        assert out[1] == 0.0

    @given(
        xs=st.lists(st.floats(-100, 100), min_size=1, max_size=20),
        c=st.floats(-500, 500),
    )
    @settings(max_examples=200, deadline=None)
    def test_shift_invariance(self, xs, c):
        shifted = log_mean_exp([x + c for x in xs])
        assert shifted == pytest.approx(log_mean_exp(xs) + c, abs=1e-12 * max(1.0, abs(c)))
