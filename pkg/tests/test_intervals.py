import math

import numpy as np
import pytest
from scipy import stats

from bincp import intervals

from oracles import beta_ppf_mp

# Beta quantiles frozen from a 30-digit bisection oracle (see oracles.py),
# computed independently of scipy.
BETA_90_11_AT_005 = 0.836282376724185209
BETA_51_50_AT_099 = 0.619282533093047548
POW_005_1_100 = 0.970486950392960065


class TestClopperPearson:
    def test_lower_zero_successes(self):
        assert intervals.cp_lower(0, 100, 0.05) == 0.0

    def test_lower_all_successes_closed_form(self):
        # Beta(m, 1) quantile is eta^(1/m)
        assert intervals.cp_lower(100, 100, 0.05) == pytest.approx(
            POW_005_1_100, abs=1e-12
        )

    def test_lower_frozen_oracle_value(self):
        assert intervals.cp_lower(90, 100, 0.05) == pytest.approx(
            BETA_90_11_AT_005, abs=1e-12
        )

    def test_upper_all_successes(self):
        assert intervals.cp_upper(100, 100, 0.05) == 1.0

    def test_upper_zero_successes_closed_form(self):
        # Beta(1, m) quantile at 1 - eta is 1 - eta^(1/m)
        assert intervals.cp_upper(0, 100, 0.05) == pytest.approx(
            1.0 - POW_005_1_100, abs=1e-12
        )

    def test_upper_frozen_oracle_value(self):
        assert intervals.cp_upper(50, 100, 0.01) == pytest.approx(
            BETA_51_50_AT_099, abs=1e-12
        )

    @pytest.mark.parametrize(
        "successes,m,eta",
        [(1, 10, 0.1), (7, 10, 0.05), (37, 250, 0.001), (249, 250, 0.2)],
    )
    def test_against_bisection_oracle(self, successes, m, eta):
        lo = beta_ppf_mp(eta, successes, m - successes + 1)
        hi = beta_ppf_mp(1.0 - eta, successes + 1, m - successes)
        assert intervals.cp_lower(successes, m, eta) == pytest.approx(lo, abs=1e-10)
        assert intervals.cp_upper(successes, m, eta) == pytest.approx(hi, abs=1e-10)

    def test_lower_below_upper_and_bracket_fraction(self):
        for k in range(0, 51, 5):
            lo = intervals.cp_lower(k, 50, 0.05)
            hi = intervals.cp_upper(k, 50, 0.05)
            assert lo <= k / 50 <= hi

    def test_monotone_in_successes(self):
        lows = [intervals.cp_lower(k, 30, 0.05) for k in range(31)]
        ups = [intervals.cp_upper(k, 30, 0.05) for k in range(31)]
        assert lows == sorted(lows)
        assert ups == sorted(ups)

    def test_smaller_eta_widens(self):
        assert intervals.cp_lower(20, 50, 0.001) < intervals.cp_lower(20, 50, 0.1)
        assert intervals.cp_upper(20, 50, 0.001) > intervals.cp_upper(20, 50, 0.1)

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            intervals.cp_lower(-1, 10, 0.05)
        with pytest.raises(ValueError):
            intervals.cp_upper(11, 10, 0.05)
        with pytest.raises(ValueError):
            intervals.cp_lower(5, 10, 0.0)

    def test_coverage_property(self):
        # One-sided coverage: the lower bound undershoots the true parameter
        # with probability >= 1 - eta (and similarly for the upper bound).
        rng = np.random.default_rng(1234)
        eta = 0.1
        m = 60
        for p in (0.05, 0.3, 0.7, 0.95):
            counts = rng.binomial(m, p, size=10_000)
            lows = intervals.cp_lower_vec(counts, m, eta)
            ups = intervals.cp_upper_vec(counts, m, eta)
            assert np.mean(lows <= p) >= 1 - eta - 0.01
            assert np.mean(ups >= p) >= 1 - eta - 0.01

    def test_vectorized_matches_scalar(self):
        counts = np.array([0, 3, 17, 50])
        lows = intervals.cp_lower_vec(counts, 50, 0.02)
        ups = intervals.cp_upper_vec(counts, 50, 0.02)
        for i, k in enumerate(counts):
            assert lows[i] == intervals.cp_lower(int(k), 50, 0.02)
            assert ups[i] == intervals.cp_upper(int(k), 50, 0.02)


class TestMeanBounds:
    def test_hoeffding_hand_value(self):
        # eta = e^-2 makes ln(1/eta) = 2
        assert intervals.hoeffding_bound(100, math.exp(-2)) == pytest.approx(0.1)

    def test_hoeffding_eta_one(self):
        assert intervals.hoeffding_bound(50, 1.0) == 0.0

    def test_hoeffding_quadruple_m_halves(self):
        b1 = intervals.hoeffding_bound(25, 0.05)
        b2 = intervals.hoeffding_bound(100, 0.05)
        assert b1 == pytest.approx(2 * b2)

    def test_bernstein_zero_variance_hand_value(self):
        # eta = 2e^-3 makes ln(2/eta) = 3; only the 7/(3(m-1)) term survives
        assert intervals.bernstein_bound(101, 0.0, 2 * math.exp(-3)) == pytest.approx(
            0.07
        )

    def test_bernstein_eta_two(self):
        assert intervals.bernstein_bound(10, 0.0, 2.0) == 0.0

    def test_bernstein_direct_formula(self):
        # frozen arithmetic: sqrt(2*0.25*ln40/100) + 7*ln40/(3*99)
        assert intervals.bernstein_bound(100, 0.25, 0.05) == pytest.approx(
            0.222753438371360112, abs=1e-15
        )

    def test_bernstein_needs_two_samples(self):
        with pytest.raises(ValueError):
            intervals.bernstein_bound(1, 0.1, 0.05)


class TestCpVsHoeffding:
    def test_cp_always_tighter_gives_one(self):
        # tau deep in the left tail makes E[Y] near 1 and the CP bound
        # tighter at every count
        assert intervals.cp_vs_hoeffding_probability(2, 2, 0.01, 200, 0.2) == 1.0

    def test_expect_y_near_zero_gives_one(self):
        assert intervals.cp_vs_hoeffding_probability(2, 2, 0.999, 100, 0.01) == (
            pytest.approx(1.0, abs=1e-6)
        )

    @pytest.mark.parametrize("m,tau", [(20, 0.5), (50, 0.3), (200, 0.7), (500, 0.5)])
    def test_against_monte_carlo(self, m, tau):
        a, b, eta = 2.0, 2.0, 0.01
        closed = intervals.cp_vs_hoeffding_probability(a, b, tau, m, eta)
        expect_y = 1.0 - stats.beta.cdf(tau, a, b)
        width = intervals.hoeffding_bound(m, eta / 2.0)
        rng = np.random.default_rng(99)
        counts = rng.binomial(m, expect_y, size=100_000)
        bounds = intervals.cp_upper_vec(np.arange(m + 1), m, eta)
        hit = np.mean(bounds[counts] - expect_y <= width)
        assert closed == pytest.approx(hit, abs=0.02)

    def test_hoeffding_rarely_tighter_on_symmetric_beta(self):
        for m in (20, 100, 500):
            for tau in (0.25, 0.5, 0.75):
                p_cp = intervals.cp_vs_hoeffding_probability(2, 2, tau, m, 0.01)
                assert 1.0 - p_cp <= 0.25


def test_interval_spec_budget_split():
    spec = intervals.IntervalSpec(eta_total=0.011, n_cal=100, k_classes=10)
    assert spec.per_test_eta == pytest.approx(0.0001)
    with pytest.raises(ValueError):
        intervals.IntervalSpec(eta_total=0.0, n_cal=10, k_classes=2)
