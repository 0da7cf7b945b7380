"""One-sided binomial confidence bounds and continuous-score baselines.

Clopper-Pearson bounds are exact (Beta quantiles); Hoeffding and Bernstein
are the classical mean bounds for bounded scores, kept here for the
dominance comparison between binarized and continuous corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class IntervalSpec:
    """Failure-budget split: each of the n + k bounds gets eta_total/(n + k)."""

    eta_total: float
    n_cal: int
    k_classes: int

    def __post_init__(self):
        if not 0.0 < self.eta_total < 1.0:
            raise ValueError("eta_total must lie in (0, 1)")
        if self.n_cal < 1 or self.k_classes < 1:
            raise ValueError("counts must be positive")

    @property
    def per_test_eta(self) -> float:
        return self.eta_total / (self.n_cal + self.k_classes)


def _check_counts(successes: int, m: int, eta: float) -> None:
    if m < 1 or not 0 <= successes <= m:
        raise ValueError(f"invalid counts: {successes} successes out of {m}")
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")


def cp_lower(successes: int, m: int, eta: float) -> float:
    """Exact one-sided lower Clopper-Pearson bound on a binomial parameter.

    With probability at least 1 - eta the returned value is <= the true
    parameter. Zero successes give the degenerate bound 0.
    """
    _check_counts(successes, m, eta)
    if successes == 0:
        return 0.0
    return float(stats.beta.ppf(eta, successes, m - successes + 1))


def cp_upper(successes: int, m: int, eta: float) -> float:
    """Exact one-sided upper Clopper-Pearson bound; mirror of cp_lower."""
    _check_counts(successes, m, eta)
    if successes == m:
        return 1.0
    return float(stats.beta.ppf(1.0 - eta, successes + 1, m - successes))


def hoeffding_bound(m: int, eta: float) -> float:
    """Hoeffding one-sided deviation for [0, 1]-bounded means."""
    if m < 1:
        raise ValueError("m must be positive")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return math.sqrt(math.log(1.0 / eta) / (2.0 * m))


def bernstein_bound(m: int, sample_variance: float, eta: float) -> float:
    """Empirical Bernstein one-sided deviation for [0, 1]-bounded means."""
    if m < 2:
        raise ValueError("Bernstein bound needs m >= 2")
    if sample_variance < 0:
        raise ValueError("sample variance must be non-negative")
    if not 0.0 < eta <= 2.0:
        raise ValueError("eta must lie in (0, 2]")
    log_term = math.log(2.0 / eta)
    return math.sqrt(2.0 * sample_variance * log_term / m) + 7.0 * log_term / (
        3.0 * (m - 1)
    )


def cp_vs_hoeffding_probability(
    a: float, b: float, tau: float, m: int, eta: float
) -> float:
    """Probability that the Clopper-Pearson upper bound beats Hoeffding's.

    Scores are drawn from Beta(a, b) and binarized at tau. The event
    "CP upper bound - E[Y] <= Hoeffding width" is monotone in the success
    count; the break-point is found by a full linear scan (monotonicity of
    the indicator is not assumed), and the binomial CDF at that break-point
    is the exact probability of the event. The Hoeffding width uses the
    two-sided constant ln(2/eta), the same convention as the Bernstein
    bound.
    """
    if a <= 0 or b <= 0:
        raise ValueError("Beta parameters must be positive")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    expect_y = 1.0 - float(stats.beta.cdf(tau, a, b))
    width = hoeffding_bound(m, eta / 2.0)
    bounds = cp_upper_vec(np.arange(m + 1), m, eta)
    hits = np.flatnonzero(bounds - expect_y <= width)
    if hits.size == 0:
        return 0.0
    return float(stats.binom.cdf(int(hits[-1]), m, expect_y))


def cp_lower_vec(successes: np.ndarray, m: int, eta: float) -> np.ndarray:
    """Vectorized cp_lower over an integer success-count array."""
    successes = np.asarray(successes, dtype=np.int64)
    if np.any(successes < 0) or np.any(successes > m):
        raise ValueError("success counts out of range")
    out = stats.beta.ppf(eta, successes, m - successes + 1)
    return np.where(successes == 0, 0.0, out)


def cp_upper_vec(successes: np.ndarray, m: int, eta: float) -> np.ndarray:
    """Vectorized cp_upper over an integer success-count array."""
    successes = np.asarray(successes, dtype=np.int64)
    if np.any(successes < 0) or np.any(successes > m):
        raise ValueError("success counts out of range")
    out = stats.beta.ppf(1.0 - eta, successes + 1, m - successes)
    return np.where(successes == m, 1.0, out)
