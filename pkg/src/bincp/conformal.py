"""Conformal calibration: vanilla CP, binarized CP in both parameterizations,
single-certificate robustification, and finite-sample-corrected pipelines.

The working statistic is the pass probability p = Pr[score >= tau] under the
smoothing noise. Calibration finds a (p_alpha, tau_alpha) pair on the 1-alpha
coverage contour; robustness replaces p_alpha by a single certified lower
bound; finite-sample correction replaces empirical pass fractions by exact
one-sided Clopper-Pearson bounds, spending an eta budget of eta/(n + k) per
bound and quantiling at alpha - eta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import intervals
from .certify import SmoothingScheme, ThreatModel, cert_lower
from .scores import ScoreSamples, pass_fractions, true_class_values

FIXED_P = "fixed_p"
FIXED_TAU = "fixed_tau"

NEG_INF = float("-inf")


@dataclass(frozen=True)
class CalibrationConfig:
    """How to calibrate: miscoverage alpha, correction budget eta, and the
    fixed parameter of the chosen view (p for fixed-p, tau for fixed-tau).

    ``exact`` skips finite-sample correction entirely (de-randomized or
    exact-probability inputs); it forces eta = 0.
    """

    alpha: float
    mode: str
    p: float | None = None
    tau: float | None = None
    eta: float = 0.0
    scheme: SmoothingScheme | None = None
    ball: ThreatModel | None = None
    exact: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.mode not in (FIXED_P, FIXED_TAU):
            raise ValueError(f"unknown calibration mode: {self.mode!r}")
        if self.mode == FIXED_P and not (self.p and 0.0 < self.p < 1.0):
            raise ValueError("fixed-p mode requires p in (0, 1)")
        if self.mode == FIXED_TAU and self.tau is None:
            raise ValueError("fixed-tau mode requires tau")
        if self.exact and self.eta != 0.0:
            raise ValueError("exact mode forces eta = 0")
        if not self.exact and not 0.0 <= self.eta < self.alpha:
            raise ValueError("eta must lie in [0, alpha)")


@dataclass(frozen=True)
class CalibrationResult:
    """Calibrated pair plus its corrected and certified versions.

    ``cert_threshold`` is the single binary certificate c_low[p_alpha_down]
    used for every test point and class.
    """

    alpha: float
    eta: float
    mode: str
    p_alpha: float
    tau_alpha: float
    p_alpha_down: float
    cert_threshold: float
    n: int
    k: int
    m: int
    exact: bool
    scheme: SmoothingScheme | None = None
    ball: ThreatModel | None = None


@dataclass
class PredictionSet:
    point: int
    classes: set[int]
    per_class_fraction: np.ndarray
    per_class_bound: np.ndarray


def conformal_quantile(values, alpha: float) -> float:
    """The j-th smallest value with j = floor(alpha * (n + 1)).

    Guarantees Pr[exchangeable new value >= result] >= 1 - alpha. When
    j < 1 there is not enough calibration data and the -inf sentinel is
    returned (every candidate passes).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty calibration values")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    n = values.size
    j = math.floor(alpha * (n + 1))
    if j < 1:
        warnings.warn(
            f"alpha={alpha} too small for n={n} calibration points; "
            "returning the full-set sentinel",
            stacklevel=2,
        )
        return NEG_INF
    return float(np.sort(values)[j - 1])


def vanilla_cp(cal_scores, alpha: float) -> float:
    """Vanilla split-CP threshold on one conformity score per point."""
    return conformal_quantile(cal_scores, alpha)


def vanilla_sets(test_scores: np.ndarray, threshold: float) -> list[set[int]]:
    """Sets of classes whose score passes the threshold (>= convention)."""
    test_scores = np.asarray(test_scores, dtype=float)
    return [set(np.flatnonzero(row >= threshold)) for row in test_scores]


def calibrate_fixed_p(samples: ScoreSamples, p: float, alpha: float) -> float:
    """Fixed-p calibration: quantile of per-point score quantiles.

    Per point, tau_i is the ceil(p*m)-th largest true-class sample, the
    largest threshold whose pass fraction still reaches p.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    taus = _per_point_taus(samples, p)
    return conformal_quantile(taus, alpha)


def _per_point_taus(samples: ScoreSamples, p: float) -> np.ndarray:
    vals = true_class_values(samples)
    m = samples.m_samples
    rank = math.ceil(p * m)  # 1-based index into the descending sort
    ordered = np.sort(vals, axis=1)[:, ::-1]
    return ordered[:, rank - 1]


def calibrate_fixed_tau(samples: ScoreSamples, tau: float, alpha: float) -> float:
    """Fixed-tau calibration: quantile of per-point pass fractions."""
    fracs = _true_class_fractions(samples, tau)
    return conformal_quantile(fracs, alpha)


def _true_class_fractions(samples: ScoreSamples, tau: float) -> np.ndarray:
    if samples.labels is None:
        raise ValueError("labels required for calibration")
    fracs = pass_fractions(samples, tau)
    return fracs[np.arange(samples.n_points), samples.labels]


def robustify(
    p_alpha_down: float,
    tau_alpha: float,
    scheme: SmoothingScheme | None,
    ball: ThreatModel | None,
) -> float:
    """The single binary certificate c_low[p_alpha_down, ball].

    One evaluation covers every calibration and test point: both the
    per-point-certified and the single-certificate pipelines produce the
    same ranks, hence the same quantile.
    """
    if scheme is None or ball is None:
        return p_alpha_down
    return cert_lower(p_alpha_down, scheme, ball)


def corrected_calibrate(samples: ScoreSamples, config: CalibrationConfig) -> CalibrationResult:
    """Full calibration pipeline with finite-sample correction.

    Fixed-tau: per-point pass fractions are replaced by lower
    Clopper-Pearson bounds at eta/(n + k) and quantiled at alpha - eta.
    Fixed-p: p is first snapped to the sample grid ceil(p*m)/m, per-point
    thresholds are quantiled at alpha - eta, and the snapped p is lowered by
    a single Clopper-Pearson bound. Exact mode applies no correction.
    """
    if samples.labels is None:
        raise ValueError("labels required for calibration")
    n, k, m = samples.n_points, samples.n_classes, samples.m_samples
    exact = config.exact or samples.exact_mode
    eta = 0.0 if exact else config.eta
    level = config.alpha - eta
    per_test_eta = eta / (n + k) if eta > 0 else 0.0

    if config.mode == FIXED_TAU:
        tau_alpha = float(config.tau)
        fracs = _true_class_fractions(samples, tau_alpha)
        p_alpha = conformal_quantile(fracs, level)
        if exact or eta == 0.0:
            p_alpha_down = p_alpha
        else:
            counts = np.rint(fracs * m).astype(np.int64)
            lowered = intervals.cp_lower_vec(counts, m, per_test_eta)
            p_alpha_down = conformal_quantile(lowered, level)
    else:
        if exact:
            if samples.exact_mode:
                raise ValueError(
                    "fixed-p calibration needs raw score samples, not exact "
                    "pass probabilities"
                )
            p_alpha = float(config.p)
            tau_alpha = calibrate_fixed_p(samples, p_alpha, level)
            p_alpha_down = p_alpha
        else:
            p_snapped = math.ceil(config.p * m) / m
            taus = _per_point_taus(samples, p_snapped)
            tau_alpha = conformal_quantile(taus, level)
            p_alpha = p_snapped
            p_alpha_down = intervals.cp_lower(
                math.ceil(config.p * m), m, per_test_eta
            )

    if p_alpha == NEG_INF:
        # Degenerate calibration: fall back to the everything-passes pair.
        p_alpha = p_alpha_down = 0.0

    cert_threshold = robustify(p_alpha_down, tau_alpha, config.scheme, config.ball)
    return CalibrationResult(
        alpha=config.alpha,
        eta=eta,
        mode=config.mode,
        p_alpha=float(p_alpha),
        tau_alpha=float(tau_alpha),
        p_alpha_down=float(p_alpha_down),
        cert_threshold=float(cert_threshold),
        n=n,
        k=k,
        m=m,
        exact=exact,
        scheme=config.scheme,
        ball=config.ball,
    )


def predict(cal: CalibrationResult, test_samples: ScoreSamples) -> list[PredictionSet]:
    """Robust prediction sets for a test tensor.

    Per class the pass fraction at tau_alpha is upper-bounded (Clopper-
    Pearson at eta/(n + k), or taken as-is in exact mode) and the class is
    included iff the bound reaches the certified threshold.
    """
    if test_samples.n_classes != cal.k:
        raise ValueError(
            f"class-count mismatch: calibrated with {cal.k}, "
            f"got {test_samples.n_classes}"
        )
    fracs = pass_fractions(test_samples, cal.tau_alpha)
    exact = cal.exact or test_samples.exact_mode
    if exact or cal.eta == 0.0:
        bounds = fracs
    else:
        if test_samples.m_samples != cal.m:
            raise ValueError("test sample count must match calibration m")
        per_test_eta = cal.eta / (cal.n + cal.k)
        counts = np.rint(fracs * cal.m).astype(np.int64)
        bounds = intervals.cp_upper_vec(counts, cal.m, per_test_eta)
    out = []
    for i in range(test_samples.n_points):
        included = set(np.flatnonzero(bounds[i] >= cal.cert_threshold))
        out.append(
            PredictionSet(
                point=i,
                classes=included,
                per_class_fraction=fracs[i].copy(),
                per_class_bound=bounds[i].copy(),
            )
        )
    return out


def rscp_baseline(
    cal_samples: ScoreSamples,
    test_samples: ScoreSamples,
    alpha: float,
    sigma: float,
    r: float,
    corrected: bool = False,
    eta: float = 0.0,
) -> list[set[int]]:
    """Mean-based robust CP baseline with the Gaussian closed-form inflation.

    Calibrates vanilla CP on clean mean scores, then inflates each test
    class mean by the certificate Phi(Phi^-1(p) + r/sigma). The optional
    Hoeffding correction lowers calibration means and raises test means by
    the concentration width before inflating.
    """
    if np.any(cal_samples.values < 0) or np.any(cal_samples.values > 1):
        raise ValueError("RSCP requires scores bounded in [0, 1]")
    if np.any(test_samples.values < 0) or np.any(test_samples.values > 1):
        raise ValueError("RSCP requires scores bounded in [0, 1]")
    cal_means = true_class_values(cal_samples).mean(axis=1)
    test_means = test_samples.values.mean(axis=2)
    if corrected:
        n, k = cal_samples.n_points, cal_samples.n_classes
        width = intervals.hoeffding_bound(cal_samples.m_samples, eta / (n + k))
        cal_means = np.clip(cal_means - width, 0.0, 1.0)
        test_means = np.clip(test_means + width, 0.0, 1.0)
        level = alpha - eta
    else:
        level = alpha
    threshold = conformal_quantile(cal_means, level)
    shift = r / sigma
    with np.errstate(invalid="ignore"):
        inflated = norm.cdf(norm.ppf(test_means) + shift)
    inflated = np.where(test_means <= 0, 0.0, np.where(test_means >= 1, 1.0, inflated))
    return vanilla_sets(inflated, threshold)
