"""Binary randomized-smoothing certificates.

Given a clean-point pass probability p, each (smoothing scheme, threat
model) pair yields a certified worst-case lower bound and best-case upper
bound on the pass probability anywhere in the ball. Gaussian and uniform
smoothing have closed forms; sparse (binary-flip) smoothing reduces to a
fractional-knapsack linear program over constant-likelihood-ratio regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.stats import norm

L1 = "l1"
L2 = "l2"
BINARY = "binary"

GAUSSIAN = "gaussian"
UNIFORM = "uniform"
SPARSE = "sparse"

MIN = "min"
MAX = "max"

_COMPATIBLE = {
    GAUSSIAN: (L1, L2),
    UNIFORM: (L1,),
    SPARSE: (BINARY,),
}


@dataclass(frozen=True)
class ThreatModel:
    """Perturbation ball: an lp ball of radius r, or a binary add/delete ball."""

    kind: str
    r: float = 0.0
    r_a: int = 0
    r_d: int = 0

    def __post_init__(self):
        if self.kind in (L1, L2):
            if self.r < 0:
                raise ValueError("radius must be non-negative")
        elif self.kind == BINARY:
            if self.r_a < 0 or self.r_d < 0:
                raise ValueError("flip budgets must be non-negative")
        else:
            raise ValueError(f"unknown threat model: {self.kind!r}")


def l1_ball(r: float) -> ThreatModel:
    return ThreatModel(L1, r=r)


def l2_ball(r: float) -> ThreatModel:
    return ThreatModel(L2, r=r)


def binary_ball(r_a: int, r_d: int) -> ThreatModel:
    return ThreatModel(BINARY, r_a=r_a, r_d=r_d)


@dataclass(frozen=True)
class SmoothingScheme:
    """Noise distribution: Gaussian(sigma), Uniform(lam), or sparse Bernoulli."""

    kind: str
    sigma: float = 0.0
    lam: float = 0.0
    p_plus: float = 0.0
    p_minus: float = 0.0

    def __post_init__(self):
        if self.kind == GAUSSIAN:
            if self.sigma <= 0:
                raise ValueError("sigma must be positive")
        elif self.kind == UNIFORM:
            if self.lam <= 0:
                raise ValueError("lambda must be positive")
        elif self.kind == SPARSE:
            if not (0.0 < self.p_plus < 1.0 and 0.0 < self.p_minus < 1.0):
                raise ValueError("flip probabilities must lie strictly in (0, 1)")
        else:
            raise ValueError(f"unknown smoothing scheme: {self.kind!r}")


def gaussian(sigma: float) -> SmoothingScheme:
    return SmoothingScheme(GAUSSIAN, sigma=sigma)


def uniform(lam: float) -> SmoothingScheme:
    return SmoothingScheme(UNIFORM, lam=lam)


def sparse(p_plus: float, p_minus: float) -> SmoothingScheme:
    return SmoothingScheme(SPARSE, p_plus=p_plus, p_minus=p_minus)


def invert_ball(ball: ThreatModel) -> ThreatModel:
    """Smallest ball around a perturbed point guaranteed to contain the clean one.

    Symmetric lp balls invert to themselves; the binary ball swaps its add
    and delete budgets.
    """
    if ball.kind == BINARY:
        return ThreatModel(BINARY, r_a=ball.r_d, r_d=ball.r_a)
    return ball


def _check_pair(scheme: SmoothingScheme, ball: ThreatModel) -> None:
    if ball.kind not in _COMPATIBLE[scheme.kind]:
        raise ValueError(
            f"incompatible scheme/ball pairing: {scheme.kind} with {ball.kind}"
        )


@dataclass(frozen=True)
class RegionTable:
    """Constant-likelihood-ratio regions for the sparse certificate.

    ``t`` is each region's mass under the clean canonical point, ``t_tilde``
    under the perturbed one; ``ratios`` is the per-point likelihood ratio
    clean/perturbed, constant inside a region.
    """

    ratios: np.ndarray
    t: np.ndarray
    t_tilde: np.ndarray

    def __post_init__(self):
        for arr in (self.t, self.t_tilde):
            if np.any(np.asarray(arr) < 0):
                raise ValueError("region masses must be non-negative")
            if abs(float(np.sum(arr)) - 1.0) > 1e-10:
                raise ValueError("region masses must sum to 1")


def _flip_distance_masses(r_a: int, r_d: int, p_plus: float, p_minus: float) -> np.ndarray:
    """Mass of flipping exactly q of the r_a + r_d differing coordinates.

    q splits into q_a flipped zero-bits (each with probability p_plus) and
    q_d flipped one-bits (probability p_minus).
    """
    total = r_a + r_d
    out = np.zeros(total + 1)
    for q in range(total + 1):
        acc = 0.0
        for q_a in range(max(0, q - r_d), min(r_a, q) + 1):
            q_d = q - q_a
            acc += (
                comb(r_a, q_a)
                * comb(r_d, q_d)
                * p_plus**q_a
                * (1 - p_plus) ** (r_a - q_a)
                * p_minus**q_d
                * (1 - p_minus) ** (r_d - q_d)
            )
        out[q] = acc
    return out


def build_region_table(scheme: SmoothingScheme, ball: ThreatModel) -> RegionTable:
    """Region table for sparse smoothing under a binary add/delete ball.

    Regions are indexed by q, the number of differing coordinates flipped
    from the clean canonical point; there are r_a + r_d + 1 of them. The
    perturbed point sees the same regions in reverse order with the roles of
    (p_plus, r_a) and (p_minus, r_d) swapped.
    """
    if scheme.kind != SPARSE or ball.kind != BINARY:
        raise ValueError("region tables apply to sparse smoothing with binary balls")
    r_a, r_d = ball.r_a, ball.r_d
    p_plus, p_minus = scheme.p_plus, scheme.p_minus
    t = _flip_distance_masses(r_a, r_d, p_plus, p_minus)
    swapped = _flip_distance_masses(r_d, r_a, p_plus, p_minus)
    t_tilde = swapped[::-1].copy()
    qs = np.arange(r_a + r_d + 1, dtype=float)
    ratios = (p_plus / (1 - p_minus)) ** (qs - r_d) * (p_minus / (1 - p_plus)) ** (
        qs - r_a
    )
    return RegionTable(ratios=ratios, t=t, t_tilde=t_tilde)


def greedy_lp(table: RegionTable, p: float, direction: str) -> float:
    """Optimize h . t_tilde over h in [0,1]^K subject to h . t = p.

    Fractional knapsack: visit regions sorted by likelihood ratio (clean
    over perturbed), descending for the minimization and ascending for the
    maximization, filling h to 1 until the budget is met with one fractional
    region. The ordering was validated against an exhaustive-ordering
    oracle rather than trusted from a derivation.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if direction not in (MIN, MAX):
        raise ValueError(f"unknown direction: {direction!r}")
    sign = -1.0 if direction == MIN else 1.0
    order = np.argsort(sign * table.ratios, kind="stable")
    remaining = p
    value = 0.0
    for idx in order:
        t_i = float(table.t[idx])
        if t_i <= 0.0:
            h = 1.0 if direction == MAX else 0.0
        else:
            h = min(1.0, remaining / t_i)
            remaining -= h * t_i
        value += h * float(table.t_tilde[idx])
        if remaining <= 0.0:
            if direction == MIN:
                break
            remaining = 0.0
    return min(1.0, max(0.0, value))


def _gaussian_shift(p: float, shift: float) -> float:
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return float(norm.cdf(norm.ppf(p) + shift))


def cert_lower(p: float, scheme: SmoothingScheme, ball: ThreatModel) -> float:
    """Certified worst-case pass probability anywhere in the ball; <= p."""
    _check_pair(scheme, ball)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if scheme.kind == GAUSSIAN:
        return _gaussian_shift(p, -ball.r / scheme.sigma)
    if scheme.kind == UNIFORM:
        return min(1.0, max(0.0, p - ball.r / (2.0 * scheme.lam)))
    table = build_region_table(scheme, ball)
    return greedy_lp(table, p, MIN)


def cert_upper(p: float, scheme: SmoothingScheme, ball: ThreatModel) -> float:
    """Certified best-case pass probability; >= p. Pass the inverted ball."""
    _check_pair(scheme, ball)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if scheme.kind == GAUSSIAN:
        return _gaussian_shift(p, ball.r / scheme.sigma)
    if scheme.kind == UNIFORM:
        return min(1.0, max(0.0, p + ball.r / (2.0 * scheme.lam)))
    table = build_region_table(scheme, ball)
    return greedy_lp(table, p, MAX)


def cert_lower_vec(p: np.ndarray, scheme: SmoothingScheme, ball: ThreatModel) -> np.ndarray:
    """Vectorized cert_lower over an array of pass probabilities."""
    p = np.asarray(p, dtype=float)
    _check_pair(scheme, ball)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("p must lie in [0, 1]")
    if scheme.kind == GAUSSIAN:
        out = norm.cdf(norm.ppf(p) - ball.r / scheme.sigma)
        return np.where(p <= 0, 0.0, np.where(p >= 1, 1.0, out))
    if scheme.kind == UNIFORM:
        return np.clip(p - ball.r / (2.0 * scheme.lam), 0.0, 1.0)
    table = build_region_table(scheme, ball)
    return np.array([greedy_lp(table, float(v), MIN) for v in p.ravel()]).reshape(p.shape)


def cert_upper_vec(p: np.ndarray, scheme: SmoothingScheme, ball: ThreatModel) -> np.ndarray:
    """Vectorized cert_upper over an array of pass probabilities."""
    p = np.asarray(p, dtype=float)
    _check_pair(scheme, ball)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("p must lie in [0, 1]")
    if scheme.kind == GAUSSIAN:
        out = norm.cdf(norm.ppf(p) + ball.r / scheme.sigma)
        return np.where(p <= 0, 0.0, np.where(p >= 1, 1.0, out))
    if scheme.kind == UNIFORM:
        return np.clip(p + ball.r / (2.0 * scheme.lam), 0.0, 1.0)
    table = build_region_table(scheme, ball)
    return np.array([greedy_lp(table, float(v), MAX) for v in p.ravel()]).reshape(p.shape)
