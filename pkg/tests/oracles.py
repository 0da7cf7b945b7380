"""Independent oracles for the test suite.

Deliberately dumb implementations: high-precision bisection instead of
scipy's Beta quantile, exhaustive enumeration and a generic LP solver
instead of the greedy knapsack. Slow is fine here; agreeing with the fast
path for the wrong reason is not.
"""

from __future__ import annotations

import itertools

import numpy as np


def beta_ppf_mp(q: float, a: float, b: float, digits: int = 30) -> float:
    """Inverse regularized incomplete Beta via plain bisection in mpmath."""
    import mpmath as mp

    with mp.workdps(digits):
        qq = mp.mpf(q)
        lo, hi = mp.mpf(0), mp.mpf(1)
        for _ in range(200):
            mid = (lo + hi) / 2
            if mp.betainc(a, b, 0, mid, regularized=True) < qq:
                lo = mid
            else:
                hi = mid
        return float((lo + hi) / 2)


def sparse_atoms(r_a: int, r_d: int, p_plus: float, p_minus: float):
    """Every assignment of the r_a + r_d differing coordinates.

    The clean point has bit 0 on the first r_a coordinates and bit 1 on the
    remaining r_d; the perturbed point has them inverted. Smoothing flips a
    0-bit with probability p_plus and a 1-bit with probability p_minus.
    Returns (bits, clean mass, perturbed mass) triples.
    """
    out = []
    for bits in itertools.product((0, 1), repeat=r_a + r_d):
        clean = 1.0
        pert = 1.0
        for i, z in enumerate(bits):
            if i < r_a:  # clean bit 0, perturbed bit 1
                clean *= p_plus if z else 1.0 - p_plus
                pert *= (1.0 - p_minus) if z else p_minus
            else:  # clean bit 1, perturbed bit 0
                clean *= (1.0 - p_minus) if z else p_minus
                pert *= p_plus if z else 1.0 - p_plus
        out.append((bits, clean, pert))
    return out


def sparse_cert_bruteforce(
    p: float, r_a: int, r_d: int, p_plus: float, p_minus: float, direction: str
) -> float:
    """Certified bound by solving the LP over all 2^(r_a+r_d) atoms directly."""
    from scipy.optimize import linprog

    atoms = sparse_atoms(r_a, r_d, p_plus, p_minus)
    t = np.array([a[1] for a in atoms])
    t_tilde = np.array([a[2] for a in atoms])
    sign = 1.0 if direction == "min" else -1.0
    res = linprog(
        sign * t_tilde,
        A_eq=[t],
        b_eq=[p],
        bounds=[(0.0, 1.0)] * len(atoms),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"LP failed: {res.message}")
    return sign * res.fun


def greedy_all_orderings(t, t_tilde, p: float, direction: str) -> float:
    """Best greedy fill over every region ordering (feasible for K <= 5).

    The knapsack optimum sits at a vertex reachable by filling regions to 1
    in some order with one fractional region, so the extreme value over all
    K! orderings is the LP optimum.
    """
    t = np.asarray(t, dtype=float)
    t_tilde = np.asarray(t_tilde, dtype=float)
    best = None
    for order in itertools.permutations(range(len(t))):
        remaining = p
        value = 0.0
        for idx in order:
            if t[idx] <= 0.0:
                h = 1.0 if direction == "max" else 0.0
            else:
                h = min(1.0, remaining / t[idx])
                remaining -= h * t[idx]
            value += h * t_tilde[idx]
        value = min(1.0, max(0.0, value))
        if best is None:
            best = value
        elif direction == "min":
            best = min(best, value)
        else:
            best = max(best, value)
    return best


def gaussian_cert_mc(
    p: float, sigma: float, r: float, draws: int, seed: int, upper: bool = False
) -> float:
    """Monte-Carlo pass probability of the worst-case halfspace classifier.

    The binary classifier tightest against a Gaussian-smoothed guarantee is
    a halfspace; its pass region is {z : z_1 <= sigma * Phi^-1(p)} so the
    clean pass probability is exactly p and the shifted one is estimated by
    sampling.
    """
    from scipy.stats import norm

    rng = np.random.default_rng(seed)
    z = rng.normal(0.0, sigma, size=draws)
    cut = sigma * norm.ppf(p)
    shift = -r if upper else r
    return float(np.mean(shift + z <= cut))
