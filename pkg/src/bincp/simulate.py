"""Synthetic exchangeable score generators, worst-case adversary oracles,
and the coverage/set-size evaluation harness.

The generator draws per-point true-class pass probabilities from a Beta law
and off-class probabilities uniformly below a scaled ceiling; calibration
and test splits are i.i.d. from the same per-point law, so exchangeability
holds by construction. The worst-case adversary moves every test point's
exact pass probabilities to their certified bounds, saturating the
guarantee, and fresh Bernoulli samples are drawn at the perturbed
probabilities.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import beta as beta_dist

from .certify import SmoothingScheme, ThreatModel, cert_lower_vec, cert_upper_vec, invert_ball
from .conformal import (
    FIXED_TAU,
    CalibrationConfig,
    CalibrationResult,
    conformal_quantile,
    corrected_calibrate,
    predict,
    rscp_baseline,
    vanilla_cp,
    vanilla_sets,
)
from .scores import ScoreSamples, true_class_values

WORST_CASE = "worst"
NONE = "none"

VANILLA = "vanilla"
BINCP = "bincp"
BINCP_ROBUST = "bincp-robust"
RSCP = "rscp"

MODES = (VANILLA, BINCP, BINCP_ROBUST, RSCP)


@dataclass(frozen=True)
class GeneratorSpec:
    """Synthetic score law: p_i ~ Beta(beta_a, beta_b) for the true class,
    off-class probabilities uniform on [0, p_i * off_class_scale].

    ``continuous`` emits Beta-distributed raw scores with the given mean
    (concentration kappa) instead of Bernoulli pass samples.
    """

    n_points: int
    n_classes: int
    m_samples: int
    seed: int
    beta_a: float = 5.0
    beta_b: float = 2.0
    off_class_scale: float = 0.3
    continuous: bool = False
    kappa: float = 10.0

    def __post_init__(self):
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ValueError("Beta parameters must be positive")
        if not 0.0 < self.off_class_scale < 1.0:
            raise ValueError("off_class_scale must lie in (0, 1)")


@dataclass(frozen=True)
class AdversaryOracle:
    """WORST_CASE maps the true class to its certified floor and every other
    class to its certified ceiling under the inverted ball; NONE is identity.
    """

    scheme: SmoothingScheme | None = None
    ball: ThreatModel | None = None
    mode: str = NONE

    def __post_init__(self):
        if self.mode not in (NONE, WORST_CASE):
            raise ValueError(f"unknown adversary mode: {self.mode!r}")
        if self.mode == WORST_CASE and (self.scheme is None or self.ball is None):
            raise ValueError("worst-case adversary needs a scheme and a ball")


@dataclass
class SyntheticData:
    """One exchangeable draw: sample tensor plus the exact pass probabilities
    behind it (per point and class), needed for exact-mode runs and for the
    adversary.
    """

    samples: ScoreSamples
    exact_probs: np.ndarray  # (n_points, n_classes)

    def exact_samples(self) -> ScoreSamples:
        return ScoreSamples(
            self.exact_probs[:, :, None].copy(),
            labels=None if self.samples.labels is None else self.samples.labels.copy(),
            exact_mode=True,
        )


def _rng(seed: int, *key: int) -> np.random.Generator:
    # One keyed Philox stream per (seed, key...) so parallel trials
    # reproduce independent of scheduling. The key tuple goes through
    # SeedSequence spawning, which mixes it into an independent stream
    # (putting it in the Philox counter instead would give overlapping,
    # nearly identical streams one block apart).
    seq = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def _draw_probs(spec: GeneratorSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    labels = rng.integers(0, spec.n_classes, size=spec.n_points)
    p_true = rng.beta(spec.beta_a, spec.beta_b, size=spec.n_points)
    probs = rng.uniform(
        0.0, (p_true * spec.off_class_scale)[:, None], size=(spec.n_points, spec.n_classes)
    )
    probs[np.arange(spec.n_points), labels] = p_true
    return probs, labels


def _draw_samples(
    spec: GeneratorSpec, probs: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    n, k = probs.shape
    if spec.continuous:
        mu = np.clip(probs, 1e-9, 1 - 1e-9)[:, :, None]
        a = mu * spec.kappa
        b = (1.0 - mu) * spec.kappa
        return rng.beta(a, b, size=(n, k, spec.m_samples))
    draws = rng.uniform(size=(n, k, spec.m_samples))
    return (draws < probs[:, :, None]).astype(np.float64)


def generate(spec: GeneratorSpec, trial: int = 0) -> tuple[SyntheticData, SyntheticData]:
    """Calibration and test splits drawn i.i.d. from the same per-point law."""
    out = []
    for split, n in ((0, spec.n_points), (1, spec.n_points)):
        rng = _rng(spec.seed, trial, split)
        probs, labels = _draw_probs(spec, rng)
        values = _draw_samples(spec, probs, rng)
        out.append(SyntheticData(ScoreSamples(values, labels=labels), probs))
    return out[0], out[1]


def attack(exact_probs: np.ndarray, labels: np.ndarray, oracle: AdversaryOracle) -> np.ndarray:
    """Perturb exact pass probabilities to their certified worst case.

    True-class probabilities drop to the certified floor; off-class
    probabilities rise to the certified ceiling under the inverted ball
    (a no-op distinction for symmetric balls).
    """
    if oracle.mode == NONE:
        return exact_probs.copy()
    floor = cert_lower_vec(exact_probs, oracle.scheme, oracle.ball)
    ceiling = cert_upper_vec(exact_probs, oracle.scheme, invert_ball(oracle.ball))
    out = ceiling.copy()
    idx = np.arange(exact_probs.shape[0])
    out[idx, labels] = floor[idx, labels]
    return out


def resample(
    spec: GeneratorSpec, probs: np.ndarray, labels: np.ndarray, rng: np.random.Generator
) -> ScoreSamples:
    """Fresh Bernoulli samples at (possibly perturbed) pass probabilities."""
    values = _draw_samples(replace(spec, continuous=False), probs, rng)
    return ScoreSamples(values, labels=labels)


@dataclass(frozen=True)
class EvalConfig:
    """One evaluation run: a pipeline, an adversary, and a generator."""

    generator: GeneratorSpec
    alpha: float
    mode: str = BINCP
    eta: float = 0.0
    tau: float = 0.5
    exact: bool = False
    scheme: SmoothingScheme | None = None
    ball: ThreatModel | None = None
    adversary: str = NONE
    sigma: float = 0.5  # RSCP baseline inflation scale
    r: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown pipeline mode: {self.mode!r}")


@dataclass
class TrialResult:
    trial: int
    coverage: float
    avg_set_size: float
    calibration_seconds: float
    prediction_seconds: float


@dataclass
class Report:
    trials: list[TrialResult]
    summary: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.summary:
            self.summary = self._summarize()

    def _summarize(self) -> dict[str, dict[str, float]]:
        metrics = {
            "coverage": [t.coverage for t in self.trials],
            "avg_set_size": [t.avg_set_size for t in self.trials],
            "calibration_seconds": [t.calibration_seconds for t in self.trials],
            "prediction_seconds": [t.prediction_seconds for t in self.trials],
        }
        out = {}
        for name, vals in metrics.items():
            arr = np.asarray(vals, dtype=float)
            out[name] = {
                "mean": float(arr.mean()),
                "std": float(arr.std(ddof=0)),
                "min": float(arr.min()),
                "max": float(arr.max()),
            }
        return out


def _coverage_and_size(sets: list[set[int]], labels: np.ndarray, k: int) -> tuple[float, float]:
    covered = sum(1 for s, y in zip(sets, labels) if int(y) in s)
    size = sum(len(s) for s in sets)
    return covered / len(sets), size / len(sets)


def run_trial(config: EvalConfig, trial: int) -> TrialResult:
    spec = config.generator
    if config.exact and config.adversary == NONE:
        # exact mode only consumes the underlying probabilities; skip the
        # Monte-Carlo tensor draw (probs and labels come first in the
        # stream, so results are unchanged)
        spec = replace(spec, m_samples=1)
    cal, test = generate(spec, trial=trial)
    oracle = AdversaryOracle(config.scheme, config.ball, mode=config.adversary)

    test_probs = attack(test.exact_probs, test.samples.labels, oracle)
    if config.adversary == NONE:
        test_data = test
    else:
        rng = _rng(spec.seed, trial, 2)
        test_data = SyntheticData(
            resample(spec, test_probs, test.samples.labels, rng), test_probs
        )

    cal_samples = cal.exact_samples() if config.exact else cal.samples
    test_samples = test_data.exact_samples() if config.exact else test_data.samples
    labels = test.samples.labels
    k = spec.n_classes

    if config.mode == VANILLA:
        t0 = time.perf_counter()
        means = true_class_values(cal_samples).mean(axis=1)
        threshold = vanilla_cp(means, config.alpha)
        t1 = time.perf_counter()
        sets = vanilla_sets(test_samples.values.mean(axis=2), threshold)
        t2 = time.perf_counter()
    elif config.mode == RSCP:
        t0 = time.perf_counter()
        t1 = t0
        sets = rscp_baseline(
            cal_samples,
            test_samples,
            config.alpha,
            sigma=config.sigma,
            r=config.r,
            corrected=config.eta > 0,
            eta=config.eta,
        )
        t2 = time.perf_counter()
    else:
        robust = config.mode == BINCP_ROBUST
        cal_config = CalibrationConfig(
            alpha=config.alpha,
            mode=FIXED_TAU,
            tau=config.tau,
            eta=0.0 if config.exact else config.eta,
            scheme=config.scheme if robust else None,
            ball=config.ball if robust else None,
            exact=config.exact,
        )
        t0 = time.perf_counter()
        result = corrected_calibrate(cal_samples, cal_config)
        t1 = time.perf_counter()
        sets = [ps.classes for ps in predict(result, test_samples)]
        t2 = time.perf_counter()

    coverage, size = _coverage_and_size(sets, labels, k)
    return TrialResult(trial, coverage, size, t1 - t0, t2 - t1)


def evaluate(config: EvalConfig, trials: int, threads: int = 1) -> Report:
    """Run the pipeline over independent resampled trials and aggregate.

    Trials own independent counter-based streams, so results are identical
    whatever the thread count.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    results: list[TrialResult] = []
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(run_trial, config, t): t for t in range(trials)}
            for future, t in futures.items():
                try:
                    results.append(future.result())
                except Exception as exc:
                    raise RuntimeError(f"trial {t} failed") from exc
        results.sort(key=lambda r: r.trial)
    else:
        for t in range(trials):
            try:
                results.append(run_trial(config, t))
            except Exception as exc:
                raise RuntimeError(f"trial {t} failed") from exc
    return Report(results)


def exact_duality_gap(
    p: float, alpha: float, n: int, seed: int, beta_scale: float = 4.0
) -> float:
    """Round-trip gap |p_alpha(tau_alpha(p)) - p| on continuous exact CDFs.

    Each point gets a strictly increasing Beta score CDF; fixed-p
    calibration yields tau_alpha, and fixed-tau calibration at that
    threshold recovers p exactly up to the quantile discretization.
    """
    rng = _rng(seed, 0, 0)
    a = rng.uniform(1.0, beta_scale, size=n)
    b = rng.uniform(1.0, beta_scale, size=n)
    taus = beta_dist.isf(p, a, b)
    tau_alpha = conformal_quantile(taus, alpha)
    p_back = conformal_quantile(beta_dist.sf(tau_alpha, a, b), alpha)
    return abs(p_back - p)
