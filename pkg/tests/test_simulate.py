import numpy as np
import pytest

from bincp import certify, simulate


SPEC = simulate.GeneratorSpec(n_points=50, n_classes=4, m_samples=30, seed=123)


class TestGenerator:
    def test_deterministic(self):
        a_cal, a_test = simulate.generate(SPEC)
        b_cal, b_test = simulate.generate(SPEC)
        assert np.array_equal(a_cal.samples.values, b_cal.samples.values)
        assert np.array_equal(a_test.samples.values, b_test.samples.values)
        assert np.array_equal(a_cal.samples.labels, b_cal.samples.labels)

    def test_splits_differ(self):
        cal, test = simulate.generate(SPEC)
        assert not np.array_equal(cal.samples.values, test.samples.values)

    def test_trials_differ(self):
        a, _ = simulate.generate(SPEC, trial=0)
        b, _ = simulate.generate(SPEC, trial=1)
        assert not np.array_equal(a.samples.values, b.samples.values)

    def test_bernoulli_values(self):
        cal, _ = simulate.generate(SPEC)
        assert set(np.unique(cal.samples.values)) <= {0.0, 1.0}

    def test_continuous_values(self):
        spec = simulate.GeneratorSpec(20, 3, 10, seed=1, continuous=True)
        cal, _ = simulate.generate(spec)
        vals = cal.samples.values
        assert np.all((vals >= 0) & (vals <= 1))
        assert len(np.unique(vals)) > 100

    def test_off_class_probs_below_scaled_true(self):
        cal, _ = simulate.generate(SPEC)
        n = SPEC.n_points
        idx = np.arange(n)
        true_p = cal.exact_probs[idx, cal.samples.labels]
        off = cal.exact_probs.copy()
        off[idx, cal.samples.labels] = 0.0
        assert np.all(off <= (true_p * SPEC.off_class_scale)[:, None] + 1e-12)

    def test_empirical_fractions_match_exact_probs(self):
        # law of large numbers at m = 1e5
        spec = simulate.GeneratorSpec(10, 3, 100_000, seed=3)
        cal, _ = simulate.generate(spec)
        fracs = cal.samples.values.mean(axis=2)
        assert np.max(np.abs(fracs - cal.exact_probs)) < 0.01

    def test_exact_samples_view(self):
        cal, _ = simulate.generate(SPEC)
        exact = cal.exact_samples()
        assert exact.exact_mode
        assert exact.m_samples == 1
        assert np.array_equal(exact.values[:, :, 0], cal.exact_probs)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            simulate.GeneratorSpec(10, 2, 5, seed=0, beta_a=0.0)
        with pytest.raises(ValueError):
            simulate.GeneratorSpec(10, 2, 5, seed=0, off_class_scale=1.5)


class TestAdversary:
    SCHEME = certify.gaussian(0.5)
    BALL = certify.l2_ball(0.25)

    def test_none_is_identity(self):
        cal, _ = simulate.generate(SPEC)
        oracle = simulate.AdversaryOracle(mode=simulate.NONE)
        out = simulate.attack(cal.exact_probs, cal.samples.labels, oracle)
        assert np.array_equal(out, cal.exact_probs)

    def test_worst_case_moves_to_certified_bounds(self):
        cal, _ = simulate.generate(SPEC)
        oracle = simulate.AdversaryOracle(self.SCHEME, self.BALL, mode=simulate.WORST_CASE)
        out = simulate.attack(cal.exact_probs, cal.samples.labels, oracle)
        idx = np.arange(SPEC.n_points)
        labels = cal.samples.labels
        want_true = certify.cert_lower_vec(
            cal.exact_probs[idx, labels], self.SCHEME, self.BALL
        )
        assert np.allclose(out[idx, labels], want_true)
        # off-class entries only went up
        mask = np.ones_like(out, dtype=bool)
        mask[idx, labels] = False
        assert np.all(out[mask] >= cal.exact_probs[mask] - 1e-12)

    def test_worst_case_frozen_values(self):
        probs = np.array([[0.9, 0.5]])
        labels = np.array([0])
        oracle = simulate.AdversaryOracle(self.SCHEME, self.BALL, mode=simulate.WORST_CASE)
        out = simulate.attack(probs, labels, oracle)
        assert out[0, 0] == pytest.approx(0.782760919572694805, abs=1e-12)
        # off class rises by the same r/sigma = 0.5 shift: Phi(0.5)
        assert out[0, 1] == pytest.approx(0.691462461274013104, abs=1e-12)

    def test_worst_case_requires_scheme(self):
        with pytest.raises(ValueError, match="scheme"):
            simulate.AdversaryOracle(mode=simulate.WORST_CASE)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="adversary"):
            simulate.AdversaryOracle(mode="chaotic")


class TestEvaluate:
    def _config(self, **kw):
        defaults = dict(
            generator=simulate.GeneratorSpec(60, 4, 40, seed=5),
            alpha=0.1,
            mode=simulate.BINCP,
            eta=0.01,
            tau=0.5,
        )
        defaults.update(kw)
        return simulate.EvalConfig(**defaults)

    def test_single_trial_report(self):
        report = simulate.evaluate(self._config(), trials=1)
        assert len(report.trials) == 1
        assert report.summary["coverage"]["std"] == 0.0
        assert 0.0 <= report.trials[0].coverage <= 1.0

    def test_threaded_matches_sequential(self):
        cfg = self._config()
        seq = simulate.evaluate(cfg, trials=6, threads=1)
        par = simulate.evaluate(cfg, trials=6, threads=4)
        assert [t.coverage for t in seq.trials] == [t.coverage for t in par.trials]
        assert [t.avg_set_size for t in seq.trials] == [
            t.avg_set_size for t in par.trials
        ]

    def test_clean_coverage_near_nominal(self):
        cfg = self._config(
            generator=simulate.GeneratorSpec(100, 4, 60, seed=9), eta=0.0
        )
        report = simulate.evaluate(cfg, trials=60)
        mean = report.summary["coverage"]["mean"]
        assert mean >= 0.9 - 0.02

    def test_adversary_lowers_unprotected_coverage(self):
        scheme, ball = certify.gaussian(0.5), certify.l2_ball(0.25)
        clean = simulate.evaluate(self._config(eta=0.0), trials=30)
        attacked = simulate.evaluate(
            self._config(
                eta=0.0, scheme=scheme, ball=ball, adversary=simulate.WORST_CASE
            ),
            trials=30,
        )
        assert (
            attacked.summary["coverage"]["mean"] < clean.summary["coverage"]["mean"]
        )

    def test_robust_mode_restores_coverage(self):
        scheme, ball = certify.gaussian(0.5), certify.l2_ball(0.25)
        robust = simulate.evaluate(
            self._config(
                mode=simulate.BINCP_ROBUST,
                scheme=scheme,
                ball=ball,
                adversary=simulate.WORST_CASE,
                eta=0.01,
            ),
            trials=30,
        )
        assert robust.summary["coverage"]["mean"] >= 0.9 - 0.03

    def test_vanilla_and_rscp_modes_run(self):
        for mode in (simulate.VANILLA, simulate.RSCP):
            report = simulate.evaluate(self._config(mode=mode, eta=0.0), trials=3)
            assert len(report.trials) == 3

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError, match="mode"):
            self._config(mode="oracle")

    def test_needs_a_trial(self):
        with pytest.raises(ValueError):
            simulate.evaluate(self._config(), trials=0)

    def test_trial_failure_is_labelled(self):
        cfg = self._config(
            generator=simulate.GeneratorSpec(2, 4, 40, seed=5), alpha=0.01
        )
        # alpha far too small for n=2 triggers the degenerate fallback, which
        # is fine; force a real failure instead with an impossible tau history
        bad = simulate.EvalConfig(
            generator=simulate.GeneratorSpec(10, 3, 5, seed=1),
            alpha=0.1,
            mode=simulate.RSCP,
            eta=0.05,
        )
        # RSCP corrected path quantiles at alpha - eta = 0.05 with n=10 ->
        # j = 0 -> -inf threshold; not an error. Use a generator mismatch:
        with pytest.raises(RuntimeError, match="trial 0 failed"):
            simulate.evaluate(
                simulate.EvalConfig(
                    generator=simulate.GeneratorSpec(10, 3, 5, seed=1),
                    alpha=0.1,
                    mode=simulate.BINCP_ROBUST,
                    scheme=certify.uniform(0.5),
                    ball=certify.l2_ball(0.1),  # incompatible pairing
                ),
                trials=2,
            )


def test_exact_duality_gap_is_tiny():
    for p, alpha, n in [(0.5, 0.1, 100), (0.8, 0.05, 250), (0.3, 0.2, 60)]:
        assert simulate.exact_duality_gap(p, alpha, n, seed=17) <= 1.0 / (n + 1)
