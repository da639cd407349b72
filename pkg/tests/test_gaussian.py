"""
Unit tests for the Gaussian signal technology.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from bonus import proxy_cutoff
from gaussian import (
    ActionProbabilities,
    Belief,
    BeliefUpdateError,
    ClipWarning,
    SignalModel,
    action_probabilities,
    bayes_update,
    clip_probability,
    logit,
    normal_cdf,
    posterior_from_signal,
    signal_threshold,
    threshold_k_sensitivity,
)


class TestPrimitives:
    """Test suite for cdf, logit and clipping."""

    def test_normal_cdf_reference_value(self):
        assert normal_cdf(0.5) == pytest.approx(0.6914624612740131, rel=1e-12)
        assert normal_cdf(0.0) == 0.5

    def test_normal_cdf_vectorized(self):
        out = normal_cdf(np.array([-np.inf, 0.0, np.inf]))
        assert out.tolist() == [0.0, 0.5, 1.0]

    def test_logit_rejects_boundary(self):
        with pytest.raises(ValueError):
            logit(0.0)
        with pytest.raises(ValueError):
            logit(1.0)

    def test_clip_probability_warns_when_asked(self):
        with pytest.warns(ClipWarning):
            assert clip_probability(1.0, eps=1e-9, warn=True) == 1.0 - 1e-9

    def test_clip_probability_identity_inside(self):
        assert clip_probability(0.3) == 0.3

    def test_signal_model_validation(self):
        assert SignalModel(0.0).variance == math.inf
        assert SignalModel(4.0).variance == 0.25
        with pytest.raises(ValueError):
            SignalModel(-1.0)

    def test_belief_validation(self):
        assert Belief(0.5).log_odds == 0.0
        with pytest.raises(ValueError):
            Belief(1.0)
        assert 0.0 < Belief.clipped(1.0).mu < 1.0

    def test_posterior_clips_degenerate_prior(self):
        assert 0.0 < posterior_from_signal(0.0, 3.0, 2.0) < 1e-6
        assert posterior_from_signal(0.5, 0.5, 2.0) == 0.5

    def test_sensitivity_needs_informative_signal(self):
        for rho in (0.0, -1.0):
            with pytest.raises(ValueError):
                threshold_k_sensitivity(0.4, 0.2, rho)


class TestSignalThreshold:
    """Test suite for s* and its k-sensitivity."""

    def test_reference_threshold(self):
        assert signal_threshold(0.6, 0.55, 2.0) == pytest.approx(0.3976028, abs=1e-6)

    def test_center_threshold_exact(self):
        for rho in (0.1, 1.0, 10.0):
            assert signal_threshold(0.5, 0.5, rho) == 0.5

    def test_forced_actions(self):
        assert signal_threshold(0.6, 1.0, 1.0) == math.inf
        assert signal_threshold(0.6, 1.3, 1.0) == math.inf
        assert signal_threshold(0.6, 0.0, 1.0) == -math.inf

    def test_requires_positive_precision(self):
        with pytest.raises(ValueError):
            signal_threshold(0.6, 0.5, 0.0)

    def test_vectorized_over_precision(self):
        rho = np.array([0.5, 1.0, 2.0])
        out = signal_threshold(0.6, 0.55, rho)
        assert out.shape == (3,)
        assert out[2] == pytest.approx(signal_threshold(0.6, 0.55, 2.0))

    def test_threshold_is_posterior_indifference_point(self):
        mu, c, rho = 0.6, 0.55, 2.0
        s_star = signal_threshold(mu, c, rho)
        assert posterior_from_signal(mu, s_star, rho) == pytest.approx(c, abs=1e-12)

    def test_k_sensitivity_examples(self):
        assert threshold_k_sensitivity(0.6, 0.0, 1.0) == pytest.approx(0.4)
        assert threshold_k_sensitivity(0.4, 0.2, 2.0) == pytest.approx(-0.2003205, abs=1e-7)
        assert threshold_k_sensitivity(0.5, 0.7, 1.0) == 0.0

    def test_k_sensitivity_matches_finite_difference(self):
        mu, k, rho, h = 0.62, 0.3, 1.5, 1e-6

        def s(kk):
            return signal_threshold(mu, 0.5 + kk * (mu - 0.5), rho)

        fd = (s(k + h) - s(k - h)) / (2 * h)
        assert fd == pytest.approx(threshold_k_sensitivity(mu, k, rho), rel=1e-6)

    def test_k_sensitivity_rejects_forced_cutoff(self):
        with pytest.raises(ValueError):
            threshold_k_sensitivity(0.9, 2.0, 1.0)
        with pytest.raises(ValueError):
            threshold_k_sensitivity(0.6, 0.5, 0.0)


class TestActionsAndUpdates:
    """Test suite for choice probabilities and the observer's update."""

    def test_center_probabilities(self):
        probs = action_probabilities(0.5, 0.5, 1.0)
        assert probs.p1_given_theta1 == pytest.approx(0.6914624612740131)
        assert probs.p1_given_theta0 == pytest.approx(1.0 - 0.6914624612740131)
        assert probs.p1_unconditional == pytest.approx(0.5)

    def test_infinite_thresholds(self):
        never = action_probabilities(0.6, math.inf, 1.0)
        always = action_probabilities(0.6, -math.inf, 1.0)
        assert (never.p1_given_theta1, never.p1_given_theta0) == (0.0, 0.0)
        assert (always.p1_given_theta1, always.p1_given_theta0) == (1.0, 1.0)
        assert not never.informative

    def test_bayes_update_after_informative_action(self):
        probs = action_probabilities(0.5, 0.5, 1.0)
        assert bayes_update(0.5, 1, probs) == pytest.approx(0.6914624612740131)
        assert bayes_update(0.5, 0, probs) == pytest.approx(1.0 - 0.6914624612740131)

    def test_uninformative_action_leaves_belief_unchanged(self):
        mu = 0.6180339887
        assert bayes_update(mu, 1, ActionProbabilities.deterministic(1)) == mu

    def test_impossible_action_raises(self):
        with pytest.raises(BeliefUpdateError):
            bayes_update(0.5, 0, ActionProbabilities.deterministic(1))

    def test_invalid_action_rejected(self):
        with pytest.raises(ValueError):
            bayes_update(0.5, 2, ActionProbabilities.deterministic(1))

    def test_update_is_a_martingale(self):
        mu = 0.37
        probs = action_probabilities(mu, signal_threshold(mu, 0.45, 0.8), 0.8)
        p1 = probs.p1_unconditional
        expected = p1 * bayes_update(mu, 1, probs) + (1 - p1) * bayes_update(mu, 0, probs)
        assert expected == pytest.approx(mu, abs=1e-14)


class TestGridScans:
    """Test suite for orderings over (mu, s*, rho) grids."""

    def test_mlrp_ordering(self):
        thresholds = np.concatenate([[-np.inf], np.linspace(-4.0, 5.0, 91), [np.inf]])
        for mu in (0.02, 0.3, 0.5, 0.77, 0.98):
            for rho in (0.01, 0.3, 1.0, 5.0, 50.0):
                probs = action_probabilities(mu, thresholds, np.full_like(thresholds, rho))
                assert np.all(probs.p1_given_theta1 >= probs.p1_given_theta0)
                for p in (probs.p1_given_theta1, probs.p1_given_theta0, probs.p1_unconditional):
                    assert np.all((p >= 0.0) & (p <= 1.0))

    def test_threshold_moves_with_intensity_on_each_side(self):
        ks = np.round(np.arange(0.0, 1.001, 0.05), 10)
        for mu in (0.1, 0.3, 0.45, 0.55, 0.7, 0.9):
            for rho in (0.5, 2.0):
                s = np.array([signal_threshold(mu, proxy_cutoff(float(k), mu), rho) for k in ks])
                if mu > 0.5:
                    assert np.all(np.diff(s) > 0.0)
                else:
                    assert np.all(np.diff(s) < 0.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
