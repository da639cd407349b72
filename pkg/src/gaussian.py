"""
CONTRARIAN-CASCADES Gaussian Signal Technology
Likelihood ratios, signal thresholds, action probabilities and Bayes updates
for signals s | theta ~ N(theta, 1/rho).
"""

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

ArrayLike = Union[float, np.ndarray]

# Probabilities entering logit are clipped into [EPS, 1 - EPS]
DEFAULT_CLIP_EPS = 1e-9


class ClipWarning(UserWarning):
    """A probability was clipped away from 0 or 1 before taking log-odds."""


class BeliefUpdateError(RuntimeError):
    """Observed action had zero likelihood under both states."""


@dataclass(frozen=True)
class SignalModel:
    """Gaussian signal with precision rho (1 / variance); state means 0 and 1."""
    rho: float

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0:
            raise ValueError(f"Precision must be >= 0, got {self.rho}")

    @property
    def informative(self) -> bool:
        return self.rho > 0

    @property
    def variance(self) -> float:
        if self.rho == 0:
            return math.inf
        return 1.0 / self.rho

    def to_dict(self) -> dict:
        return {'rho': self.rho}


@dataclass(frozen=True)
class Belief:
    """Public probability that theta = 1, kept strictly inside (0, 1)."""
    mu: float

    def __post_init__(self):
        if not (0.0 < self.mu < 1.0):
            raise ValueError(f"Belief must lie in (0, 1), got {self.mu}")

    @classmethod
    def clipped(cls, mu: float, eps: float = DEFAULT_CLIP_EPS, warn: bool = False) -> "Belief":
        return cls(clip_probability(mu, eps, warn))

    @property
    def log_odds(self) -> float:
        return logit(self.mu)

    def to_dict(self) -> dict:
        return {'mu': self.mu}


@dataclass(frozen=True)
class ActionProbabilities:
    """Probability of action 1 conditional on each state, and unconditionally."""
    p1_given_theta1: float
    p1_given_theta0: float
    p1_unconditional: float

    def likelihood(self, action: int, theta: int) -> float:
        """P(a = action | theta)."""
        p1 = self.p1_given_theta1 if theta == 1 else self.p1_given_theta0
        return p1 if action == 1 else 1.0 - p1

    @property
    def informative(self) -> bool:
        return self.p1_given_theta1 != self.p1_given_theta0

    @classmethod
    def deterministic(cls, action: int) -> "ActionProbabilities":
        """Likelihoods of an action taken without looking at any signal."""
        p = 1.0 if action == 1 else 0.0
        return cls(p, p, p)

    def to_dict(self) -> dict:
        return {
            'p1_given_theta1': self.p1_given_theta1,
            'p1_given_theta0': self.p1_given_theta0,
            'p1_unconditional': self.p1_unconditional
        }


def clip_probability(p: float, eps: float = DEFAULT_CLIP_EPS, warn: bool = False) -> float:
    """Clip a probability into [eps, 1 - eps], optionally warning when it moves."""
    clipped = min(1.0 - eps, max(eps, p))
    if warn and clipped != p:
        warnings.warn(f"Probability {p!r} clipped to {clipped!r}", ClipWarning, stacklevel=2)
    return clipped


def logit(p: ArrayLike) -> ArrayLike:
    """ln(p / (1 - p)); p must lie strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError(f"logit is undefined at {p}; clip into (0, 1) first")
    out = special.logit(arr)
    return float(out) if np.ndim(out) == 0 else out


def inverse_logit(x: ArrayLike) -> ArrayLike:
    out = special.expit(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def normal_cdf(x: ArrayLike) -> ArrayLike:
    """Standard normal cdf via the complementary error function (scipy ndtr)."""
    out = special.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def normal_pdf(x: ArrayLike) -> ArrayLike:
    arr = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * arr * arr) / math.sqrt(2.0 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


def log_likelihood_ratio(s: float, rho: float) -> float:
    """l(s) = rho (s - 1/2)."""
    return rho * (s - 0.5)


def posterior_from_signal(mu: float, s: float, rho: float) -> float:
    """Private posterior Pr(theta = 1 | mu, s) computed in log-odds space."""
    return inverse_logit(Belief.clipped(mu).log_odds + log_likelihood_ratio(s, rho))


def signal_threshold(
    mu: float,
    cutoff: float,
    rho: ArrayLike,
    eps: float = DEFAULT_CLIP_EPS,
    warn_clip: bool = False
) -> ArrayLike:
    """
    Signal value s* at which the agent switches to action 1.

    s* = 1/2 + (logit(c) - logit(mu)) / rho. A cutoff at or beyond 1 (or 0)
    forces action 0 (or 1) and is reported as +inf (-inf).

    Args:
        mu: Public belief
        cutoff: Unclamped posterior cutoff
        rho: Precision (scalar or array, all entries > 0)
        eps: Clip applied to the cutoff and belief before logit
        warn_clip: Emit ClipWarning when a clip is applied

    Returns:
        Threshold(s), same shape as rho
    """
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0):
        raise ValueError("Signal threshold needs rho > 0; use the uninformed action at rho = 0")

    if cutoff >= 1.0:
        out = np.full_like(rho_arr, math.inf)
    elif cutoff <= 0.0:
        out = np.full_like(rho_arr, -math.inf)
    else:
        shift = (logit(clip_probability(cutoff, eps, warn_clip))
                 - logit(clip_probability(mu, eps, warn_clip)))
        out = 0.5 + shift / rho_arr
    return float(out) if np.ndim(out) == 0 else out


def threshold_k_sensitivity(mu: float, k: float, rho: float) -> float:
    """
    Analytic ds*/dk for the proportional bonus with the proxy popularity.

    ds*/dk = (mu - 1/2) / (rho * c (1 - c)), c the proxy cutoff.
    """
    if not SignalModel(rho).informative:
        raise ValueError(f"Precision must be > 0, got {rho}")
    c = 0.5 + k * (mu - 0.5)
    if not (0.0 < c < 1.0):
        raise ValueError(f"Proxy cutoff {c} outside (0, 1); threshold is forced")
    return (mu - 0.5) / (rho * c * (1.0 - c))


def action_probabilities(mu: float, s_star: ArrayLike, rho: ArrayLike):
    """
    Choice probabilities implied by the rule a = 1 iff s >= s*.

    Works elementwise on arrays; with array inputs the three fields are arrays.
    """
    s_arr = np.asarray(s_star, dtype=float)
    rho_arr = np.asarray(rho, dtype=float)
    sqrt_rho = np.sqrt(rho_arr)

    with np.errstate(invalid='ignore'):
        z1 = (s_arr - 1.0) * sqrt_rho
        z0 = s_arr * sqrt_rho
    # Forced actions: s* = +inf never chooses 1, s* = -inf always does
    z1 = np.where(np.isposinf(s_arr), math.inf, np.where(np.isneginf(s_arr), -math.inf, z1))
    z0 = np.where(np.isposinf(s_arr), math.inf, np.where(np.isneginf(s_arr), -math.inf, z0))

    p11 = special.ndtr(-z1)
    p10 = special.ndtr(-z0)
    p1 = mu * p11 + (1.0 - mu) * p10

    if np.ndim(p11) == 0:
        return ActionProbabilities(float(p11), float(p10), float(p1))
    return ActionProbabilities(p11, p10, p1)


def bayes_update(mu: float, observed_action: int, likelihoods: ActionProbabilities) -> float:
    """
    Observer's posterior after seeing one action.

    Uninformative actions (equal likelihoods under both states) return mu unchanged.
    """
    if observed_action not in (0, 1):
        raise ValueError(f"Action must be 0 or 1, got {observed_action}")

    l1 = likelihoods.likelihood(observed_action, 1)
    l0 = likelihoods.likelihood(observed_action, 0)
    if l1 == l0:
        if l1 == 0.0:
            raise BeliefUpdateError(f"Action {observed_action} has zero likelihood in both states")
        return mu

    denominator = mu * l1 + (1.0 - mu) * l0
    if denominator <= 0.0:
        raise BeliefUpdateError(f"Action {observed_action} has zero likelihood at mu={mu}")
    return mu * l1 / denominator


if __name__ == "__main__":
    print("Phi(0.5) =", normal_cdf(0.5))
    s_star = signal_threshold(0.6, 0.55, 2.0)
    print("s*(0.6, 0.55, 2) =", s_star)
    probs = action_probabilities(0.5, 0.5, 1.0)
    print("P(a=1|theta) =", probs.to_dict())
    print("posterior after a=1:", bayes_update(0.5, 1, probs))
