"""
CONTRARIAN-CASCADES Payoff Module
Gross payoff G(mu, rho, k), value V with fixed + quadratic precision costs,
and the marginal value of precision.
"""

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from bonus import BonusKind, BonusSpec, Popularity, PopularitySource, bonus_value, posterior_cutoff
from gaussian import Belief, SignalModel, action_probabilities, signal_threshold


class PopularityMode(str, Enum):
    """How agents predict the popularity that drives the bonus."""
    PROXY_FROM_BELIEF = "proxy"
    EMPIRICAL_COUNTS = "empirical"


@dataclass(frozen=True)
class ModelParams:
    """
    Signal and cost primitives.

    Precision costs (c/2) rho^2; any positive precision also pays the fixed cost F.
    """
    bonus: BonusSpec
    cost_c: float = 0.6
    cost_F: float = 0.06
    rho_max: float = 50.0
    popularity_mode: PopularityMode = PopularityMode.PROXY_FROM_BELIEF
    tie_action: int = 1  # uninformed action when mu == c exactly

    def __post_init__(self):
        if not isinstance(self.popularity_mode, PopularityMode):
            object.__setattr__(self, 'popularity_mode', PopularityMode(self.popularity_mode))
        if not self.cost_c > 0:
            raise ValueError(f"cost_c must be > 0, got {self.cost_c}")
        if not self.cost_F >= 0:
            raise ValueError(f"cost_F must be >= 0, got {self.cost_F}")
        if not self.rho_max > 0:
            raise ValueError(f"rho_max must be > 0, got {self.rho_max}")
        if self.tie_action not in (0, 1):
            raise ValueError(f"tie_action must be 0 or 1, got {self.tie_action}")

    @property
    def k(self) -> float:
        return self.bonus.k

    def with_k(self, k: float) -> "ModelParams":
        return self.replace(bonus=self.bonus.with_k(k))

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def popularity(self, mu: float, p1_empirical: Optional[float] = None) -> Popularity:
        """Popularity the agent uses at belief mu under this model's mode."""
        if self.popularity_mode is PopularityMode.PROXY_FROM_BELIEF:
            return Popularity.from_belief(mu)
        if p1_empirical is None:
            raise ValueError("Empirical popularity mode needs the observed fraction p1")
        return Popularity(p1_empirical, PopularitySource.EMPIRICAL_COUNTS)

    def to_dict(self) -> dict:
        return {
            'bonus': self.bonus.to_dict(),
            'cost_c': self.cost_c,
            'cost_F': self.cost_F,
            'rho_max': self.rho_max,
            'popularity_mode': self.popularity_mode.value,
            'tie_action': self.tie_action
        }


@dataclass(frozen=True)
class PayoffBreakdown:
    """Expected payoff decomposed into correctness, bonus and costs."""
    correctness: float
    bonus_expectation: float
    gross: float
    cost_precision: float = 0.0
    cost_fixed: float = 0.0
    net: float = field(default=math.nan)

    @classmethod
    def build(
        cls,
        correctness: float,
        bonus_expectation: float,
        cost_precision: float = 0.0,
        cost_fixed: float = 0.0
    ) -> "PayoffBreakdown":
        gross = correctness + bonus_expectation
        return cls(
            correctness=correctness,
            bonus_expectation=bonus_expectation,
            gross=gross,
            cost_precision=cost_precision,
            cost_fixed=cost_fixed,
            net=gross - cost_precision - cost_fixed
        )

    def to_dict(self) -> dict:
        return {
            'correctness': self.correctness,
            'bonus_expectation': self.bonus_expectation,
            'gross': self.gross,
            'cost_precision': self.cost_precision,
            'cost_fixed': self.cost_fixed,
            'net': self.net
        }


@dataclass(frozen=True)
class UninformedChoice:
    """Action taken on the public belief alone."""
    action: int
    correctness: float
    bonus: float
    cutoff: float

    def to_dict(self) -> dict:
        return {
            'action': self.action,
            'correctness': self.correctness,
            'bonus': self.bonus,
            'cutoff': self.cutoff
        }


@dataclass
class GrossCurve:
    """Vectorized gross payoff over a precision grid."""
    rho: np.ndarray
    correctness: np.ndarray
    bonus: np.ndarray

    @property
    def gross(self) -> np.ndarray:
        return self.correctness + self.bonus


def _resolve(mu: float, params: ModelParams, pop: Optional[Popularity]) -> Popularity:
    Belief(mu)
    return pop if pop is not None else params.popularity(mu)


def uninformed_action(mu: float, params: ModelParams, pop: Optional[Popularity] = None) -> UninformedChoice:
    """
    Best action without a private signal: a = 1 iff mu >= c.

    A cutoff at or above 1 forces action 0, at or below 0 forces action 1.
    """
    pop = _resolve(mu, params, pop)
    c = posterior_cutoff(params.bonus, pop).raw

    if mu == c:
        action = params.tie_action
    else:
        action = 1 if mu > c else 0

    correctness = mu if action == 1 else 1.0 - mu
    bonus = bonus_value(params.bonus, pop.of_action(action))
    return UninformedChoice(action=action, correctness=correctness, bonus=bonus, cutoff=c)


def gross_curve(
    mu: float,
    rho: np.ndarray,
    params: ModelParams,
    pop: Optional[Popularity] = None
) -> GrossCurve:
    """
    Gross payoff components for every precision in `rho`.

    Entries with rho = 0 take the uninformed action; positive entries act on
    the signal threshold.
    """
    pop = _resolve(mu, params, pop)
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho < 0):
        raise ValueError("Precision must be >= 0")

    correctness = np.empty_like(rho)
    bonus = np.empty_like(rho)

    zero = rho == 0
    if np.any(zero):
        choice = uninformed_action(mu, params, pop)
        correctness[zero] = choice.correctness
        bonus[zero] = choice.bonus

    positive = ~zero
    if np.any(positive):
        c = posterior_cutoff(params.bonus, pop).raw
        s_star = signal_threshold(mu, c, rho[positive])
        probs = action_probabilities(mu, s_star, rho[positive])
        p1 = probs.p1_unconditional

        correctness[positive] = mu * probs.p1_given_theta1 + (1.0 - mu) * (1.0 - probs.p1_given_theta0)
        b1 = bonus_value(params.bonus, pop.p1)
        b0 = bonus_value(params.bonus, pop.p0)
        bonus[positive] = b1 * p1 + b0 * (1.0 - p1)

    return GrossCurve(rho=rho, correctness=correctness, bonus=bonus)


def gross_payoff(
    mu: float,
    rho: float,
    params: ModelParams,
    pop: Optional[Popularity] = None
) -> PayoffBreakdown:
    """Expected gross payoff at precision rho (costs zeroed)."""
    curve = gross_curve(mu, np.array([rho]), params, pop)
    return PayoffBreakdown.build(float(curve.correctness[0]), float(curve.bonus[0]))


def precision_cost(rho: float, params: ModelParams) -> float:
    return 0.5 * params.cost_c * rho * rho


def value(
    mu: float,
    rho: float,
    params: ModelParams,
    pop: Optional[Popularity] = None
) -> PayoffBreakdown:
    """V = G - (c/2) rho^2 - F * 1{rho > 0}."""
    gross = gross_payoff(mu, rho, params, pop)
    return PayoffBreakdown.build(
        gross.correctness,
        gross.bonus_expectation,
        cost_precision=precision_cost(rho, params),
        cost_fixed=params.cost_F if rho > 0 else 0.0
    )


def marginal_value_psi(
    mu: float,
    rho: float,
    params: ModelParams,
    pop: Optional[Popularity] = None
) -> float:
    """
    Psi = dG/drho - c rho, with dG/drho by central differences.

    Step h = max(1e-5, 1e-4 rho), kept below rho/2; a Richardson combination
    with h/2 is used when the two step sizes disagree.
    """
    if not SignalModel(rho).informative:
        raise ValueError(f"Marginal value needs rho > 0, got {rho}")
    h = min(max(1e-5, 1e-4 * rho), 0.5 * rho)

    points = np.array([rho - h, rho + h, rho - h / 2, rho + h / 2])
    g = gross_curve(mu, points, params, pop).gross
    d_coarse = (g[1] - g[0]) / (2 * h)
    d_fine = (g[3] - g[2]) / h

    derivative = d_fine
    if abs(d_fine - d_coarse) > 1e-6 * max(1.0, abs(d_fine)):
        derivative = (4.0 * d_fine - d_coarse) / 3.0

    return float(derivative - params.cost_c * rho)


def minority_weight(
    mu: float,
    rho: float,
    params: ModelParams,
    pop: Optional[Popularity] = None
) -> float:
    """
    Expected bonus per unit of k: M(mu, rho) = E[b(p_a)] / k.

    At k = 0 the behavior is k-independent, so the weight is evaluated with a
    unit-intensity bonus and the k = 0 action probabilities.
    """
    pop = _resolve(mu, params, pop)
    if params.k > 0:
        return gross_payoff(mu, rho, params, pop).bonus_expectation / params.k

    unit = BonusSpec(params.bonus.kind, 1.0)
    if rho == 0:
        action = uninformed_action(mu, params, pop).action
        return bonus_value(unit, pop.of_action(action))

    c = posterior_cutoff(params.bonus, pop).raw
    probs = action_probabilities(mu, signal_threshold(mu, c, rho), rho)
    p1 = probs.p1_unconditional
    return bonus_value(unit, pop.p1) * p1 + bonus_value(unit, pop.p0) * (1.0 - p1)


if __name__ == "__main__":
    params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.4), cost_c=0.6, cost_F=0.06)
    print("uninformed:", uninformed_action(0.6, params).to_dict())
    print("gross(0.5, 1):", gross_payoff(0.5, 1.0, params).to_dict())
    print("value(0.5, 1):", value(0.5, 1.0, params).to_dict())
    print("psi(0.5, 0.3):", marginal_value_psi(0.5, 0.3, params))
