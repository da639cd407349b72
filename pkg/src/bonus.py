"""
CONTRARIAN-CASCADES Bonus Module
Contrarian bonus functions, bonus differentials and posterior cutoffs.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple


class BonusKind(str, Enum):
    """Parametric family of the nonconformity bonus."""
    FIXED_INDICATOR = "fixed"
    PROPORTIONAL = "proportional"


class PopularitySource(str, Enum):
    """Where the popularity of action 1 comes from."""
    PROXY_FROM_BELIEF = "proxy"
    EMPIRICAL_COUNTS = "empirical"


@dataclass(frozen=True)
class BonusSpec:
    """Contrarian bonus b(p; k) with intensity k (utility units)."""
    kind: BonusKind
    k: float

    def __post_init__(self):
        if not isinstance(self.kind, BonusKind):
            object.__setattr__(self, 'kind', BonusKind(self.kind))
        if not math.isfinite(self.k) or self.k < 0:
            raise ValueError(f"Contrarian intensity k must be >= 0, got {self.k}")

    def with_k(self, k: float) -> "BonusSpec":
        return BonusSpec(self.kind, k)

    def to_dict(self) -> dict:
        return {'kind': self.kind.value, 'k': self.k}


@dataclass(frozen=True)
class Popularity:
    """Fraction p1 of predecessors (predicted or observed) choosing action 1."""
    p1: float
    source: PopularitySource = PopularitySource.PROXY_FROM_BELIEF

    def __post_init__(self):
        if not isinstance(self.source, PopularitySource):
            object.__setattr__(self, 'source', PopularitySource(self.source))
        _check_unit_interval(self.p1, "p1")

    @property
    def p0(self) -> float:
        return 1.0 - self.p1

    def of_action(self, action: int) -> float:
        """Popularity of the given action."""
        return self.p1 if action == 1 else self.p0

    @classmethod
    def from_belief(cls, mu: float) -> "Popularity":
        return cls(mu, PopularitySource.PROXY_FROM_BELIEF)

    @classmethod
    def from_counts(cls, ones: int, total: int) -> "Popularity":
        """Empirical popularity; an empty history has no modal action (p1 = 1/2)."""
        if total < 0 or ones < 0 or ones > total:
            raise ValueError(f"Invalid action counts: {ones} of {total}")
        p1 = 0.5 if total == 0 else ones / total
        return cls(p1, PopularitySource.EMPIRICAL_COUNTS)

    def to_dict(self) -> dict:
        return {'p1': self.p1, 'source': self.source.value}


@dataclass(frozen=True)
class Cutoff:
    """Posterior cutoff: the raw algebraic value and its [0, 1] clamp."""
    raw: float
    clamped: float

    def to_dict(self) -> dict:
        return {'raw': self.raw, 'clamped': self.clamped}


def _check_unit_interval(p: float, name: str):
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")


def bonus_value(spec: BonusSpec, p: float) -> float:
    """
    Bonus earned by choosing an action with popularity p.

    Fixed-indicator pays k strictly below one half (no bonus in ties);
    proportional pays k(1 - p).
    """
    _check_unit_interval(p, "popularity")
    if spec.kind is BonusKind.FIXED_INDICATOR:
        return spec.k if p < 0.5 else 0.0
    return spec.k * (1.0 - p)


def bonus_differential(spec: BonusSpec, pop: Popularity) -> float:
    """Delta = b(p1) - b(p0)."""
    if spec.kind is BonusKind.PROPORTIONAL:
        # exact linear form
        return spec.k * (1.0 - 2.0 * pop.p1)
    return bonus_value(spec, pop.p1) - bonus_value(spec, pop.p0)


def posterior_cutoff(spec: BonusSpec, pop: Popularity) -> Cutoff:
    """
    Posterior threshold c = (1 - Delta) / 2: choose action 1 iff Pr(theta=1) >= c.

    The raw value may leave [0, 1] when k > 1; the clamp is for decision use only.
    """
    if spec.kind is BonusKind.PROPORTIONAL:
        raw = 0.5 + spec.k * (pop.p1 - 0.5)
    else:
        raw = (1.0 - bonus_differential(spec, pop)) / 2.0
    return Cutoff(raw=raw, clamped=min(1.0, max(0.0, raw)))


def proxy_cutoff(k: float, mu: float) -> float:
    """
    Proportional-bonus cutoff with popularity replaced by the public belief.

    Returned unclamped: for k > 1 it can leave [0, 1].
    """
    if not (0.0 < mu < 1.0):
        raise ValueError(f"Belief must lie in (0, 1), got {mu}")
    if k < 0:
        raise ValueError(f"Contrarian intensity k must be >= 0, got {k}")
    return 0.5 + k * (mu - 0.5)


def proxy_error_bound(spec: BonusSpec, p1: float, mu: float) -> Tuple[float, float]:
    """
    Error of the popularity-belief proxy for the proportional bonus.

    Args:
        spec: Bonus specification (must be proportional)
        p1: Realized or predicted popularity of action 1
        mu: Public belief

    Returns:
        Tuple of (bound k|p1 - mu|, exact gap |c - c_proxy|)
    """
    if spec.kind is not BonusKind.PROPORTIONAL:
        raise ValueError("Proxy error bound is only defined for the proportional bonus")
    exact = posterior_cutoff(spec, Popularity(p1, PopularitySource.EMPIRICAL_COUNTS)).raw
    gap = abs(exact - proxy_cutoff(spec.k, mu))
    bound = spec.k * abs(p1 - mu)
    return bound, gap


def proxy_sign_agreement(k: float, p1: float, mu: float) -> bool:
    """Whether the exact and proxy cutoffs shift away from 1/2 in the same direction."""
    exact_shift = k * (p1 - 0.5)
    proxy_shift = proxy_cutoff(k, mu) - 0.5
    return _sign(exact_shift) == _sign(proxy_shift)


def llr_cutoff(spec: BonusSpec, pop: Popularity) -> float:
    """
    The cutoff in log-odds units: choose 1 iff logit(mu) + llr(s) >= tau.

    Returns +inf / -inf when the posterior cutoff is at or beyond 1 / 0.
    """
    c = posterior_cutoff(spec, pop).raw
    if c >= 1.0:
        return math.inf
    if c <= 0.0:
        return -math.inf
    return math.log(c / (1.0 - c))


def llr_cutoff_linear(k: float, mu: float) -> float:
    """First-order expansion tau ~ 4k(mu - 1/2) of logit(c) near the central belief."""
    return 4.0 * k * (mu - 0.5)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


if __name__ == "__main__":
    spec = BonusSpec(BonusKind.PROPORTIONAL, k=0.4)
    pop = Popularity(0.75)
    print("b(0.75) =", bonus_value(spec, 0.75))
    print("Delta   =", bonus_differential(spec, pop))
    print("cutoff  =", posterior_cutoff(spec, pop))
    print("proxy   =", proxy_cutoff(0.5, 0.6))
    print("bound   =", proxy_error_bound(spec, 0.55, 0.5))
