"""
CONTRARIAN-CASCADES Welfare Module
Per-belief and aggregate welfare under an evaluator weight on the bonus,
welfare curves in k and their shape.
"""

import math
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from payoff import ModelParams, gross_payoff, precision_cost
from precision import EquilibriumPoint, default_popularity, precision_profile, solve_precision

SHAPE_TOL = 1e-9

# Published light-cost calibration (c, F) and its lambda = 1 table: k -> (avg, min, max)
PUBLISHED_CALIBRATION = (0.6, 0.06)
PUBLISHED_TABLE: Dict[float, Tuple[float, float, float]] = {
    0.0: (0.6569, 0.5348, 0.7416),
    0.2: (0.6792, 0.5519, 0.7643),
    0.4: (0.6877, 0.5620, 0.7727),
    0.6: (0.6830, 0.5580, 0.7687),
    0.8: (0.6681, 0.5430, 0.7545),
}

# Column order of the comparison table
COMPARISON_COLUMNS = ['k', 'avg', 'min', 'max', 'paper_avg', 'paper_min', 'paper_max', 'delta']


@dataclass(frozen=True)
class EvaluatorWeight:
    """Weight the social evaluator puts on the bonus; never changes behavior."""
    lam: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise ValueError(f"Evaluator weight must lie in [0, 1], got {self.lam}")

    def to_dict(self) -> dict:
        return {'lambda': self.lam}


@dataclass(frozen=True)
class WelfareRecord:
    """Welfare at one belief, decomposed."""
    mu: float
    k: float
    lam: float
    correctness: float
    bonus_expectation: float
    precision_cost: float
    fixed_cost: float
    welfare: float

    def to_dict(self) -> dict:
        return {
            'mu': self.mu,
            'k': self.k,
            'lambda': self.lam,
            'correctness': self.correctness,
            'bonus_expectation': self.bonus_expectation,
            'precision_cost': self.precision_cost,
            'fixed_cost': self.fixed_cost,
            'welfare': self.welfare
        }


@dataclass(frozen=True)
class BeliefDistribution:
    """Equal-weight uniform grid of beliefs."""
    lo: float = 0.02
    hi: float = 0.98
    n_points: int = 97
    kind: str = "UniformGrid"

    def __post_init__(self):
        if self.kind != "UniformGrid":
            raise ValueError(f"Unsupported belief distribution: {self.kind}")
        if not (0.0 < self.lo < self.hi < 1.0):
            raise ValueError(f"Need 0 < lo < hi < 1, got lo={self.lo}, hi={self.hi}")
        if self.n_points < 2:
            raise ValueError(f"Belief grid needs at least 2 points, got {self.n_points}")

    @property
    def grid(self) -> np.ndarray:
        return np.round(np.linspace(self.lo, self.hi, self.n_points), 10)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n_points, 1.0 / self.n_points)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'lo': self.lo, 'hi': self.hi, 'n_points': self.n_points}


@dataclass(frozen=True)
class AggregateWelfare:
    """Equal-weight summary of welfare over a belief grid at one k."""
    k: float
    lam: float
    average: float
    minimum: float
    maximum: float
    n_points: int

    def to_dict(self) -> dict:
        return {
            'k': self.k,
            'lambda': self.lam,
            'avg': self.average,
            'min': self.minimum,
            'max': self.maximum,
            'n_points': self.n_points
        }


@dataclass
class WelfareCurve:
    """Aggregate welfare along a k grid for one evaluator weight."""
    lam: float
    points: List[AggregateWelfare] = field(default_factory=list)

    @property
    def k_grid(self) -> np.ndarray:
        return np.array([p.k for p in self.points])

    @property
    def averages(self) -> np.ndarray:
        return np.array([p.average for p in self.points])

    def to_dict(self) -> dict:
        return {'lambda': self.lam, 'points': [p.to_dict() for p in self.points]}


class WelfareShape(str, Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    INVERTED_U = "InvertedU"
    OTHER = "Other"


@dataclass(frozen=True)
class KDerivative:
    """Right derivative in k at k = 0 with its step-consistency diagnostic."""
    estimate: float
    coarse: float
    fine: float
    steps: Tuple[float, float]

    @property
    def discrepancy(self) -> float:
        return abs(self.fine - self.coarse)

    def to_dict(self) -> dict:
        return {
            'estimate': self.estimate,
            'coarse': self.coarse,
            'fine': self.fine,
            'steps': list(self.steps),
            'discrepancy': self.discrepancy
        }


@dataclass(frozen=True)
class PublishedRow:
    """Computed aggregate next to the published value for one k."""
    k: float
    average: float
    minimum: float
    maximum: float
    published_avg: float
    published_min: float
    published_max: float

    @property
    def delta(self) -> float:
        return self.average - self.published_avg

    def to_dict(self) -> dict:
        return {
            'k': self.k,
            'avg': self.average,
            'min': self.minimum,
            'max': self.maximum,
            'paper_avg': self.published_avg,
            'paper_min': self.published_min,
            'paper_max': self.published_max,
            'delta': self.delta
        }


def record_from_point(point: EquilibriumPoint, lam: float, params: ModelParams) -> WelfareRecord:
    """Welfare of an already solved (mu, k) cell under evaluator weight lam."""
    EvaluatorWeight(lam)
    behavior = params.with_k(point.k) if point.k != params.k else params
    gross = gross_payoff(point.mu, point.rho_star, behavior, default_popularity(point.mu, behavior))
    cost_p = precision_cost(point.rho_star, behavior)
    cost_f = behavior.cost_F if point.invests else 0.0
    return WelfareRecord(
        mu=point.mu,
        k=point.k,
        lam=lam,
        correctness=gross.correctness,
        bonus_expectation=gross.bonus_expectation,
        precision_cost=cost_p,
        fixed_cost=cost_f,
        welfare=gross.correctness + lam * gross.bonus_expectation - cost_p - cost_f
    )


def equilibrium_welfare(mu: float, k: float, lam: float, params: ModelParams) -> WelfareRecord:
    """
    Welfare at belief mu when agents choose rho* under the full bonus.

    Args:
        mu: Public belief
        k: Contrarian intensity
        lam: Evaluator weight on the bonus, in [0, 1]
        params: Model primitives

    Returns:
        WelfareRecord
    """
    EvaluatorWeight(lam)
    return record_from_point(solve_precision(mu, k, params), lam, params)


def planner_welfare(mu: float, k: float, params: ModelParams) -> WelfareRecord:
    """Per-period planner: controls the same precision choice, full bonus weight."""
    point = solve_precision(mu, k, params)
    return record_from_point(point, 1.0, params)


def planner_gap(mu: float, k: float, params: ModelParams) -> float:
    return planner_welfare(mu, k, params).welfare - equilibrium_welfare(mu, k, 1.0, params).welfare


def _aggregate(records: Sequence[WelfareRecord], k: float, lam: float) -> AggregateWelfare:
    values = np.array([r.welfare for r in records])
    return AggregateWelfare(
        k=k,
        lam=lam,
        average=float(np.sum(values) / len(values)),
        minimum=float(np.min(values)),
        maximum=float(np.max(values)),
        n_points=len(values)
    )


def aggregate_welfare(
    k: float,
    lam: float,
    params: ModelParams,
    dist: Optional[BeliefDistribution] = None,
    threads: int = 1
) -> AggregateWelfare:
    """Equal-weight average, min and max of welfare over the belief grid."""
    EvaluatorWeight(lam)
    dist = dist or BeliefDistribution()
    points = precision_profile(k, params, dist.grid, threads=threads)
    return _aggregate([record_from_point(p, lam, params) for p in points], k, lam)


def _check_k_grid(k_grid: Sequence[float]) -> List[float]:
    ks = [float(k) for k in k_grid]
    if not ks:
        raise ValueError("k grid is empty")
    if any(b < a for a, b in zip(ks, ks[1:])):
        raise ValueError(f"k grid must be sorted, got {ks}")
    return ks


def welfare_curves(
    k_grid: Sequence[float],
    lambdas: Sequence[float],
    params: ModelParams,
    dist: Optional[BeliefDistribution] = None,
    threads: int = 1,
    show_progress: bool = False
) -> Dict[float, WelfareCurve]:
    """
    Aggregate welfare curves for several evaluator weights.

    Each k is solved once; every lambda re-weights the same records.
    """
    ks = _check_k_grid(k_grid)
    for lam in lambdas:
        EvaluatorWeight(lam)
    dist = dist or BeliefDistribution()
    curves = {float(lam): WelfareCurve(float(lam)) for lam in lambdas}

    iterator = tqdm(ks, desc="Welfare curves") if show_progress else ks
    for k in iterator:
        points = precision_profile(k, params, dist.grid, threads=threads)
        for lam, curve in curves.items():
            records = [record_from_point(p, lam, params) for p in points]
            curve.points.append(_aggregate(records, k, lam))
    return curves


def welfare_curve(
    k_grid: Sequence[float],
    lam: float,
    params: ModelParams,
    dist: Optional[BeliefDistribution] = None,
    threads: int = 1,
    show_progress: bool = False
) -> WelfareCurve:
    return welfare_curves(k_grid, [lam], params, dist, threads, show_progress)[float(lam)]


def detect_shape(series: Sequence[float], tol: float = SHAPE_TOL) -> WelfareShape:
    """
    Classify a welfare series along k.

    InvertedU needs an interior peak with strict increases before it and
    strict decreases after it; differences within tol count as flat.
    """
    values = np.asarray(series, dtype=float)
    if values.size < 3:
        raise ValueError(f"Shape detection needs at least 3 points, got {values.size}")

    diffs = np.diff(values)
    up = diffs > tol
    down = diffs < -tol

    if np.all(up):
        return WelfareShape.INCREASING
    if np.all(down):
        return WelfareShape.DECREASING
    for peak in range(1, values.size - 1):
        if np.all(up[:peak]) and np.all(down[peak:]):
            return WelfareShape.INVERTED_U
    return WelfareShape.OTHER


def local_k_derivative(
    lam: float,
    params: ModelParams,
    mu: Optional[float] = None,
    dist: Optional[BeliefDistribution] = None,
    steps: Tuple[float, float] = (1e-3, 5e-4),
    threads: int = 1
) -> KDerivative:
    """
    Right derivative of welfare in k at k = 0.

    Forward differences at two steps combined by Richardson extrapolation.
    With mu given the derivative is pointwise, otherwise of the grid average.
    """
    EvaluatorWeight(lam)
    h1, h2 = steps
    if not (h1 > h2 > 0):
        raise ValueError(f"Steps must satisfy h1 > h2 > 0, got {steps}")

    if mu is not None:
        def welfare_at(k: float) -> float:
            return equilibrium_welfare(mu, k, lam, params).welfare
    else:
        dist = dist or BeliefDistribution()

        def welfare_at(k: float) -> float:
            return aggregate_welfare(k, lam, params, dist, threads).average

    w0 = welfare_at(0.0)
    coarse = (welfare_at(h1) - w0) / h1
    fine = (welfare_at(h2) - w0) / h2
    estimate = (h1 * fine - h2 * coarse) / (h1 - h2)
    return KDerivative(estimate=estimate, coarse=coarse, fine=fine, steps=(h1, h2))


def published_comparison(
    params: ModelParams,
    dist: Optional[BeliefDistribution] = None,
    k_grid: Sequence[float] = (0.0, 0.2, 0.4, 0.6, 0.8),
    threads: int = 1
) -> List[PublishedRow]:
    """
    lambda = 1 aggregates next to the published light-cost table.

    k values missing from the table get NaN published columns.
    """
    curve = welfare_curve(k_grid, 1.0, params, dist, threads)
    rows = []
    for point in curve.points:
        published = PUBLISHED_TABLE.get(round(point.k, 10), (math.nan, math.nan, math.nan))
        rows.append(PublishedRow(
            k=point.k,
            average=point.average,
            minimum=point.minimum,
            maximum=point.maximum,
            published_avg=published[0],
            published_min=published[1],
            published_max=published[2]
        ))
    return rows


if __name__ == "__main__":
    from bonus import BonusKind, BonusSpec

    params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.0), cost_c=0.6, cost_F=0.06)
    print("W(0.5, k=0):", equilibrium_welfare(0.5, 0.0, 1.0, params).to_dict())
    for row in published_comparison(params):
        print(row.to_dict())
