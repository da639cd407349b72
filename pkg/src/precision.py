"""
CONTRARIAN-CASCADES Precision Solver
Endogenous information acquisition: optimal precision rho*(mu, k), the net
value of information and investment regions I(k).
"""

import math
import sys
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

# Add src and utils to path
sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent.parent / 'utils'))

from bonus import Popularity, PopularitySource, posterior_cutoff
from gaussian import Belief, signal_threshold
from payoff import ModelParams, PopularityMode, gross_curve, uninformed_action
from optimize import golden_section_max

DEFAULT_GRID_POINTS = 2000
GOLDEN_TOL = 1e-7
TIE_TOL = 1e-12
MAX_BOUND_DOUBLINGS = 3


class SearchBoundWarning(UserWarning):
    """The optimal precision sits on the upper end of the search interval."""


@dataclass(frozen=True)
class EquilibriumPoint:
    """Solved (mu, k) cell."""
    mu: float
    k: float
    rho_star: float
    s_star: float
    invests: bool
    value_at_optimum: float
    net_value_of_information: float
    uninformed_value: float = math.nan
    interior_rho: float = math.nan

    def to_dict(self) -> dict:
        return {
            'mu': self.mu,
            'k': self.k,
            'rho_star': self.rho_star,
            's_star': self.s_star,
            'invests': self.invests,
            'value_at_optimum': self.value_at_optimum,
            'net_value_of_information': self.net_value_of_information,
            'uninformed_value': self.uninformed_value,
            'interior_rho': self.interior_rho
        }


@dataclass
class InvestmentRegion:
    """Beliefs on a grid where agents buy a signal, with contiguous runs."""
    k: float
    mu_grid: np.ndarray
    mask: np.ndarray
    intervals: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not bool(np.any(self.mask))

    def to_dict(self) -> dict:
        return {
            'k': self.k,
            'mu_grid': self.mu_grid.tolist(),
            'mask': self.mask.tolist(),
            'intervals': [list(iv) for iv in self.intervals]
        }


def search_grid(rho_max: float, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Strictly positive precision grid: linear near zero, log-spaced beyond."""
    if n_points < 20:
        raise ValueError(f"Search grid needs at least 20 points, got {n_points}")
    rho_lin = min(1.0, rho_max)
    n_lin = max(10, n_points // 10)
    linear = np.linspace(rho_lin / n_lin, rho_lin, n_lin)
    if rho_max <= rho_lin:
        return linear
    logs = np.geomspace(rho_lin, rho_max, n_points - n_lin + 1)[1:]
    return np.concatenate([linear, logs])


def default_popularity(mu: float, params: ModelParams) -> Popularity:
    """
    Popularity used when no action history is supplied.

    Without observed counts the empirical mode falls back to the belief proxy,
    which is also the agent's prediction of p1 before any actions are seen.
    """
    if params.popularity_mode is PopularityMode.EMPIRICAL_COUNTS:
        return Popularity(mu, PopularitySource.EMPIRICAL_COUNTS)
    return Popularity.from_belief(mu)


def _objective_values(mu: float, rho: np.ndarray, params: ModelParams, pop: Popularity) -> np.ndarray:
    """G - (c/2) rho^2, fixed cost excluded."""
    curve = gross_curve(mu, rho, params, pop)
    return curve.gross - 0.5 * params.cost_c * rho * rho


def _interior_maximum(
    mu: float,
    params: ModelParams,
    pop: Popularity,
    n_points: int
) -> Tuple[float, float]:
    """Global dense-grid search followed by golden-section refinement."""
    rho_max = params.rho_max

    for attempt in range(MAX_BOUND_DOUBLINGS + 1):
        grid = search_grid(rho_max, n_points)
        values = _objective_values(mu, grid, params, pop)
        i = int(np.argmax(values))
        if i < len(grid) - 1:
            break
        if attempt < MAX_BOUND_DOUBLINGS:
            rho_max *= 2.0
    else:
        warnings.warn(
            f"Optimal precision at mu={mu}, k={params.k} hit the search bound {rho_max}",
            SearchBoundWarning
        )
        return float(grid[-1]), float(values[-1])

    lo = grid[i - 1] if i > 0 else 0.0
    hi = grid[i + 1]

    def objective(r: float) -> float:
        return float(_objective_values(mu, np.array([r]), params, pop)[0])

    rho_ref, val_ref = golden_section_max(objective, lo, hi, tol=GOLDEN_TOL)
    if val_ref >= values[i]:
        return rho_ref, val_ref
    return float(grid[i]), float(values[i])


def solve_precision(
    mu: float,
    k: float,
    params: ModelParams,
    pop: Optional[Popularity] = None,
    n_points: int = DEFAULT_GRID_POINTS
) -> EquilibriumPoint:
    """
    Optimal precision at belief mu and intensity k.

    Compares the refined interior maximum (net of F) with the uninformed value
    at rho = 0; exact ties and near-ties within 1e-12 resolve to not investing.

    Args:
        mu: Public belief in (0, 1)
        k: Contrarian intensity (overrides params.bonus.k)
        params: Model primitives
        pop: Popularity used for the bonus (default: params' mode at mu)
        n_points: Dense search grid size

    Returns:
        EquilibriumPoint
    """
    Belief(mu)
    params = params.with_k(k) if k != params.k else params
    pop = pop if pop is not None else default_popularity(mu, params)

    choice = uninformed_action(mu, params, pop)
    g0 = choice.correctness + choice.bonus

    rho_int, v_int = _interior_maximum(mu, params, pop, n_points)
    net_value = max(v_int - g0, 0.0)
    invests = (v_int - params.cost_F) - g0 > TIE_TOL

    if invests:
        cutoff = posterior_cutoff(params.bonus, pop).raw
        s_star = signal_threshold(mu, cutoff, rho_int)
        return EquilibriumPoint(
            mu=mu, k=k, rho_star=rho_int, s_star=s_star, invests=True,
            value_at_optimum=v_int - params.cost_F,
            net_value_of_information=net_value,
            uninformed_value=g0, interior_rho=rho_int
        )

    # Uninformed: the threshold sentinel encodes the forced action
    s_star = -math.inf if choice.action == 1 else math.inf
    return EquilibriumPoint(
        mu=mu, k=k, rho_star=0.0, s_star=s_star, invests=False,
        value_at_optimum=g0,
        net_value_of_information=net_value,
        uninformed_value=g0, interior_rho=rho_int
    )


def net_value_of_information(
    mu: float,
    k: float,
    params: ModelParams,
    pop: Optional[Popularity] = None
) -> float:
    """max over rho of {G - (c/2) rho^2} minus G at rho = 0 (never negative)."""
    return solve_precision(mu, k, params, pop).net_value_of_information


def precision_k_slope(mu: float, k: float, params: ModelParams, step: float = 0.05) -> float:
    """Forward difference of rho* in k; NaN unless both points invest."""
    base = solve_precision(mu, k, params)
    bumped = solve_precision(mu, k + step, params)
    if not (base.invests and bumped.invests):
        return math.nan
    return (bumped.rho_star - base.rho_star) / step


def _validate_mu_grid(mu_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(mu_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("Belief grid must be a non-empty 1d sequence")
    if np.any((grid <= 0.0) | (grid >= 1.0)):
        raise ValueError("Belief grid must lie strictly inside (0, 1)")
    return np.sort(grid)


def _map_ordered(func, items: Sequence, threads: int, show_progress: bool, desc: str) -> list:
    """Ordered map, optionally threaded; output order never depends on scheduling."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            iterator = pool.map(func, items)
            if show_progress:
                iterator = tqdm(iterator, total=len(items), desc=desc)
            return list(iterator)
    iterator = items
    if show_progress:
        iterator = tqdm(items, desc=desc)
    return [func(item) for item in iterator]


def precision_profile(
    k: float,
    params: ModelParams,
    mu_grid: Sequence[float],
    threads: int = 1,
    show_progress: bool = False
) -> List[EquilibriumPoint]:
    """rho*(mu, k) across a belief grid, ordered by mu."""
    grid = _validate_mu_grid(mu_grid)
    return _map_ordered(
        lambda mu: solve_precision(float(mu), k, params),
        list(grid), threads, show_progress, f"Solving k={k:g}"
    )


def contiguous_runs(grid: np.ndarray, mask: np.ndarray) -> List[Tuple[float, float]]:
    """[lo, hi] endpoints of each run of True values in mask."""
    runs = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((float(grid[start]), float(grid[i - 1])))
            start = None
    if start is not None:
        runs.append((float(grid[start]), float(grid[-1])))
    return runs


def investment_region(
    k: float,
    params: ModelParams,
    mu_grid: Sequence[float],
    threads: int = 1
) -> InvestmentRegion:
    """I(k) = {mu : rho*(mu, k) > 0} on a grid."""
    grid = _validate_mu_grid(mu_grid)
    points = precision_profile(k, params, grid, threads=threads)
    mask = np.array([p.invests for p in points], dtype=bool)
    return InvestmentRegion(k=k, mu_grid=grid, mask=mask, intervals=contiguous_runs(grid, mask))


def investment_regions_by_cost(
    k_grid: Sequence[float],
    F_grid: Sequence[float],
    params: ModelParams,
    mu_grid: Sequence[float],
    threads: int = 1,
    show_progress: bool = False
) -> List[dict]:
    """
    Investment-region endpoints for each (F, k) pair.

    An empty region is reported as a single row with NaN endpoints.
    """
    rows = []
    pairs = [(float(F), float(k)) for F in F_grid for k in k_grid]
    if show_progress:
        pairs = tqdm(pairs, desc="Investment regions")
    for F, k in pairs:
        region = investment_region(k, params.replace(cost_F=F), mu_grid, threads=threads)
        if region.empty:
            rows.append({'F': F, 'k': k, 'mu_lo': math.nan, 'mu_hi': math.nan})
        for lo, hi in region.intervals:
            rows.append({'F': F, 'k': k, 'mu_lo': lo, 'mu_hi': hi})
    return rows


class PrecisionCache:
    """
    Memoized precision solves keyed by rounded belief.

    Features:
    - Keys (round(mu, 6), round(p1, 6), k); p1 is only part of the key in
      empirical popularity mode
    - Solves happen at the rounded belief, so a cached value does not depend
      on which exact belief asked first
    - Hit/miss counters for diagnostics
    - Safe to share between worker threads
    """

    def __init__(self, params: ModelParams, resolution: int = 6):
        self.params = params
        self.resolution = resolution
        self._store: Dict[Tuple[float, Optional[float], float], EquilibriumPoint] = {}
        self.hits = 0
        self.misses = 0
        self._lock = threading.Lock()

    def _key(self, mu: float, k: float, pop: Popularity) -> Tuple[float, Optional[float], float]:
        mu_r = round(mu, self.resolution)
        if self.params.popularity_mode is PopularityMode.EMPIRICAL_COUNTS:
            return mu_r, round(pop.p1, self.resolution), k
        return mu_r, None, k

    def solve(self, mu: float, pop: Optional[Popularity] = None, k: Optional[float] = None) -> EquilibriumPoint:
        k = self.params.k if k is None else k
        pop = pop if pop is not None else default_popularity(mu, self.params)
        key = self._key(mu, k, pop)

        with self._lock:
            point = self._store.get(key)
            if point is not None:
                self.hits += 1
                return point

        mu_r = min(max(key[0], 10.0 ** -self.resolution), 1.0 - 10.0 ** -self.resolution)
        if self.params.popularity_mode is PopularityMode.EMPIRICAL_COUNTS:
            pop_r = Popularity(key[1], pop.source)
        else:
            pop_r = Popularity.from_belief(mu_r)
        point = solve_precision(mu_r, k, self.params, pop_r)

        # Another worker may have solved the same key meanwhile; the first entry wins
        with self._lock:
            stored = self._store.setdefault(key, point)
            if stored is point:
                self.misses += 1
            else:
                self.hits += 1
        return stored

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)

    def get_stats(self) -> dict:
        with self._lock:
            return {'entries': len(self._store), 'hits': self.hits, 'misses': self.misses}


if __name__ == "__main__":
    from bonus import BonusKind, BonusSpec

    params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.0), cost_c=0.6, cost_F=0.06)
    point = solve_precision(0.5, 0.0, params)
    print("center, k=0:", point.to_dict())

    region = investment_region(0.4, params, np.round(np.arange(0.02, 0.985, 0.01), 10))
    print("I(0.4) intervals:", region.intervals)
