"""
CONTRARIAN-CASCADES Sequential Simulator
Agents arrive one by one, optionally buy a Gaussian signal, act on a cutoff,
and a Bayesian observer updates the public belief from the action.
"""

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

# Add src and utils to path
sys.path.insert(0, str(Path(__file__).parent))
sys.path.insert(0, str(Path(__file__).parent.parent / 'utils'))

from bonus import BonusKind, Popularity, posterior_cutoff, proxy_error_bound, proxy_sign_agreement
from gaussian import ActionProbabilities, Belief, action_probabilities, bayes_update, clip_probability, signal_threshold
from payoff import ModelParams, PopularityMode, uninformed_action
from precision import PrecisionCache
from config import threads_from_env
from rng import CounterRNG

PATH_COLUMNS = [
    'path_id', 'step', 'theta', 'mu_before', 'p1_empirical', 'invested',
    'rho', 'signal', 'cutoff', 'action', 'mu_after'
]
BOUND_SLACK = 1e-12


class CascadeType(str, Enum):
    ONE = "OneCascade"
    ZERO = "ZeroCascade"
    NONE = "None"


@dataclass(frozen=True)
class AgentStep:
    """One arrival: what the agent saw, bought and did, and the belief after."""
    index: int
    mu_before: float
    mu_after: float
    p1_empirical: float
    invested: bool
    rho: float
    signal: Optional[float]
    cutoff: float
    action: int
    was_informative: bool

    def to_dict(self) -> dict:
        return {
            'index': self.index,
            'mu_before': self.mu_before,
            'mu_after': self.mu_after,
            'p1_empirical': self.p1_empirical,
            'invested': self.invested,
            'rho': self.rho,
            'signal': self.signal,
            'cutoff': self.cutoff,
            'action': self.action,
            'was_informative': self.was_informative
        }


@dataclass
class CascadePath:
    """
    One simulated history.

    Features:
    - Drawn truth theta and the full step sequence
    - Cascade onset (1-based step index) and type
    - Per-path seed, so any path can be regenerated on its own
    """
    theta: int
    seed: int
    k: float
    steps: List[AgentStep] = field(default_factory=list)
    cascade_onset: Optional[int] = None
    cascade_type: CascadeType = CascadeType.NONE

    @property
    def beliefs(self) -> np.ndarray:
        """mu_0, mu_1, ..., mu_T."""
        if not self.steps:
            return np.array([])
        return np.array([self.steps[0].mu_before] + [s.mu_after for s in self.steps])

    @property
    def cascade_action(self) -> Optional[int]:
        if self.cascade_type is CascadeType.ONE:
            return 1
        if self.cascade_type is CascadeType.ZERO:
            return 0
        return None

    def to_rows(self, path_id: int) -> List[dict]:
        return [
            {
                'path_id': path_id,
                'step': s.index,
                'theta': self.theta,
                'mu_before': s.mu_before,
                'p1_empirical': s.p1_empirical,
                'invested': int(s.invested),
                'rho': s.rho,
                'signal': math.nan if s.signal is None else s.signal,
                'cutoff': s.cutoff,
                'action': s.action,
                'mu_after': s.mu_after
            }
            for s in self.steps
        ]

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            'seed': self.seed,
            'k': self.k,
            'cascade_onset': self.cascade_onset,
            'cascade_type': self.cascade_type.value,
            'steps': [s.to_dict() for s in self.steps]
        }


@dataclass(frozen=True)
class EnsembleSummary:
    """Aggregates over independent paths."""
    cascade_frequency: float
    mean_onset: float
    correct_cascade_share: float
    proxy_gap_max: float
    proxy_bound_violations: int
    sign_agreement_violations: int
    martingale_residual: float
    martingale_stderr: float
    n_steps: int
    n_paths: int
    horizon: int
    seed: int
    mode: str

    def to_dict(self) -> dict:
        return {
            'cascade_frequency': self.cascade_frequency,
            'mean_onset': self.mean_onset,
            'correct_cascade_share': self.correct_cascade_share,
            'proxy_gap_max': self.proxy_gap_max,
            'proxy_bound_violations': self.proxy_bound_violations,
            'sign_agreement_violations': self.sign_agreement_violations,
            'martingale_residual': self.martingale_residual,
            'martingale_stderr': self.martingale_stderr,
            'n_steps': self.n_steps,
            'n_paths': self.n_paths,
            'horizon': self.horizon,
            'seed': self.seed,
            'mode': self.mode
        }


def _current_popularity(params: ModelParams, mu: float, ones: int, seen: int) -> Tuple[Popularity, float]:
    empirical = Popularity.from_counts(ones, seen)
    if params.popularity_mode is PopularityMode.EMPIRICAL_COUNTS:
        return empirical, empirical.p1
    return Popularity.from_belief(mu), empirical.p1


def simulate_path(
    params: ModelParams,
    horizon: int,
    seed: int,
    theta: Optional[int] = None,
    mu0: float = 0.5,
    cache: Optional[PrecisionCache] = None
) -> CascadePath:
    """
    Simulate one sequential history.

    Each agent solves rho* at the current belief, draws a signal only when it
    invests, and acts on the signal threshold; otherwise it takes the
    uninformed action. The observer updates with the same likelihoods.

    Args:
        params: Model primitives (bonus, costs, popularity mode)
        horizon: Number of agents (>= 1)
        seed: Path seed
        theta: Fix the true state instead of drawing it from mu0
        mu0: Prior belief
        cache: Shared precision cache (a private one is created if omitted)

    Returns:
        CascadePath with cascade onset and type filled in
    """
    if horizon < 1:
        raise ValueError(f"Horizon must be >= 1, got {horizon}")
    Belief(mu0)
    if theta is not None and theta not in (0, 1):
        raise ValueError(f"theta must be 0 or 1, got {theta}")

    if cache is None:
        cache = PrecisionCache(params)
    rng = CounterRNG(seed)
    if theta is None:
        theta = rng.bernoulli(0, mu0)

    path = CascadePath(theta=theta, seed=seed, k=params.k)
    mu = mu0
    ones = 0

    for t in range(1, horizon + 1):
        pop, p1_empirical = _current_popularity(params, mu, ones, t - 1)
        cutoff = posterior_cutoff(params.bonus, pop).raw
        point = cache.solve(mu, pop)

        if point.invests:
            rho = point.rho_star
            s_star = signal_threshold(mu, cutoff, rho)
            signal = rng.normal(t, float(theta), 1.0 / math.sqrt(rho))
            action = int(signal >= s_star)
            likelihoods = action_probabilities(mu, s_star, rho)
        else:
            rho = 0.0
            signal = None
            action = uninformed_action(mu, params, pop).action
            likelihoods = ActionProbabilities.deterministic(action)

        mu_after = clip_probability(bayes_update(mu, action, likelihoods))
        path.steps.append(AgentStep(
            index=t,
            mu_before=mu,
            mu_after=mu_after,
            p1_empirical=p1_empirical,
            invested=point.invests,
            rho=rho,
            signal=signal,
            cutoff=cutoff,
            action=action,
            was_informative=likelihoods.informative
        ))
        mu = mu_after
        ones += action

    path.cascade_onset, path.cascade_type = detect_cascade(path)
    return path


def detect_cascade(path: Union[CascadePath, Sequence[AgentStep]]) -> Tuple[Optional[int], CascadeType]:
    """
    Onset and type of the cascade a path ends in.

    The onset is the first step of the terminal run of uninvested agents that
    all take the same action; a path whose last agent invested has no cascade.
    """
    steps = path.steps if isinstance(path, CascadePath) else list(path)
    if not steps or steps[-1].invested:
        return None, CascadeType.NONE

    final_action = steps[-1].action
    onset = steps[-1].index
    for step in reversed(steps):
        if step.invested or step.action != final_action:
            break
        onset = step.index

    return onset, CascadeType.ONE if final_action == 1 else CascadeType.ZERO


def _proxy_diagnostics(params: ModelParams, steps: Sequence[AgentStep]) -> Tuple[float, int, int]:
    """Largest exact proxy gap, bound violations and sign disagreements on a path."""
    if params.bonus.kind is not BonusKind.PROPORTIONAL:
        return math.nan, 0, 0
    gap_max = 0.0
    bound_violations = 0
    sign_violations = 0
    for s in steps:
        bound, gap = proxy_error_bound(params.bonus, s.p1_empirical, s.mu_before)
        gap_max = max(gap_max, gap)
        if gap > bound + BOUND_SLACK:
            bound_violations += 1
        if abs(s.mu_before - 0.5) > abs(s.p1_empirical - s.mu_before):
            if not proxy_sign_agreement(params.k, s.p1_empirical, s.mu_before):
                sign_violations += 1
    return gap_max, bound_violations, sign_violations


def simulate_ensemble(
    params: ModelParams,
    horizon: int,
    n_paths: int,
    seed: int,
    mu0: float = 0.5,
    threads: Optional[int] = None,
    show_progress: bool = False
) -> List[CascadePath]:
    """Independent paths with seeds seed + i, returned in path order."""
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    threads = threads or threads_from_env()
    cache = PrecisionCache(params)

    def run(i: int) -> CascadePath:
        return simulate_path(params, horizon, seed + i, mu0=mu0, cache=cache)

    indices = range(n_paths)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            iterator = pool.map(run, indices)
            if show_progress:
                iterator = tqdm(iterator, total=n_paths, desc="Simulating paths")
            return list(iterator)
    if show_progress:
        indices = tqdm(indices, desc="Simulating paths")
    return [run(i) for i in indices]


def summarize_paths(
    params: ModelParams,
    paths: Sequence[CascadePath],
    horizon: int,
    seed: int
) -> EnsembleSummary:
    """Reduce a list of paths to ensemble statistics."""
    onsets = [p.cascade_onset for p in paths if p.cascade_onset is not None]
    correct = [p.cascade_action == p.theta for p in paths if p.cascade_onset is not None]

    increments = np.array([s.mu_after - s.mu_before for p in paths for s in p.steps])
    n_steps = int(increments.size)
    stderr = float(np.std(increments, ddof=1) / math.sqrt(n_steps)) if n_steps > 1 else math.nan

    gap_max = math.nan
    bound_violations = 0
    sign_violations = 0
    for p in paths:
        g, b, s = _proxy_diagnostics(params, p.steps)
        if not math.isnan(g):
            gap_max = g if math.isnan(gap_max) else max(gap_max, g)
        bound_violations += b
        sign_violations += s

    return EnsembleSummary(
        cascade_frequency=len(onsets) / len(paths),
        mean_onset=float(np.mean(onsets)) if onsets else math.nan,
        correct_cascade_share=float(np.mean(correct)) if correct else math.nan,
        proxy_gap_max=gap_max,
        proxy_bound_violations=bound_violations,
        sign_agreement_violations=sign_violations,
        martingale_residual=abs(float(np.mean(increments))),
        martingale_stderr=stderr,
        n_steps=n_steps,
        n_paths=len(paths),
        horizon=horizon,
        seed=seed,
        mode=params.popularity_mode.value
    )


def ensemble_statistics(
    params: ModelParams,
    horizon: int,
    n_paths: int,
    seed: int,
    mu0: float = 0.5,
    threads: Optional[int] = None,
    show_progress: bool = False
) -> EnsembleSummary:
    """
    Cascade frequency, onset, correctness and diagnostics over n_paths paths.

    Output is identical for any thread count: paths are keyed by seed + i and
    reduced in path order.
    """
    paths = simulate_ensemble(params, horizon, n_paths, seed, mu0, threads, show_progress)
    return summarize_paths(params, paths, horizon, seed)


def write_paths_csv(paths: Sequence[CascadePath], output_path: Union[str, Path]) -> Path:
    """One row per agent step; signal is empty for uninvested steps."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    rows = [row for i, p in enumerate(paths) for row in p.to_rows(i)]
    frame = pd.DataFrame(rows, columns=PATH_COLUMNS)
    frame.to_csv(output_path, index=False, float_format="%.17g")
    return output_path


def read_paths_csv(input_path: Union[str, Path], base_seed: int = 0) -> List[CascadePath]:
    """Rebuild paths from a CSV written by write_paths_csv."""
    frame = pd.read_csv(input_path, float_precision="round_trip")
    missing = [c for c in PATH_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"Path CSV is missing columns: {missing}")

    paths = []
    for path_id, group in frame.groupby('path_id', sort=True):
        group = group.sort_values('step')
        steps = [
            AgentStep(
                index=int(r.step),
                mu_before=float(r.mu_before),
                mu_after=float(r.mu_after),
                p1_empirical=float(r.p1_empirical),
                invested=bool(r.invested),
                rho=float(r.rho),
                signal=None if pd.isna(r.signal) else float(r.signal),
                cutoff=float(r.cutoff),
                action=int(r.action),
                was_informative=bool(r.invested)
            )
            for r in group.itertuples(index=False)
        ]
        path = CascadePath(theta=int(group['theta'].iloc[0]), seed=base_seed + int(path_id), k=math.nan, steps=steps)
        path.cascade_onset, path.cascade_type = detect_cascade(path)
        paths.append(path)
    return paths


if __name__ == "__main__":
    from bonus import BonusSpec

    params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.4), cost_c=0.6, cost_F=0.06)
    path = simulate_path(params, horizon=30, seed=7)
    print(f"theta={path.theta} onset={path.cascade_onset} type={path.cascade_type.value}")
    summary = ensemble_statistics(params, horizon=30, n_paths=200, seed=7, show_progress=True)
    print(summary.to_dict())
