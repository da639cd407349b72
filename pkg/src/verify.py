"""
CONTRARIAN-CASCADES Verification Harness
Brute-force scans and finite-difference oracles packaged as checks with
machine-readable verdicts.
"""

import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from bonus import BonusKind, proxy_cutoff, proxy_error_bound, proxy_sign_agreement
from gaussian import logit, signal_threshold, threshold_k_sensitivity
from payoff import ModelParams, PopularityMode, gross_curve
from precision import investment_region, net_value_of_information, solve_precision
from welfare import BeliefDistribution, WelfareShape, aggregate_welfare, detect_shape, local_k_derivative, welfare_curves
from cascade import simulate_ensemble, summarize_paths
from config import expand_grid, threads_from_env

Grid = Tuple[float, float, float]


@dataclass
class VerifyConfig:
    """Finite-difference steps, tolerances and grids used by every check."""
    # threshold sensitivity
    threshold_mu_grid: Grid = (0.3, 0.7, 0.05)
    threshold_k_grid: Grid = (0.0, 1.0, 0.2)
    threshold_rhos: Tuple[float, ...] = (0.5, 1.0, 2.0)
    threshold_fd_step: float = 1e-5
    threshold_rtol: float = 1e-6
    threshold_atol: float = 1e-9
    identity_k_grid: Grid = (0.0, 2.0, 0.1)
    identity_rhos: Tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    # investment regions
    nesting_k_grid: Grid = (0.0, 1.2, 0.1)
    mu_grid: Grid = (0.02, 0.98, 0.01)
    weak_slack: float = 1e-6
    # intensive margin
    dip_mus: Tuple[float, ...] = (0.45, 0.48, 0.52, 0.55)
    dip_ks: Tuple[float, ...] = (0.0, 0.2, 0.4)
    k_step: float = 0.05
    center_tol: float = 1e-6
    center_invariance_tol: float = 1e-8
    # welfare
    shape_k_grid: Grid = (0.0, 1.2, 0.1)
    shape_lambdas: Tuple[float, ...] = (0.0, 0.5)
    derivative_floor: float = -1e-6
    decline_k: float = 2.0
    # solver oracle
    oracle_samples: int = 50
    oracle_rho_max: float = 5.0
    oracle_step: float = 1e-4
    oracle_rho_tol: float = 1e-3
    oracle_value_tol: float = 1e-8
    oracle_seed: int = 12345
    # simulation
    sim_n_paths: int = 10000
    sim_horizon: int = 50
    sim_k: float = 0.4
    sim_seed: int = 0
    sim_mode: str = PopularityMode.PROXY_FROM_BELIEF.value
    threads: int = field(default_factory=threads_from_env)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class Violation:
    inputs: dict
    observed: Union[float, str, bool]
    expected: Union[float, str, bool]
    gap: float = math.nan

    def to_dict(self) -> dict:
        return {
            'inputs': self.inputs,
            'observed': self.observed,
            'expected': self.expected,
            'gap': self.gap
        }


@dataclass
class CheckReport:
    """
    Verdict of one check.

    Features:
    - passed is True exactly when no violations were recorded
    - skipped counts cells where the claim does not apply (e.g. no investment)
    - notes carries check-specific diagnostics
    """
    check_id: str
    claim: str
    tolerance: float
    violations: List[Violation] = field(default_factory=list)
    runtime: float = 0.0
    skipped: int = 0
    notes: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            'check_id': self.check_id,
            'passed': self.passed,
            'claim': self.claim,
            'tolerance': self.tolerance,
            'violations': [v.to_dict() for v in self.violations],
            'runtime': self.runtime,
            'skipped': self.skipped,
            'notes': self.notes,
            'calibration': self.calibration
        }


def _calibration(params: ModelParams) -> dict:
    return {'cost_c': params.cost_c, 'cost_F': params.cost_F, 'bonus_kind': params.bonus.kind.value}


def _shifted_threshold(mu: float, k: float, rho: float) -> float:
    """Proxy s* evaluated inline so k may step slightly below zero."""
    c = 0.5 + k * (mu - 0.5)
    return 0.5 + (logit(c) - logit(mu)) / rho


def check_threshold_sensitivity(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """Analytic ds*/dk against central differences, and its sign against sign(mu - 1/2)."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="threshold_sensitivity",
        claim="sign(ds*/dk) = sign(mu - 1/2); analytic derivative matches finite differences",
        tolerance=config.threshold_rtol
    )
    h = config.threshold_fd_step
    for mu in expand_grid(list(config.threshold_mu_grid)):
        for k in expand_grid(list(config.threshold_k_grid)):
            for rho in config.threshold_rhos:
                inputs = {'mu': float(mu), 'k': float(k), 'rho': rho}
                analytic = threshold_k_sensitivity(mu, k, rho)
                fd = (_shifted_threshold(mu, k + h, rho) - _shifted_threshold(mu, k - h, rho)) / (2 * h)
                gap = abs(fd - analytic)
                if gap > config.threshold_rtol * abs(analytic) + config.threshold_atol:
                    report.violations.append(Violation(inputs, fd, analytic, gap))

                sign_mu = np.sign(mu - 0.5)
                if sign_mu == 0:
                    if abs(analytic) > config.threshold_atol:
                        report.violations.append(Violation(inputs, analytic, 0.0, abs(analytic)))
                elif np.sign(analytic) != sign_mu:
                    report.violations.append(Violation(inputs, float(np.sign(analytic)), float(sign_mu)))
    report.runtime = time.perf_counter() - start
    return report


def check_threshold_identities(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """s*(1/2, k, rho) = 1/2 and c(1/2, k) = 1/2 exactly."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="threshold_identities",
        claim="at the central belief the proxy cutoff and signal threshold equal 1/2 for every k",
        tolerance=0.0
    )
    for k in expand_grid(list(config.identity_k_grid)):
        c = proxy_cutoff(float(k), 0.5)
        if c != 0.5:
            report.violations.append(Violation({'k': float(k)}, c, 0.5, abs(c - 0.5)))
            continue
        for rho in config.identity_rhos:
            s = signal_threshold(0.5, c, rho, warn_clip=True)
            if s != 0.5:
                report.violations.append(Violation({'k': float(k), 'rho': rho}, s, 0.5, abs(s - 0.5)))
    report.runtime = time.perf_counter() - start
    return report


def check_investment_nesting(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """I(k) contained in I(k') for every k < k' on the grid."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="investment_nesting",
        claim="investment regions expand weakly in k",
        tolerance=config.weak_slack,
        calibration=_calibration(params)
    )
    mu_grid = expand_grid(list(config.mu_grid))
    k_grid = expand_grid(list(config.nesting_k_grid))
    regions = [investment_region(float(k), params, mu_grid, threads=config.threads) for k in k_grid]

    for i, low in enumerate(regions):
        for high in regions[i + 1:]:
            lost = low.mask & ~high.mask
            for mu in mu_grid[lost]:
                phi_high = net_value_of_information(float(mu), high.k, params)
                if phi_high < params.cost_F - config.weak_slack:
                    report.violations.append(Violation(
                        {'mu': float(mu), 'k': low.k, 'k_prime': high.k},
                        observed=False,
                        expected=True,
                        gap=params.cost_F - phi_high
                    ))
    report.notes['regions'] = {f"{r.k:g}": [list(iv) for iv in r.intervals] for r in regions}
    report.runtime = time.perf_counter() - start
    return report


def _k_slopes(
    params: ModelParams,
    mus: Sequence[float],
    ks: Sequence[float],
    step: float
) -> Tuple[List[Tuple[float, float, float]], int]:
    """Forward slopes of rho* in k as (mu, k, slope); cells without investment are skipped."""
    slopes = []
    skipped = 0
    for mu in mus:
        for k in ks:
            base = solve_precision(mu, k, params)
            bumped = solve_precision(mu, k + step, params)
            if base.invests and bumped.invests:
                slopes.append((mu, k, (bumped.rho_star - base.rho_star) / step))
            else:
                skipped += 1
    return slopes, skipped


def check_precision_dip(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """Near the center, more contrarianism lowers the chosen precision; flat at the center."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="precision_dip",
        claim="drho*/dk <= 0 near mu = 1/2 and = 0 at mu = 1/2 (conditional on investing)",
        tolerance=config.weak_slack,
        calibration=_calibration(params)
    )
    mus = list(config.dip_mus) + [0.5]
    slopes, report.skipped = _k_slopes(params, mus, config.dip_ks, config.k_step)
    for mu, k, slope in slopes:
        inputs = {'mu': mu, 'k': k, 'step': config.k_step}
        if mu == 0.5:
            if abs(slope) > config.center_tol:
                report.violations.append(Violation(inputs, slope, 0.0, abs(slope)))
        elif slope > config.weak_slack:
            report.violations.append(Violation(inputs, slope, 0.0, slope))
    report.notes['slopes'] = [{'mu': m, 'k': k, 'slope': s} for m, k, s in slopes]
    report.runtime = time.perf_counter() - start
    return report


def check_precision_local(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """At k = 0 the chosen precision rises off the center and is flat at the center."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="precision_local",
        claim="at k = 0, drho*/dk >= 0 off the center and = 0 at mu = 1/2",
        tolerance=config.weak_slack,
        calibration=_calibration(params)
    )
    mus = list(config.dip_mus) + [0.5]
    slopes, report.skipped = _k_slopes(params, mus, [0.0], config.k_step)
    for mu, k, slope in slopes:
        inputs = {'mu': mu, 'k': k, 'step': config.k_step}
        if mu == 0.5:
            if abs(slope) > config.center_tol:
                report.violations.append(Violation(inputs, slope, 0.0, abs(slope)))
        elif slope < -config.weak_slack:
            report.violations.append(Violation(inputs, slope, 0.0, -slope))
    report.notes['slopes'] = [{'mu': m, 'k': k, 'slope': s} for m, k, s in slopes]
    report.runtime = time.perf_counter() - start
    return report


def check_center_invariance(params: ModelParams, config: VerifyConfig) -> CheckReport:
    start = time.perf_counter()
    report = CheckReport(
        check_id="center_invariance",
        claim="the net value of information at mu = 1/2 does not depend on k",
        tolerance=config.center_invariance_tol,
        calibration=_calibration(params)
    )
    reference = net_value_of_information(0.5, 0.0, params)
    for k in expand_grid(list(config.nesting_k_grid)):
        phi = net_value_of_information(0.5, float(k), params)
        gap = abs(phi - reference)
        if gap >= config.center_invariance_tol:
            report.violations.append(Violation({'k': float(k)}, phi, reference, gap))
    report.notes['reference'] = reference
    report.runtime = time.perf_counter() - start
    return report


def check_welfare_shape(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """Hump-shaped aggregate welfare for lambda < 1; nonnegative slope at k = 0 for lambda = 1."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="welfare_shape",
        claim="welfare is InvertedU in k for lambda in {0, 0.5}; right derivative at k = 0 >= 0 for lambda = 1",
        tolerance=abs(config.derivative_floor),
        calibration=_calibration(params)
    )
    dist = BeliefDistribution()
    k_grid = expand_grid(list(config.shape_k_grid))
    curves = welfare_curves(k_grid, config.shape_lambdas, params, dist, threads=config.threads)

    for lam, curve in curves.items():
        shape = detect_shape(curve.averages)
        report.notes[f"lambda={lam:g}"] = {'shape': shape.value, 'averages': curve.averages.tolist()}
        if shape is not WelfareShape.INVERTED_U:
            report.violations.append(Violation({'lambda': lam}, shape.value, WelfareShape.INVERTED_U.value))

    derivative = local_k_derivative(1.0, params, dist=dist, threads=config.threads)
    report.notes['lambda=1 derivative'] = derivative.to_dict()
    if derivative.estimate < config.derivative_floor:
        report.violations.append(Violation(
            {'lambda': 1.0, 'k': 0.0}, derivative.estimate, 0.0, config.derivative_floor - derivative.estimate
        ))
    report.runtime = time.perf_counter() - start
    return report


def check_eventual_decline(params: ModelParams, config: VerifyConfig) -> CheckReport:
    start = time.perf_counter()
    report = CheckReport(
        check_id="eventual_decline",
        claim="lambda = 0 welfare at large k is strictly below its maximum over the k grid",
        tolerance=0.0,
        calibration=_calibration(params)
    )
    dist = BeliefDistribution()
    k_grid = expand_grid(list(config.shape_k_grid))
    curve = welfare_curves(k_grid, [0.0], params, dist, threads=config.threads)[0.0]
    peak = float(np.max(curve.averages))
    far = aggregate_welfare(config.decline_k, 0.0, params, dist, threads=config.threads).average
    report.notes.update({'peak': peak, 'peak_k': float(k_grid[int(np.argmax(curve.averages))]), 'far': far})
    if not far < peak:
        report.violations.append(Violation({'k': config.decline_k}, far, peak, far - peak))
    report.runtime = time.perf_counter() - start
    return report


def check_solver_oracle(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """solve_precision against a dense brute-force grid on a seeded (mu, k) sample."""
    start = time.perf_counter()
    report = CheckReport(
        check_id="solver_oracle",
        claim="refined solver matches a dense brute-force search",
        tolerance=config.oracle_value_tol,
        calibration=_calibration(params)
    )
    bounded = params.replace(rho_max=config.oracle_rho_max)
    rng = np.random.default_rng(config.oracle_seed)
    mus = rng.uniform(0.05, 0.95, config.oracle_samples)
    ks = rng.uniform(0.0, 1.2, config.oracle_samples)
    rho = np.arange(0.0, config.oracle_rho_max + config.oracle_step / 2, config.oracle_step)

    for mu, k in zip(mus, ks):
        mu, k = float(mu), float(k)
        point = solve_precision(mu, k, bounded)
        model = bounded.with_k(k)
        values = gross_curve(mu, rho, model).gross - 0.5 * model.cost_c * rho ** 2 - model.cost_F * (rho > 0)
        i = int(np.argmax(values))
        d_rho = abs(point.rho_star - rho[i])
        d_value = abs(point.value_at_optimum - values[i])
        if d_rho >= config.oracle_rho_tol or d_value >= config.oracle_value_tol:
            report.violations.append(Violation(
                {'mu': mu, 'k': k},
                observed=point.rho_star,
                expected=float(rho[i]),
                gap=d_value
            ))
    report.runtime = time.perf_counter() - start
    return report


def check_proxy_bound_on_paths(params: ModelParams, config: VerifyConfig) -> CheckReport:
    """The proxy cutoff error bound and sign agreement on every simulated step."""
    if params.bonus.kind is not BonusKind.PROPORTIONAL:
        raise ValueError("The proxy bound check needs the proportional bonus")
    start = time.perf_counter()
    report = CheckReport(
        check_id="proxy_bound_on_paths",
        claim="|c(p1) - c_proxy(mu)| <= k |p1 - mu| on every step; cutoff shifts agree in sign when |mu - 1/2| > |p1 - mu|",
        tolerance=1e-12,
        calibration=_calibration(params)
    )
    sim = params.replace(
        bonus=params.bonus.with_k(config.sim_k),
        popularity_mode=PopularityMode(config.sim_mode)
    )
    paths = simulate_ensemble(sim, config.sim_horizon, config.sim_n_paths, config.sim_seed, threads=config.threads)
    for path_id, path in enumerate(paths):
        for s in path.steps:
            bound, gap = proxy_error_bound(sim.bonus, s.p1_empirical, s.mu_before)
            inputs = {'path_id': path_id, 'step': s.index, 'mu': s.mu_before, 'p1': s.p1_empirical}
            if gap > bound + report.tolerance:
                report.violations.append(Violation(inputs, gap, bound, gap - bound))
            if abs(s.mu_before - 0.5) > abs(s.p1_empirical - s.mu_before):
                if not proxy_sign_agreement(sim.k, s.p1_empirical, s.mu_before):
                    report.violations.append(Violation(inputs, "sign mismatch", "sign agreement"))

    summary = summarize_paths(sim, paths, config.sim_horizon, config.sim_seed)
    report.notes['ensemble'] = summary.to_dict()
    report.runtime = time.perf_counter() - start
    return report


CHECKS: Dict[str, Callable[[ModelParams, VerifyConfig], CheckReport]] = {
    'threshold_sensitivity': check_threshold_sensitivity,
    'threshold_identities': check_threshold_identities,
    'investment_nesting': check_investment_nesting,
    'precision_dip': check_precision_dip,
    'precision_local': check_precision_local,
    'center_invariance': check_center_invariance,
    'welfare_shape': check_welfare_shape,
    'eventual_decline': check_eventual_decline,
    'solver_oracle': check_solver_oracle,
    'proxy_bound_on_paths': check_proxy_bound_on_paths,
}


def run_all(
    params_set: Sequence[ModelParams],
    check_ids: Optional[Sequence[str]] = None,
    config: Optional[VerifyConfig] = None,
    show_progress: bool = False
) -> List[CheckReport]:
    """
    Run the selected checks on every calibration.

    Args:
        params_set: Calibrations to verify (an empty set yields no reports)
        check_ids: Registered check ids (default: all, in registry order)
        config: Tolerances and grids
        show_progress: Show a progress bar over (calibration, check) pairs

    Returns:
        Reports ordered by calibration, then check
    """
    ids = list(CHECKS) if check_ids is None else list(check_ids)
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown check ids: {unknown}; known: {sorted(CHECKS)}")
    config = config or VerifyConfig()

    jobs = [(params, check_id) for params in params_set for check_id in ids]
    if show_progress:
        jobs = tqdm(jobs, desc="Verifying")

    reports = []
    for params, check_id in jobs:
        report = CHECKS[check_id](params, config)
        report.calibration = report.calibration or _calibration(params)
        reports.append(report)
    return reports


def write_reports_json(reports: Sequence[CheckReport], output_path: Union[str, Path]) -> Path:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        'passed': all(r.passed for r in reports),
        'reports': [r.to_dict() for r in reports]
    }
    with open(output_path, 'w') as f:
        json.dump(payload, f, indent=2, default=str)
    return output_path


if __name__ == "__main__":
    from bonus import BonusSpec

    params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.0), cost_c=0.6, cost_F=0.06)
    for report in run_all([params], ['threshold_sensitivity', 'threshold_identities', 'center_invariance']):
        print(f"{report.check_id}: {'PASS' if report.passed else 'FAIL'} ({report.runtime:.2f}s)")
