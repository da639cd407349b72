"""
CONTRARIAN-CASCADES Command-Line Driver
Cutoffs, precision profiles, investment regions, welfare curves, simulated
cascades and the verification suite.
"""

import json
import math
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd
from dotenv import load_dotenv

# Add src and utils to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent / 'utils'))

from bonus import BonusKind, Popularity, PopularitySource, llr_cutoff, posterior_cutoff, proxy_cutoff, proxy_error_bound
from gaussian import signal_threshold, threshold_k_sensitivity
from precision import investment_regions_by_cost, precision_profile
from welfare import (
    COMPARISON_COLUMNS,
    PUBLISHED_CALIBRATION,
    BeliefDistribution,
    detect_shape,
    published_comparison,
    welfare_curves,
)
from cascade import simulate_ensemble, summarize_paths, write_paths_csv
from verify import CHECKS, VerifyConfig, run_all, write_reports_json
from config import ConfigError, RunConfig, load_config, threads_from_env

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

PRECISION_COLUMNS = ['mu', 'k', 'rho_star', 'invests', 'net_value', 's_star']
REGION_COLUMNS = ['F', 'k', 'mu_lo', 'mu_hi']
CURVE_COLUMNS = ['lambda', 'k', 'avg', 'min', 'max']

# Calibrations run by `reproduce`: (name, c, F)
CALIBRATIONS = [("light_cost", 0.6, 0.06), ("high_fixed_cost", 0.6, 0.16)]


def write_table(frame: pd.DataFrame, output_dir: Path, stem: str, fmt: str) -> Path:
    """Write a table as CSV (17 significant digits) or JSON records."""
    output_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = output_dir / f"{stem}.json"
        with open(path, 'w') as f:
            json.dump(frame.to_dict(orient="records"), f, indent=2)
    else:
        path = output_dir / f"{stem}.csv"
        frame.to_csv(path, index=False, float_format="%.17g")
    return path


def read_table(path: Path) -> pd.DataFrame:
    """Read a table written by write_table; floats come back bit for bit."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, 'r') as f:
            return pd.DataFrame(json.load(f))
    return pd.read_csv(path, float_precision="round_trip")


def write_json(payload: dict, output_dir: Path, name: str) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / name
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2, default=str)
    return path


class ContrarianRunner:
    """
    Runs one subcommand against a validated RunConfig.

    Orchestrates:
    1. Model primitives from the config
    2. Engine calls (precision, welfare, cascade, verify)
    3. Ordered, single-threaded output writing
    """

    def __init__(self, config: RunConfig, threads: Optional[int] = None, verbose: bool = True):
        self.config = config
        self.threads = threads or threads_from_env()
        self.verbose = verbose
        self.output_dir = config.output_dir

    def _banner(self, title: str):
        if self.verbose:
            print("=" * 60)
            print(title)
            print("=" * 60)

    def _say(self, message: str):
        if self.verbose:
            print(message)

    def _popularity(self) -> Popularity:
        """Observed popularity from --p1, else the belief proxy."""
        cfg = self.config
        if cfg.p1 is None:
            return Popularity.from_belief(cfg.mu)
        return Popularity(cfg.p1, PopularitySource.EMPIRICAL_COUNTS)

    def cutoff(self) -> dict:
        """Exact cutoff at popularity p1 (default mu), its proxy and log-odds form."""
        cfg = self.config
        params = cfg.model_params()
        pop = self._popularity()
        exact = posterior_cutoff(params.bonus, pop)
        result = {
            'mu': cfg.mu,
            'p1': pop.p1,
            'k': cfg.k,
            'bonus_kind': params.bonus.kind.value,
            'cutoff': exact.raw,
            'cutoff_clamped': exact.clamped,
            'proxy_cutoff': proxy_cutoff(cfg.k, cfg.mu),
            'llr_cutoff': llr_cutoff(params.bonus, pop)
        }
        if params.bonus.kind is BonusKind.PROPORTIONAL:
            result['proxy_error_bound'], result['proxy_gap'] = proxy_error_bound(params.bonus, pop.p1, cfg.mu)
        self._banner("Posterior cutoff")
        for key, value in result.items():
            self._say(f"  {key:>17}: {value}")
        return result

    def threshold(self) -> dict:
        """s* at the configured bonus; the analytic k-slope exists only for the proportional proxy."""
        cfg = self.config
        params = cfg.model_params()
        c = posterior_cutoff(params.bonus, self._popularity()).raw
        s_star = signal_threshold(cfg.mu, c, cfg.rho)
        slope = math.nan
        if params.bonus.kind is BonusKind.PROPORTIONAL and cfg.p1 is None:
            try:
                slope = threshold_k_sensitivity(cfg.mu, cfg.k, cfg.rho)
            except ValueError:
                pass
        result = {
            'mu': cfg.mu,
            'k': cfg.k,
            'rho': cfg.rho,
            'bonus_kind': params.bonus.kind.value,
            'cutoff': c,
            's_star': s_star,
            'ds_dk': slope
        }
        self._banner("Signal threshold")
        for key, value in result.items():
            self._say(f"  {key:>13}: {value}")
        return result

    def precision(self) -> Path:
        cfg = self.config
        params = cfg.model_params()
        self._banner(f"Precision profile (c={cfg.cost_c}, F={cfg.cost_F})")
        rows = []
        for k in cfg.k_values:
            for p in precision_profile(float(k), params, cfg.mu_values, threads=self.threads):
                rows.append({
                    'mu': p.mu,
                    'k': p.k,
                    'rho_star': p.rho_star,
                    'invests': int(p.invests),
                    'net_value': p.net_value_of_information,
                    's_star': p.s_star
                })
            self._say(f"  k={k:g}: {sum(r['invests'] for r in rows if r['k'] == k)} investing beliefs")
        path = write_table(pd.DataFrame(rows, columns=PRECISION_COLUMNS), self.output_dir, "precision_profile", cfg.format)
        self._say(f"\nWrote {path}")
        return path

    def invest_region(self) -> Path:
        cfg = self.config
        self._banner("Investment regions")
        rows = investment_regions_by_cost(
            cfg.k_values, cfg.F_grid, cfg.model_params(), cfg.mu_values,
            threads=self.threads, show_progress=self.verbose
        )
        path = write_table(pd.DataFrame(rows, columns=REGION_COLUMNS), self.output_dir, "investment_regions", cfg.format)
        self._say(f"\nWrote {path}")
        return path

    def welfare(self) -> List[Path]:
        cfg = self.config
        params = cfg.model_params()
        dist = BeliefDistribution()
        self._banner(f"Welfare (c={cfg.cost_c}, F={cfg.cost_F})")

        curves = welfare_curves(cfg.k_values, cfg.lambdas, params, dist, threads=self.threads, show_progress=self.verbose)
        rows = []
        for lam, curve in curves.items():
            rows.extend({'lambda': lam, 'k': p.k, 'avg': p.average, 'min': p.minimum, 'max': p.maximum} for p in curve.points)
            if len(curve.points) >= 3:
                self._say(f"  lambda={lam:g}: {detect_shape(curve.averages).value}")
            else:
                self._say(f"  lambda={lam:g}: too few k values for a shape")
        paths = [write_table(pd.DataFrame(rows, columns=CURVE_COLUMNS), self.output_dir, "welfare_curves", cfg.format)]

        if (cfg.cost_c, cfg.cost_F) == PUBLISHED_CALIBRATION:
            table = published_comparison(params, dist, threads=self.threads)
            frame = pd.DataFrame([r.to_dict() for r in table], columns=COMPARISON_COLUMNS)
            paths.append(write_table(frame, self.output_dir, "published_comparison", cfg.format))
        else:
            self._say(f"  published table is for (c, F) = {PUBLISHED_CALIBRATION}; comparison skipped")
        for path in paths:
            self._say(f"Wrote {path}")
        return paths

    def simulate(self) -> List[Path]:
        cfg = self.config
        params = cfg.model_params()
        self._banner(f"Simulating {cfg.n_paths} paths x {cfg.horizon} agents (seed={cfg.seed})")
        paths = simulate_ensemble(params, cfg.horizon, cfg.n_paths, cfg.seed, threads=self.threads, show_progress=self.verbose)
        summary = summarize_paths(params, paths, cfg.horizon, cfg.seed)
        written = [
            write_paths_csv(paths, self.output_dir / "paths.csv"),
            write_json(summary.to_dict(), self.output_dir, "ensemble_summary.json")
        ]
        self._say(f"  cascade frequency: {summary.cascade_frequency:.4f}")
        self._say(f"  mean onset:        {summary.mean_onset:.2f}")
        self._say(f"  martingale:        {summary.martingale_residual:.2e} (se {summary.martingale_stderr:.2e})")
        for path in written:
            self._say(f"Wrote {path}")
        return written

    def verify(self, check_ids: Optional[List[str]] = None, single_calibration: bool = False) -> bool:
        """
        Run checks on both calibrations, or only on the configured (c, F).

        Each report records the calibration it ran at.
        """
        cfg = self.config
        base = cfg.model_params()
        if single_calibration:
            params_set = [base]
        else:
            params_set = [base.replace(cost_c=c, cost_F=F) for _, c, F in CALIBRATIONS]
        self._banner(f"Verification suite ({len(params_set)} calibration(s))")
        vcfg = VerifyConfig(threads=self.threads, sim_seed=cfg.seed)
        reports = run_all(params_set, check_ids, vcfg, show_progress=self.verbose)
        for r in reports:
            self._say(
                f"  [{'PASS' if r.passed else 'FAIL'}] {r.check_id} F={r.calibration['cost_F']:g} "
                f"({r.runtime:.1f}s, {len(r.violations)} violations)"
            )
        path = write_reports_json(reports, self.output_dir / "verification.json")
        self._say(f"\nWrote {path}")
        return all(r.passed for r in reports)

    def reproduce(self) -> bool:
        """Both calibrations end to end; each gets its own output subdirectory."""
        passed = True
        base = self.output_dir
        for name, c, F in CALIBRATIONS:
            self._banner(f"Calibration {name}: c={c}, F={F}")
            config = self.config.merged({'cost_c': c, 'cost_F': F, 'output': str(base / name)})
            runner = ContrarianRunner(config, threads=self.threads, verbose=self.verbose)
            runner.precision()
            runner.invest_region()
            runner.welfare()
            runner.simulate()
            passed = runner.verify(single_calibration=True) and passed
        return passed


def build_parser():
    import argparse

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat JSON config file")
    common.add_argument("--output", help="Output directory (default: $CONTRARIAN_OUTPUT_DIR)")
    common.add_argument("--format", choices=["csv", "json"], help="Table format")
    common.add_argument("--seed", type=int, help="Base seed")
    common.add_argument("--bonus-kind", dest="bonus_kind", choices=["fixed", "proportional"], help="Bonus family")
    common.add_argument("--k", type=float, help="Contrarian intensity")
    common.add_argument("--k-grid", dest="k_grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"), help="k grid")
    common.add_argument("--mu", type=float, help="Public belief")
    common.add_argument("--p1", type=float, help="Observed popularity of action 1 (default: mu)")
    common.add_argument("--mu-grid", dest="mu_grid", type=float, nargs=3, metavar=("LO", "HI", "STEP"), help="Belief grid")
    common.add_argument("--rho", type=float, help="Signal precision")
    common.add_argument("--cost-c", dest="cost_c", type=float, help="Quadratic precision cost c")
    common.add_argument("--cost-F", dest="cost_F", type=float, help="Fixed acquisition cost F")
    common.add_argument("--F-grid", dest="F_grid", type=float, nargs="+", help="Fixed costs for region maps")
    common.add_argument("--lambdas", type=float, nargs="+", help="Evaluator weights")
    common.add_argument("--horizon", type=int, help="Agents per path")
    common.add_argument("--n-paths", dest="n_paths", type=int, help="Simulated paths")
    common.add_argument("--popularity-mode", dest="popularity_mode", choices=["proxy", "empirical"], help="Popularity source")
    common.add_argument("--quiet", action="store_true", help="Suppress progress output")

    parser = argparse.ArgumentParser(description="Contrarian social learning with endogenous information")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cutoff", parents=[common], help="Posterior and proxy cutoffs")
    sub.add_parser("threshold", parents=[common], help="Signal threshold and its k-sensitivity")
    sub.add_parser("precision", parents=[common], help="Precision profile CSV")
    sub.add_parser("invest-region", parents=[common], help="Investment region endpoints per (F, k)")
    sub.add_parser("welfare", parents=[common], help="Welfare curves and the published-table comparison")
    sub.add_parser("simulate", parents=[common], help="Simulated cascades")
    verify = sub.add_parser("verify", parents=[common], help="Run verification checks")
    verify.add_argument("--checks", nargs="+", help=f"Check ids: {', '.join(CHECKS)}")
    verify.add_argument(
        "--single-calibration", dest="single_calibration", action="store_true",
        help="Verify only the configured (c, F) instead of both calibrations"
    )
    sub.add_parser("reproduce", parents=[common], help="Both calibrations end to end")
    return parser


OVERRIDE_KEYS = [
    'output', 'format', 'seed', 'bonus_kind', 'k', 'k_grid', 'mu', 'p1', 'mu_grid', 'rho',
    'cost_c', 'cost_F', 'F_grid', 'lambdas', 'horizon', 'n_paths', 'popularity_mode'
]


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # Load environment variables
    load_dotenv()

    try:
        overrides = {key: getattr(args, key) for key in OVERRIDE_KEYS}
        config = load_config(args.config, overrides)
        runner = ContrarianRunner(config, verbose=not args.quiet)

        if args.command == "verify":
            return EXIT_OK if runner.verify(args.checks, args.single_calibration) else EXIT_CHECK_FAILED
        if args.command == "reproduce":
            return EXIT_OK if runner.reproduce() else EXIT_CHECK_FAILED

        handlers = {
            'cutoff': runner.cutoff,
            'threshold': runner.threshold,
            'precision': runner.precision,
            'invest-region': runner.invest_region,
            'welfare': runner.welfare,
            'simulate': runner.simulate,
        }
        handlers[args.command]()
        return EXIT_OK

    except ValueError as e:
        # ConfigError, unknown check ids and domain violations are usage errors
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
