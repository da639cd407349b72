"""
Unit tests for the run configuration and the command-line driver.
"""

import json
import math
import sys
from pathlib import Path

import pandas as pd
import pytest

# Add project root, src and utils to path
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent.parent / 'utils'))

from config import THREADS_ENV, ConfigError, RunConfig, expand_grid, load_config, save_config, threads_from_env
from contrarian import (
    CALIBRATIONS,
    EXIT_OK,
    EXIT_USAGE,
    PRECISION_COLUMNS,
    ContrarianRunner,
    main,
    read_table,
    write_table,
)


class TestConfig:
    """Test suite for RunConfig and its helpers."""

    def test_expand_grid_inclusive(self):
        grid = expand_grid([0.0, 1.2, 0.1])
        assert len(grid) == 13
        assert grid[-1] == 1.2
        assert grid[3] == 0.3

    def test_expand_grid_invalid(self):
        with pytest.raises(ConfigError):
            expand_grid([0.0, 1.0])
        with pytest.raises(ConfigError):
            expand_grid([1.0, 0.0, 0.1])

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({'k': 0.2, 'kappa': 1.0})

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig(mu=1.0)
        with pytest.raises(ConfigError):
            RunConfig(lambdas=[1.5])
        with pytest.raises(ConfigError):
            RunConfig(popularity_mode="counts")

    def test_merged_ignores_missing_flags(self):
        config = RunConfig(k=0.3).merged({'k': None, 'cost_F': 0.16})
        assert config.k == 0.3
        assert config.cost_F == 0.16

    def test_file_then_flags(self, tmp_path):
        path = save_config(RunConfig(k=0.3, seed=7), tmp_path / "run.json")
        config = load_config(path, {'seed': 11})
        assert config.k == 0.3
        assert config.seed == 11

    def test_model_params(self):
        params = RunConfig(k=0.4, cost_F=0.16).model_params(k=0.2)
        assert params.k == 0.2
        assert params.cost_F == 0.16

    def test_threads_from_env(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert threads_from_env() == 1
        monkeypatch.setenv(THREADS_ENV, "3")
        assert threads_from_env() == 3
        monkeypatch.setenv(THREADS_ENV, "zero")
        with pytest.raises(ConfigError):
            threads_from_env()


class TestCommands:
    """Test suite for subcommands and exit codes."""

    @pytest.fixture
    def quiet_runner(self, tmp_path):
        def build(**values):
            return ContrarianRunner(RunConfig(output=str(tmp_path), **values), threads=1, verbose=False)
        return build

    def test_cutoff(self, tmp_path):
        assert main(["cutoff", "--mu", "0.6", "--k", "0.5", "--output", str(tmp_path), "--quiet"]) == EXIT_OK

    def test_cutoff_defaults_to_belief_proxy(self, quiet_runner):
        result = quiet_runner(mu=0.6, k=0.5).cutoff()
        assert result['p1'] == 0.6
        assert result['cutoff'] == result['proxy_cutoff'] == pytest.approx(0.55)
        assert result['proxy_gap'] == 0.0

    def test_cutoff_with_observed_popularity(self, quiet_runner):
        result = quiet_runner(mu=0.6, p1=0.8, k=0.5).cutoff()
        assert result['cutoff'] == pytest.approx(0.65)
        assert result['proxy_cutoff'] == pytest.approx(0.55)
        assert result['proxy_gap'] == pytest.approx(0.1)
        assert result['proxy_gap'] <= result['proxy_error_bound'] + 1e-12

    def test_p1_flag_reaches_config(self, tmp_path):
        code = main(["cutoff", "--mu", "0.6", "--p1", "0.8", "--k", "0.5", "--output", str(tmp_path), "--quiet"])
        assert code == EXIT_OK
        assert main(["cutoff", "--p1", "1.5", "--output", str(tmp_path), "--quiet"]) == EXIT_USAGE

    def test_threshold_at_forced_cutoff(self, tmp_path):
        assert main(["threshold", "--mu", "0.9", "--k", "3", "--output", str(tmp_path), "--quiet"]) == EXIT_OK

    def test_threshold_follows_bonus_kind(self, quiet_runner):
        proportional = quiet_runner(mu=0.4, k=0.2, rho=2.0).threshold()
        assert proportional['cutoff'] == pytest.approx(0.48)
        assert proportional['ds_dk'] == pytest.approx(-0.2003205, abs=1e-7)

        # Fixed indicator at mu = 0.4: action 1 is the minority, so c = (1 - k) / 2
        fixed = quiet_runner(mu=0.4, k=0.2, rho=2.0, bonus_kind="fixed").threshold()
        assert fixed['cutoff'] == pytest.approx(0.4)
        assert fixed['s_star'] == pytest.approx(0.5)
        assert math.isnan(fixed['ds_dk'])

    def test_precision_table(self, tmp_path):
        code = main([
            "precision", "--k-grid", "0", "0.4", "0.2", "--mu-grid", "0.3", "0.7", "0.2",
            "--output", str(tmp_path), "--quiet"
        ])
        assert code == EXIT_OK
        frame = read_table(tmp_path / "precision_profile.csv")
        assert list(frame.columns) == PRECISION_COLUMNS
        assert len(frame) == 9
        center = frame[(frame['mu'] == 0.5) & (frame['k'] == 0.0)].iloc[0]
        assert center['invests'] == 1
        assert center['s_star'] == 0.5

    def test_json_format(self, tmp_path):
        code = main([
            "invest-region", "--k-grid", "0", "0", "1", "--mu-grid", "0.4", "0.6", "0.05",
            "--F-grid", "0.02", "--format", "json", "--output", str(tmp_path), "--quiet"
        ])
        assert code == EXIT_OK
        rows = json.loads((tmp_path / "investment_regions.json").read_text())
        assert rows[0]['F'] == 0.02
        assert rows[0]['mu_lo'] < 0.5 < rows[0]['mu_hi']

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_tables_read_back_exactly(self, tmp_path, fmt):
        frame = pd.DataFrame({
            'mu': [0.1 + 0.2, 1.0 / 3.0, 0.7],
            'invests': [1, 0, 1],
            's_star': [math.inf, 0.5, -math.inf],
            'net_value': [math.nan, 2.0 ** -40, 0.08091234567890123]
        })
        path = write_table(frame, tmp_path, "table", fmt)
        pd.testing.assert_frame_equal(read_table(path), frame, check_exact=True)

    def test_simulate_writes_paths(self, tmp_path):
        code = main([
            "simulate", "--k", "0.4", "--horizon", "8", "--n-paths", "3", "--seed", "5",
            "--output", str(tmp_path), "--quiet"
        ])
        assert code == EXIT_OK
        frame = read_table(tmp_path / "paths.csv")
        assert len(frame) == 24
        summary = json.loads((tmp_path / "ensemble_summary.json").read_text())
        assert summary['n_paths'] == 3 and summary['seed'] == 5

    def test_verify_covers_both_calibrations(self, tmp_path):
        code = main(["verify", "--checks", "threshold_sensitivity", "--output", str(tmp_path), "--quiet"])
        assert code == EXIT_OK
        data = json.loads((tmp_path / "verification.json").read_text())
        assert data['passed'] is True
        assert [r['calibration']['cost_F'] for r in data['reports']] == [F for _, _, F in CALIBRATIONS]
        assert all(r['passed'] for r in data['reports'])

    def test_verify_single_calibration(self, tmp_path):
        code = main([
            "verify", "--checks", "threshold_identities", "--single-calibration", "--cost-F", "0.16",
            "--output", str(tmp_path), "--quiet"
        ])
        assert code == EXIT_OK
        data = json.loads((tmp_path / "verification.json").read_text())
        assert len(data['reports']) == 1
        assert data['reports'][0]['calibration']['cost_F'] == 0.16

    def test_unknown_check_is_usage_error(self, tmp_path):
        assert main(["verify", "--checks", "nope", "--output", str(tmp_path), "--quiet"]) == EXIT_USAGE

    def test_bad_config_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({'kappa': 1}))
        assert main(["cutoff", "--config", str(bad), "--quiet"]) == EXIT_USAGE

    def test_invalid_flag_value(self, tmp_path):
        assert main(["cutoff", "--mu", "1.5", "--output", str(tmp_path), "--quiet"]) == EXIT_USAGE


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
