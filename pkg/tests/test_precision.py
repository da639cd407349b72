"""
Unit tests for the precision solver and investment regions.
"""

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

# Add src and utils to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent.parent / 'utils'))

from bonus import BonusKind, BonusSpec
from payoff import ModelParams, gross_curve
from precision import (
    PrecisionCache,
    SearchBoundWarning,
    investment_region,
    investment_regions_by_cost,
    net_value_of_information,
    precision_k_slope,
    precision_profile,
    search_grid,
    solve_precision,
)

COARSE_GRID = np.round(np.arange(0.05, 0.951, 0.05), 10)
FINE_CENTER_GRID = np.round(np.arange(0.40, 0.6001, 0.01), 10)


class TestSolvePrecision:
    """Test suite for rho*(mu, k)."""

    @pytest.fixture
    def params(self):
        return ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.0), cost_c=0.6, cost_F=0.06)

    def test_center_without_bonus(self, params):
        point = solve_precision(0.5, 0.0, params)
        assert point.invests is True
        assert 0.29 <= point.rho_star <= 0.30
        assert point.s_star == 0.5
        assert point.net_value_of_information == pytest.approx(0.0809, abs=5e-4)
        assert point.value_at_optimum == pytest.approx(0.5209, abs=5e-4)

    def test_extreme_belief_does_not_invest(self, params):
        point = solve_precision(0.98, 0.0, params)
        assert point.invests is False
        assert point.rho_star == 0.0
        assert point.s_star == -math.inf
        assert point.value_at_optimum == 0.98
        assert point.net_value_of_information == pytest.approx(0.0, abs=5e-3)

    def test_free_information_bought_at_center(self, params):
        assert solve_precision(0.5, 0.0, params.replace(cost_F=0.0)).invests

    def test_value_never_below_uninformed(self, params):
        for mu in (0.1, 0.35, 0.5, 0.72):
            point = solve_precision(mu, 0.6, params)
            assert point.value_at_optimum >= point.uninformed_value
            assert point.net_value_of_information >= 0.0

    def test_invest_iff_net_value_exceeds_fixed_cost(self, params):
        for mu in COARSE_GRID:
            point = solve_precision(float(mu), 0.4, params)
            assert point.invests == (point.net_value_of_information > params.cost_F)
            assert point.invests == (point.rho_star > 0)

    def test_rejects_degenerate_belief(self, params):
        with pytest.raises(ValueError):
            solve_precision(0.0, 0.0, params)

    def test_search_bound_warning(self, params):
        with pytest.warns(SearchBoundWarning):
            solve_precision(0.5, 0.0, params.replace(rho_max=0.01))

    def test_search_grid_positive_and_increasing(self):
        grid = search_grid(50.0)
        assert grid[0] > 0
        assert grid[-1] == pytest.approx(50.0)
        assert np.all(np.diff(grid) > 0)

    def test_matches_brute_force(self, params):
        bounded = params.replace(rho_max=5.0)
        rho = np.arange(0.0, 5.0 + 5e-4, 1e-3)
        rng = np.random.default_rng(2024)
        for mu, k in zip(rng.uniform(0.1, 0.9, 5), rng.uniform(0.0, 1.2, 5)):
            model = bounded.with_k(float(k))
            point = solve_precision(float(mu), float(k), bounded)
            values = gross_curve(float(mu), rho, model).gross - 0.3 * rho ** 2 - model.cost_F * (rho > 0)
            assert point.value_at_optimum >= values.max() - 1e-12
            assert point.value_at_optimum - values.max() < 1e-5


class TestCenterAndSymmetry:
    """Test suite for properties at and around the central belief."""

    @pytest.fixture
    def params(self):
        return ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.0), cost_c=0.6, cost_F=0.06)

    def test_center_net_value_independent_of_k(self, params):
        reference = net_value_of_information(0.5, 0.0, params)
        for k in (0.3, 0.8, 1.0, 1.2):
            assert abs(net_value_of_information(0.5, k, params) - reference) < 1e-8

    def test_center_precision_flat_in_k(self, params):
        reference = solve_precision(0.5, 0.0, params).rho_star
        for k in (0.2, 0.6, 1.0):
            assert solve_precision(0.5, k, params).rho_star == pytest.approx(reference, abs=1e-6)
        assert abs(precision_k_slope(0.5, 0.2, params)) < 1e-4

    def test_slope_undefined_without_investment(self, params):
        assert math.isnan(precision_k_slope(0.98, 0.0, params))

    def test_mirror_symmetry(self, params):
        left = solve_precision(0.4, 0.3, params)
        right = solve_precision(0.6, 0.3, params)
        assert left.rho_star == pytest.approx(right.rho_star, abs=1e-6)
        assert left.invests == right.invests


class TestInvestmentRegions:
    """Test suite for I(k) and region maps."""

    @pytest.fixture
    def params(self):
        return ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.0), cost_c=0.6, cost_F=0.06)

    def test_regions_nested_up_to_unit_intensity(self, params):
        masks = [investment_region(k, params, COARSE_GRID).mask for k in (0.0, 0.5, 1.0)]
        for low, high in zip(masks, masks[1:]):
            assert not np.any(low & ~high)

    def test_center_region_is_one_interval(self, params):
        region = investment_region(0.0, params.replace(cost_F=0.02), COARSE_GRID)
        assert len(region.intervals) == 1
        lo, hi = region.intervals[0]
        assert lo < 0.5 < hi
        assert lo == pytest.approx(1.0 - hi)

    def test_huge_fixed_cost_empties_region(self, params):
        region = investment_region(0.5, params.replace(cost_F=10.0), COARSE_GRID)
        assert region.empty
        assert region.intervals == []

    def test_region_rows_by_cost(self, params):
        rows = investment_regions_by_cost([0.0], [0.02, 10.0], params, COARSE_GRID)
        assert rows[0]['F'] == 0.02 and rows[0]['mu_lo'] < 0.5
        assert rows[-1]['F'] == 10.0 and math.isnan(rows[-1]['mu_lo'])

    def test_light_cost_region_is_narrow(self, params):
        # Phi(0.48, 0) ~ 0.062 clears F = 0.06, Phi(0.47, 0) ~ 0.053 does not
        region = investment_region(0.0, params, FINE_CENTER_GRID)
        assert region.intervals == [(0.48, 0.52)]

    def test_coarse_grid_sees_only_the_center(self, params):
        region = investment_region(0.0, params, COARSE_GRID)
        assert region.intervals == [(0.5, 0.5)]

    def test_invalid_grid_rejected(self, params):
        with pytest.raises(ValueError):
            investment_region(0.0, params, [0.0, 0.5])

    def test_profile_sorted_by_belief(self, params):
        points = precision_profile(0.2, params, [0.7, 0.3, 0.5])
        assert [p.mu for p in points] == [0.3, 0.5, 0.7]

    def test_profile_threaded_matches_serial(self, params):
        serial = precision_profile(0.2, params, COARSE_GRID[:6])
        threaded = precision_profile(0.2, params, COARSE_GRID[:6], threads=3)
        assert [p.to_dict() for p in serial] == [p.to_dict() for p in threaded]


class TestPrecisionCache:
    """Test suite for memoized solves."""

    def test_hits_and_misses(self):
        params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.4))
        cache = PrecisionCache(params)
        first = cache.solve(0.5000001)
        second = cache.solve(0.5000004)
        assert first is second
        assert cache.get_stats() == {'entries': 1, 'hits': 1, 'misses': 1}

    def test_solves_at_rounded_belief(self):
        params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.4))
        cached = PrecisionCache(params).solve(0.6100002)
        direct = solve_precision(0.61, 0.4, params)
        assert cached.rho_star == direct.rho_star

    def test_shared_between_threads(self):
        params = ModelParams(BonusSpec(BonusKind.PROPORTIONAL, 0.4))
        cache = PrecisionCache(params)
        beliefs = [0.3, 0.5, 0.7] * 8
        with ThreadPoolExecutor(max_workers=4) as pool:
            points = list(pool.map(cache.solve, beliefs))
        stats = cache.get_stats()
        assert stats['entries'] == 3 and len(cache) == 3
        assert stats['misses'] == 3
        assert stats['hits'] + stats['misses'] == len(beliefs)
        for mu, point in zip(beliefs, points):
            assert point is cache.solve(mu)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
