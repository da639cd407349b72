"""
Unit tests for the keyed random source and golden-section search.
"""

import sys
from pathlib import Path

import pytest

# Add utils to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'utils'))

from optimize import golden_section_max
from rng import CounterRNG


class TestCounterRNG:
    """Test suite for keyed draws."""

    def test_draw_depends_only_on_key(self):
        rng = CounterRNG(42)
        first = rng.normal(3)
        rng.normal(1)
        rng.bernoulli(0)
        assert rng.normal(3) == first
        assert CounterRNG(42).normal(3) == first

    def test_different_steps_differ(self):
        rng = CounterRNG(7)
        assert rng.normal(1) != rng.normal(2)
        assert CounterRNG(8).normal(1) != rng.normal(1)

    def test_location_and_scale(self):
        rng = CounterRNG(3)
        z = rng.normal(5)
        assert rng.normal(5, loc=1.0, scale=2.0) == pytest.approx(1.0 + 2.0 * z)

    def test_bernoulli_extremes(self):
        rng = CounterRNG(0)
        assert all(rng.bernoulli(t, 1.0) == 1 for t in range(20))
        assert all(rng.bernoulli(t, 0.0) == 0 for t in range(20))

    def test_negative_seed_rejected(self):
        with pytest.raises(ValueError):
            CounterRNG(-1)


class TestGoldenSection:
    """Test suite for bracketed maximization."""

    def test_quadratic(self):
        x, fx = golden_section_max(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, tol=1e-9)
        assert x == pytest.approx(0.3, abs=1e-8)
        assert fx == pytest.approx(0.0, abs=1e-15)

    def test_maximum_at_edge(self):
        x, _ = golden_section_max(lambda x: x, 0.0, 2.0, tol=1e-8)
        assert x == pytest.approx(2.0, abs=1e-7)

    def test_degenerate_bracket(self):
        assert golden_section_max(lambda x: x * x, 1.0, 1.0) == (1.0, 1.0)

    def test_empty_bracket(self):
        with pytest.raises(ValueError):
            golden_section_max(lambda x: x, 1.0, 0.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
