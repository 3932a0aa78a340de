"""Tests for the kernel budget rule and its configuration."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kse_toolkit.clustering import CompressionConfig, kernel_count
from kse_toolkit.enums import IndicatorKind
from kse_toolkit.errors import ConfigurationError, InputValidationError


@pytest.mark.parametrize(
    ("v", "n", "granularity", "shift", "expected"),
    [
        (0.6, 16, 4, 0, 8),
        (0.3, 16, 4, 1, 2),
        (0.0, 16, 4, 0, 0),
        (0.2, 16, 4, 0, 0),
        (1.0, 16, 4, 0, 16),
        (0.76, 16, 4, 0, 16),
        (0.75, 16, 4, 0, 8),
        (0.3, 10, 4, 0, 3),
        (0.6, 16, 4, -1, 16),
        (0.3, 16, 4, -4, 16),
        (0.9, 3, 2, 0, 3),
        (0.5, 3, 2, 0, 2),
        (0.3, 16, 4, 10, 1),
    ],
)
def test_kernel_count(v: float, n: int, granularity: int, shift: int, expected: int) -> None:
    """Budgets match hand-evaluated values of the budget rule."""
    cfg = CompressionConfig(granularity=granularity, shift=shift)
    assert kernel_count(v, n, cfg) == expected


@given(st.floats(0.0, 1.0), st.integers(1, 512), st.integers(2, 10), st.integers(-3, 6))
def test_budget_stays_within_filters(v: float, n: int, granularity: int, shift: int) -> None:
    """A budget is never negative and never exceeds N."""
    q = kernel_count(v, n, CompressionConfig(granularity=granularity, shift=shift))
    assert 0 <= q <= n


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(1, 256))
def test_budget_is_monotone_in_indicator(a: float, b: float, n: int) -> None:
    """A larger indicator never buys fewer kernels."""
    cfg = CompressionConfig(granularity=5, shift=0)
    lo, hi = sorted((a, b))
    assert kernel_count(lo, n, cfg) <= kernel_count(hi, n, cfg)


@pytest.mark.parametrize("v", [-0.01, 1.01, float("nan")])
def test_indicator_outside_unit_interval(v: float) -> None:
    """Indicators outside [0, 1] are rejected."""
    with pytest.raises(InputValidationError):
        kernel_count(v, 8, CompressionConfig())


class TestCompressionConfig:
    def test_defaults(self) -> None:
        """Default settings are G = 4, T = 0 and the KSE indicator."""
        cfg = CompressionConfig()
        assert (cfg.granularity, cfg.shift, cfg.k_neighbors, cfg.alpha) == (4, 0, 5, 1.0)
        assert cfg.indicator is IndicatorKind.KSE

    @pytest.mark.parametrize(
        "overrides",
        [
            {"granularity": 1},
            {"k_neighbors": 0},
            {"alpha": -1.0},
            {"kmeans_max_iters": 0},
            {"kmeans_tol": 0.0},
        ],
    )
    def test_rejects_bad_values(self, overrides: dict) -> None:
        """Out-of-range settings raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            CompressionConfig(**overrides)

    def test_rejects_unknown_fields(self) -> None:
        """Unknown keywords are not silently accepted."""
        with pytest.raises(ValueError):
            CompressionConfig(granularty=4)

    def test_is_frozen(self) -> None:
        """Settings cannot be changed after construction."""
        cfg = CompressionConfig()
        with pytest.raises(ValueError):
            cfg.granularity = 8  # type: ignore[misc]

    def test_echo(self) -> None:
        """The echo carries every setting that changes the result."""
        echo = CompressionConfig(granularity=6, shift=1, indicator="entropy", kmeans_seed=9).echo()
        assert echo == {
            "granularity": 6,
            "shift": 1,
            "alpha": 1.0,
            "k_neighbors": 5,
            "seed": 9,
            "indicator": "entropy",
        }
