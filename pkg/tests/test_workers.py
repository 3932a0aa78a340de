"""Tests for the deterministic fan-out helpers."""

import os
import threading
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kse_toolkit.workers import ordered_map, resolve_worker_count


def test_resolve_worker_count() -> None:
    """None or zero resolves to the CPU count; positive counts are kept."""
    assert resolve_worker_count(3) == 3
    expected = max(1, os.cpu_count() or 1)
    assert resolve_worker_count(None) == expected
    assert resolve_worker_count(0) == expected


def test_serial_path_runs_in_calling_thread() -> None:
    """One worker runs every item in the calling thread."""
    seen = ordered_map(lambda _: threading.get_ident(), [1, 2, 3], worker_count=1)
    assert set(seen) == {threading.get_ident()}


def test_results_keep_input_order_when_completion_order_differs() -> None:
    """Results follow input order even when items finish out of order."""
    def slow_first(x: int) -> int:
        time.sleep(0.02 if x == 0 else 0.0)
        return x * 10

    assert ordered_map(slow_first, [0, 1, 2, 3], worker_count=4) == [0, 10, 20, 30]


def test_lowest_index_failure_is_raised() -> None:
    """The failure of the lowest-index item is the one raised."""
    def fail(x: int) -> int:
        if x in (2, 5):
            raise ValueError(f"item {x}")
        return x

    with pytest.raises(ValueError, match="item 2"):
        ordered_map(fail, list(range(8)), worker_count=4)


def test_empty_input() -> None:
    """An empty input maps to an empty list."""
    assert ordered_map(lambda x: x, [], worker_count=4) == []


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-100, 100), max_size=20), st.integers(1, 6))
def test_worker_count_does_not_change_results(items: list[int], workers: int) -> None:
    """Any worker count matches a plain list comprehension."""
    assert ordered_map(lambda x: x * x - 1, items, worker_count=workers) == [
        x * x - 1 for x in items
    ]
