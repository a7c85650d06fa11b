"""Tests for worker sizing and the ordered parallel map."""

from __future__ import annotations

import os

import pytest

from cca_fuse.core.parallel import THREADS_ENV, ordered_map, worker_count


def test_worker_count_override() -> None:
    assert worker_count(3) == 3


def test_worker_count_from_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    cores = os.cpu_count() or 1
    assert worker_count() == cores

    monkeypatch.setenv(THREADS_ENV, "2")
    assert worker_count() == 2
    assert worker_count(5) == 5

    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_count() == cores

    monkeypatch.setenv(THREADS_ENV, "many")
    assert worker_count() == cores


def test_ordered_map_preserves_order() -> None:
    items = list(range(50))
    assert ordered_map(lambda i: i * i, items, workers=4) == [i * i for i in items]
    assert ordered_map(lambda i: i, [], workers=4) == []


def test_ordered_map_propagates_errors() -> None:
    def fail_on_three(i: int) -> int:
        if i == 3:
            raise ValueError("three")
        return i

    with pytest.raises(ValueError, match="three"):
        ordered_map(fail_on_three, range(6), workers=2)
