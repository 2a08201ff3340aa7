"""Test Suite for Occupancy Cache Files.

This module contains test functions for writing, reading and matching
``occupancies.txt`` files.

Fixtures:
    - columns: Provides a small occupancy matrix with two columns.

Functions:
    - test_encode_layout: Tests the header, comment and value lines.
    - test_write_read_exact: Tests that reloaded values are bit-identical.
    - test_decode_without_comment: Tests files without the provenance comment.
    - test_decode_errors: Tests line-anchored parse errors.
    - test_encode_rejects_bad_shape: Tests the action-count check.
    - test_load_matching: Tests reuse, staleness and unreadable files.
"""

from __future__ import annotations

import logging

from pathlib import Path

import numpy as np
import pytest

from policy_mixtures.cache_utils import (
    CACHE_FILE,
    decode_occupancies,
    encode_occupancies,
    load_matching,
    read_occupancies,
    write_occupancies,
)
from policy_mixtures.exceptions import InvalidInputError


@pytest.fixture()
def columns() -> np.ndarray:
    """Provides a small occupancy matrix with two columns.

    Returns:
        np.ndarray: Two states, two actions, values that need 17 digits.
    """
    return np.array([[0.1, 0.5], [0.2, 0.0], [1.0 / 3.0, 0.25], [0.7 - 1.0 / 3.0, 0.25]])


def test_encode_layout(columns: np.ndarray) -> None:
    """Tests the header, comment and value lines.

    Args:
        columns (np.ndarray): The matrix provided by the fixture.

    Asserts:
        The file lists ``X A m``, the provenance comment, then one block per column.
    """
    lines = encode_occupancies(columns, 2, "e" * 4, "p" * 4, "average").splitlines()
    assert lines[0] == "2 2 2"
    assert lines[1] == "# env=eeee policies=pppp criterion=average"
    assert lines[2] == "0 0 0.10000000000000001"
    assert lines[6] == "0 0 0.5"
    assert lines[9] == "1 1 0.25"
    assert len(lines) == 10


def test_write_read_exact(tmp_path: Path, columns: np.ndarray) -> None:
    """Tests that reloaded values are bit-identical.

    Args:
        tmp_path (Path): Pytest temporary directory.
        columns (np.ndarray): The matrix provided by the fixture.

    Asserts:
        Values, action count and provenance survive a write and a read.
    """
    path = write_occupancies(tmp_path / "run" / CACHE_FILE, columns, 2, "abc", "def", "discounted")
    cache = read_occupancies(path)
    np.testing.assert_array_equal(cache.columns, columns)
    assert cache.num_actions == 2
    assert cache.matches("abc", "def", "discounted")
    assert not cache.matches("abc", "def", "average")


def test_decode_without_comment() -> None:
    """Tests files without the provenance comment.

    Asserts:
        The columns are read and the provenance fields are ``None``.
    """
    cache = decode_occupancies("1 2 1\n0 0 0.25\n0 1 0.75\n")
    np.testing.assert_array_equal(cache.columns, [[0.25], [0.75]])
    assert (cache.env_hash, cache.policy_hash, cache.criterion) == (None, None, None)


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("", "occ.txt:1: empty"),
        ("1 x 1\n", "occ.txt:1: header"),
        ("1 0 1\n", "occ.txt:1: header values"),
        ("1 2 1\n# something\n0 0 1\n0 1 0\n", "occ.txt:2: malformed"),
        ("1 2 1\n0 0 1\n", "occ.txt:2: expected 2 value lines"),
        ("1 2 1\n0 0 1\n0 1\n", "occ.txt:2: "),
        ("1 2 1\n0 0 0.5\n0 0 0.5\n", "occ.txt:3: expected pair"),
    ],
)
def test_decode_errors(text: str, message: str) -> None:
    """Tests line-anchored parse errors."""
    with pytest.raises(InvalidInputError, match=message):
        decode_occupancies(text, "occ.txt")


def test_encode_rejects_bad_shape(columns: np.ndarray) -> None:
    """Tests the action-count check.

    Args:
        columns (np.ndarray): The matrix provided by the fixture.

    Asserts:
        Four rows cannot be split into three actions.
    """
    with pytest.raises(InvalidInputError, match="3 actions"):
        encode_occupancies(columns, 3)


def test_load_matching(tmp_path: Path, columns: np.ndarray, caplog: pytest.LogCaptureFixture) -> None:
    """Tests reuse, staleness and unreadable files.

    Args:
        tmp_path (Path): Pytest temporary directory.
        columns (np.ndarray): The matrix provided by the fixture.
        caplog (pytest.LogCaptureFixture): Log capture.

    Asserts:
        Matching files are reused; missing, stale and broken files give ``None``.
    """
    path = tmp_path / CACHE_FILE
    assert load_matching(path, "abc", "def", "discounted") is None
    write_occupancies(path, columns, 2, "abc", "def", "discounted")
    np.testing.assert_array_equal(load_matching(path, "abc", "def", "discounted"), columns)
    assert load_matching(path, "abc", "other", "discounted") is None
    path.write_text("garbage\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING, logger="policy_mixtures.cache_utils"):
        assert load_matching(path, "abc", "def", "discounted") is None
    assert "Ignoring unreadable occupancy cache" in caplog.text
