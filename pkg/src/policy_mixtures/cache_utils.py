"""Occupancy cache files.

An ``occupancies.txt`` file starts with the line ``X A m`` and an optional
comment line ``# env=<sha256> policies=<sha256> criterion=<name>``, followed
by ``m`` blocks of ``X*A`` lines ``x a value`` in row-major order. Values are
written with 17 significant digits so that a reload is exact.
"""

from __future__ import annotations

import io
import logging
import re

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config_utils import FilePath
from .exceptions import InvalidInputError
from .export_utils import format_number
from .mdp_data_type import FloatArray


logger = logging.getLogger(__name__)

CACHE_FILE = "occupancies.txt"

_COMMENT = re.compile(r"^#\s*env=(?P<env>\S*)\s+policies=(?P<policies>\S*)\s+criterion=(?P<criterion>\S+)\s*$")


@dataclass(frozen=True, eq=False)
class OccupancyCache:
    """Contents of an occupancy cache file.

    Attributes:
        columns (FloatArray): ``(X*A) x m`` occupancy matrix.
        num_actions (int): ``A``.
        env_hash (str | None): Hash of the environment section, if recorded.
        policy_hash (str | None): Hash of the stacked policy tables, if recorded.
        criterion (str | None): ``discounted`` or ``average``, if recorded.
    """

    columns: FloatArray
    num_actions: int
    env_hash: str | None = None
    policy_hash: str | None = None
    criterion: str | None = None

    def matches(self, env_hash: str, policy_hash: str, criterion: str) -> bool:
        """Whether the file was written for the same environment, basis and criterion."""
        return (self.env_hash, self.policy_hash, self.criterion) == (env_hash, policy_hash, criterion)


def encode_occupancies(
    columns: FloatArray,
    num_actions: int,
    env_hash: str | None = None,
    policy_hash: str | None = None,
    criterion: str | None = None,
) -> str:
    """Renders an occupancy matrix in cache format.

    Raises:
        InvalidInputError: If the row count is not a multiple of ``num_actions``.
    """
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim != 2 or columns.shape[0] % num_actions:
        raise InvalidInputError(f"Cannot write occupancy matrix of shape {columns.shape} with {num_actions} actions")
    num_states = columns.shape[0] // num_actions
    lines = [f"{num_states} {num_actions} {columns.shape[1]}"]
    if env_hash is not None or policy_hash is not None or criterion is not None:
        lines.append(f"# env={env_hash or ''} policies={policy_hash or ''} criterion={criterion or 'discounted'}")
    labels = [f"{x} {a}" for x in range(num_states) for a in range(num_actions)]
    for column in columns.T:
        lines.extend(f"{label} {format_number(value)}" for label, value in zip(labels, column))
    return "\n".join(lines) + "\n"


def write_occupancies(
    path: FilePath,
    columns: FloatArray,
    num_actions: int,
    env_hash: str | None = None,
    policy_hash: str | None = None,
    criterion: str | None = None,
) -> Path:
    """Writes a cache file, creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(encode_occupancies(columns, num_actions, env_hash, policy_hash, criterion), encoding="utf-8")
    logger.info("Wrote %d occupancy columns to %s", np.shape(columns)[1], target)
    return target


def decode_occupancies(text: str, path: str = "<string>") -> OccupancyCache:
    """Parses cache-format text.

    Raises:
        InvalidInputError: With a ``path:line:`` prefix when the text is malformed.
    """
    lines = text.splitlines()
    if not lines:
        raise InvalidInputError(f"{path}:1: empty occupancy file")
    try:
        num_states, num_actions, size = (int(field) for field in lines[0].split())
    except ValueError as exc:
        raise InvalidInputError(f"{path}:1: header must be 'X A m', got {lines[0]!r}") from exc
    if min(num_states, num_actions, size) < 1:
        raise InvalidInputError(f"{path}:1: header values must be positive, got {lines[0]!r}")

    body_start = 1
    env_hash = policy_hash = criterion = None
    if len(lines) > 1 and lines[1].startswith("#"):
        match = _COMMENT.match(lines[1])
        if match is None:
            raise InvalidInputError(f"{path}:2: malformed cache comment {lines[1]!r}")
        env_hash = match["env"] or None
        policy_hash = match["policies"] or None
        criterion = match["criterion"]
        body_start = 2

    pairs = num_states * num_actions
    expected = pairs * size
    body = lines[body_start:]
    if len(body) != expected:
        raise InvalidInputError(f"{path}:{body_start + 1}: expected {expected} value lines, found {len(body)}")
    try:
        table = np.loadtxt(io.StringIO("\n".join(body)), dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise InvalidInputError(f"{path}:{body_start + 1}: unreadable value lines: {exc}") from exc
    if table.shape != (expected, 3):
        raise InvalidInputError(f"{path}:{body_start + 1}: every value line must be 'x a value'")

    x_expected = np.tile(np.repeat(np.arange(num_states), num_actions), size)
    a_expected = np.tile(np.arange(num_actions), num_states * size)
    wrong = np.flatnonzero((table[:, 0] != x_expected) | (table[:, 1] != a_expected))
    if wrong.size:
        row = int(wrong[0])
        raise InvalidInputError(
            f"{path}:{body_start + row + 1}: expected pair ({x_expected[row]}, {a_expected[row]}), "
            f"got ({body[row]})"
        )
    columns = table[:, 2].reshape(size, pairs).T.copy()
    return OccupancyCache(columns, num_actions, env_hash, policy_hash, criterion)


def read_occupancies(path: FilePath) -> OccupancyCache:
    """Reads a cache file.

    Raises:
        InvalidInputError: If the file is unreadable or malformed.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInputError(f"{path}:1: cannot read occupancy file: {exc}") from exc
    return decode_occupancies(text, str(path))


def load_matching(path: FilePath, env_hash: str, policy_hash: str, criterion: str) -> FloatArray | None:
    """Returns cached columns if ``path`` exists and was written for the same inputs.

    Unreadable or stale files are ignored with a log message.
    """
    if not Path(path).is_file():
        return None
    try:
        cache = read_occupancies(path)
    except InvalidInputError as exc:
        logger.warning("Ignoring unreadable occupancy cache: %s", exc)
        return None
    if not cache.matches(env_hash, policy_hash, criterion):
        logger.info("Occupancy cache %s is stale", path)
        return None
    logger.info("Reusing occupancy cache %s", path)
    return cache.columns
