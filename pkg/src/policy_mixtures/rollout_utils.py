"""Roll-out utilities: seeded streams, forward simulators and sampling.

All randomness in the package is derived from one integer seed through
:func:`child_rng`, so a component always sees the same stream for the same
``(seed, name, index)`` no matter which other components ran before it.
"""

from __future__ import annotations

import logging
import zlib

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Protocol, Union, runtime_checkable

import numpy as np
import scipy.sparse

from numpy.typing import NDArray

from .exceptions import InvalidInputError
from .mdp_data_type import FloatArray, OccupancyMeasure, StationaryPolicy, TabularMdp


logger = logging.getLogger(__name__)

IntArray = NDArray[np.int64]
BatchPolicy = Callable[[IntArray, np.random.Generator], IntArray]

EPISODES_PER_CHUNK = 1000


def child_rng(seed: int, name: str, *index: int) -> np.random.Generator:
    """Returns the generator for the named stream of ``seed``.

    Args:
        seed (int): The run seed.
        name (str): Component name such as ``"rollout"`` or ``"sgd"``.
        index (int): Further integers distinguishing sub-streams.

    Returns:
        np.random.Generator: A PCG64 generator.
    """
    spawn_key = (zlib.crc32(name.encode("utf-8")), *(int(i) for i in index))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))


class CategoricalTable:
    """Samples from each row of a nonnegative matrix, many rows at a time.

    Every row is normalized and turned into cumulative sums offset by the row
    index, which gives one globally sorted key array. A draw from row ``r``
    with uniform ``u`` is then a single ``searchsorted`` for ``r + u``.

    Args:
        weights (FloatArray | scipy.sparse.spmatrix): ``R x K`` nonnegative weights.

    Raises:
        InvalidInputError: If an entry is negative or a row has no mass.
    """

    def __init__(self, weights: Union[FloatArray, scipy.sparse.spmatrix]):
        """Builds the cumulative key array."""
        rows = scipy.sparse.csr_matrix(weights, dtype=np.float64)
        rows.eliminate_zeros()
        if rows.nnz and rows.data.min() < 0:
            raise InvalidInputError("Sampling weights must be nonnegative")
        totals = np.asarray(rows.sum(axis=1)).ravel()
        if np.any(totals <= 0):
            raise InvalidInputError(f"Row {int(np.flatnonzero(totals <= 0)[0])} has no probability mass")

        self.num_rows, self.num_columns = rows.shape
        counts = np.diff(rows.indptr)
        row_ids = np.repeat(np.arange(self.num_rows), counts)
        normalized = rows.data / totals[row_ids]
        running = np.cumsum(normalized)
        before_row = np.concatenate(([0.0], running))[rows.indptr[:-1]]
        self._keys = row_ids + (running - np.repeat(before_row, counts))
        self._columns = rows.indices.astype(np.int64)
        self._row_first = rows.indptr[:-1].astype(np.int64)
        self._row_last = rows.indptr[1:].astype(np.int64) - 1

    def sample(self, rows: Any, rng: np.random.Generator) -> IntArray:
        """Draws one column index per requested row.

        Args:
            rows (Any): Row indices, any integer array shape.
            rng (np.random.Generator): Source of randomness.

        Returns:
            IntArray: Sampled column indices with the shape of ``rows``.
        """
        rows = np.asarray(rows, dtype=np.int64)
        uniforms = rng.random(rows.shape)
        pos = np.searchsorted(self._keys, rows + uniforms, side="right")
        pos = np.clip(pos, self._row_first[rows], self._row_last[rows])
        return self._columns[pos]


@runtime_checkable
class ForwardSimulator(Protocol):
    """A one-trajectory-at-a-time environment."""

    num_actions: int

    def initial_state(self, rng: np.random.Generator) -> Any:
        """Draws a start state."""

    def step(self, state: Any, action: int, rng: np.random.Generator) -> Any:
        """Draws the successor of ``state`` under ``action``."""

    def cost(self, state: Any, action: int) -> float:
        """Returns the one-step cost."""


@runtime_checkable
class BatchSimulator(Protocol):
    """A finite-state environment that advances many trajectories at once."""

    num_states: int
    num_actions: int
    discount: float

    def initial_states(self, count: int, rng: np.random.Generator) -> IntArray:
        """Draws ``count`` start states."""

    def next_states(self, states: IntArray, actions: IntArray, rng: np.random.Generator) -> IntArray:
        """Draws one successor per ``(state, action)`` pair."""


class TabularSimulator:
    """Forward simulator for a :class:`TabularMdp`.

    Implements both :class:`ForwardSimulator` and :class:`BatchSimulator`.

    Args:
        mdp (TabularMdp): The MDP to simulate.
    """

    def __init__(self, mdp: TabularMdp):
        """Precomputes samplers for the initial distribution and transitions."""
        self.mdp = mdp
        self.num_states = mdp.num_states
        self.num_actions = mdp.num_actions
        self.discount = mdp.discount
        self._initial = CategoricalTable(mdp.initial_dist[None, :])
        self._transitions = CategoricalTable(mdp.transition_rows)

    def initial_states(self, count: int, rng: np.random.Generator) -> IntArray:
        """Draws ``count`` start states from ``alpha``."""
        return self._initial.sample(np.zeros(count, dtype=np.int64), rng)

    def next_states(self, states: IntArray, actions: IntArray, rng: np.random.Generator) -> IntArray:
        """Draws successors for paired ``states`` and ``actions``."""
        return self._transitions.sample(np.asarray(states) * self.num_actions + np.asarray(actions), rng)

    def initial_state(self, rng: np.random.Generator) -> int:
        """Draws one start state."""
        return int(self.initial_states(1, rng)[0])

    def step(self, state: int, action: int, rng: np.random.Generator) -> int:
        """Draws one successor state."""
        return int(self.next_states(np.array([state]), np.array([action]), rng)[0])

    def cost(self, state: int, action: int) -> float:
        """Returns ``c(state, action)``."""
        return float(self.mdp.cost[state, action])


def policy_sampler(policy: StationaryPolicy | BatchPolicy) -> BatchPolicy:
    """Turns a policy table or callable into a vectorized action sampler."""
    if isinstance(policy, StationaryPolicy):
        table = CategoricalTable(policy.probs)
        return table.sample
    return policy


def _rollout_chunk(
    simulator: BatchSimulator,
    sampler: BatchPolicy,
    episodes: int,
    seed: int,
    chunk: int,
) -> IntArray:
    rng = child_rng(seed, "rollout", chunk)
    size = simulator.num_states * simulator.num_actions
    counts = np.zeros(size, dtype=np.int64)
    states = simulator.initial_states(episodes, rng)
    lengths = rng.geometric(1.0 - simulator.discount, size=episodes)
    step = 0
    while states.size:
        actions = np.asarray(sampler(states, rng), dtype=np.int64)
        counts += np.bincount(states * simulator.num_actions + actions, minlength=size)
        step += 1
        alive = lengths > step
        if not alive.any():
            break
        states = simulator.next_states(states[alive], actions[alive], rng)
        lengths = lengths[alive]
    return counts


def estimate_occupancy(
    simulator: BatchSimulator | TabularMdp,
    policy: StationaryPolicy | BatchPolicy,
    num_episodes: int,
    seed: int,
    workers: int = 1,
) -> OccupancyMeasure:
    """Estimates the discounted occupancy measure of ``policy`` by roll-outs.

    Each episode starts from ``alpha``, lasts a geometric number of steps with
    success probability ``1 - gamma`` and counts every visited ``(x, a)``.
    Episodes are grouped in fixed chunks with one derived stream each, so the
    estimate depends on ``seed`` but not on ``workers``.

    Only finite, indexed environments can be counted: the simulator must
    implement :class:`BatchSimulator`. A one-trajectory
    :class:`ForwardSimulator` such as the unbounded queue network has no
    state index and is rejected; count its visits with
    :func:`policy_mixtures.envs.simulation.empirical_occupancies`, which keys
    rows by the states it observes.

    Args:
        simulator (BatchSimulator | TabularMdp): The environment.
        policy (StationaryPolicy | BatchPolicy): Table or vectorized callable.
        num_episodes (int): Number of episodes, at least 1.
        seed (int): Run seed.
        workers (int): Threads used to roll out chunks.

    Returns:
        OccupancyMeasure: Normalized visit frequencies.

    Raises:
        InvalidInputError: If ``num_episodes`` is not positive or ``simulator``
            does not implement :class:`BatchSimulator`.
    """
    if num_episodes < 1:
        raise InvalidInputError(f"num_episodes must be at least 1, got {num_episodes}")
    if isinstance(simulator, TabularMdp):
        simulator = TabularSimulator(simulator)
    elif not isinstance(simulator, BatchSimulator):
        raise InvalidInputError(
            f"{type(simulator).__name__} is not a BatchSimulator; occupancy estimates need indexed finite states"
        )
    sampler = policy_sampler(policy)

    chunks = [
        (idx, min(EPISODES_PER_CHUNK, num_episodes - start))
        for idx, start in enumerate(range(0, num_episodes, EPISODES_PER_CHUNK))
    ]
    logger.info("Rolling out %d episodes in %d chunks", num_episodes, len(chunks))

    def run(item: tuple[int, int]) -> IntArray:
        idx, count = item
        return _rollout_chunk(simulator, sampler, count, seed, idx)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(item) for item in chunks]

    counts = np.sum(parts, axis=0)
    return OccupancyMeasure.from_state_action(counts / counts.sum(), simulator.num_actions)


def sample_state_action(
    mu: OccupancyMeasure,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Draws one ``(x, a)`` pair with probability proportional to ``mu``.

    Entries above ``-1e-12`` are treated as nonnegative and clipped to zero.

    Raises:
        InvalidInputError: If ``mu`` has no positive mass or a negative entry.
    """
    weights = mu.state_action
    if weights.min() < -1e-12:
        raise InvalidInputError(f"Occupancy has a negative entry {weights.min()!r}")
    weights = np.clip(weights, 0.0, None)
    if weights.sum() <= 0:
        raise InvalidInputError("Cannot sample from an all-zero occupancy measure")
    index = int(np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right"))
    index = min(index, int(np.flatnonzero(weights)[-1]))
    return divmod(index, mu.num_actions)


class OccupancySampler:
    """Draws ``(x, a)`` from the uniform mixture of ``m`` occupancy columns.

    A draw first picks a column ``i`` uniformly and then a flattened pair from
    column ``i``.

    Args:
        columns (FloatArray): ``(X*A) x m`` matrix of occupancy measures.
    """

    def __init__(self, columns: FloatArray):
        """Builds one categorical sampler per column."""
        columns = np.asarray(columns, dtype=np.float64)
        if columns.ndim != 2:
            raise InvalidInputError(f"Occupancy columns must be two-dimensional, got shape {columns.shape}")
        self.num_pairs, self.num_columns = columns.shape
        self._table = CategoricalTable(np.clip(columns.T, 0.0, None))
        self.mixture_mass = np.clip(columns, 0.0, None).sum(axis=1)

    def draw(self, count: int, rng: np.random.Generator) -> IntArray:
        """Draws ``count`` flattened pair indices."""
        chosen = rng.integers(self.num_columns, size=count)
        return self._table.sample(chosen, rng)
