"""Test Suite for Roll-out Utilities.

This module contains test functions for seeded streams, row-wise categorical
sampling, tabular forward simulation and Monte Carlo occupancy estimation.

Fixtures:
    - small_instance: Provides a small random MDP with a random policy.

Functions:
    - test_child_rng_is_reproducible: Tests that named streams are deterministic.
    - test_categorical_table: Tests row-wise sampling frequencies.
    - test_categorical_table_rejects: Tests rejection of invalid weights.
    - test_tabular_simulator: Tests one-step simulation on a deterministic MDP.
    - test_estimate_occupancy_matches_exact: Tests the roll-out estimate against the linear solve.
    - test_estimate_occupancy_ignores_workers: Tests that threading does not change the estimate.
    - test_estimate_occupancy_needs_batch_simulator: Tests rejection of one-trajectory simulators.
    - test_sample_state_action: Tests single draws from an occupancy measure.
    - test_occupancy_sampler_support: Tests that mixture draws stay in the union support.
"""

from __future__ import annotations

import numpy as np
import pytest

from policy_mixtures.exceptions import InvalidInputError
from policy_mixtures.mdp_data_type import (
    OccupancyMeasure,
    StationaryPolicy,
    TabularMdp,
    exact_occupancy,
    random_mdp,
    random_policy,
)
from policy_mixtures.rollout_utils import (
    CategoricalTable,
    ForwardSimulator,
    OccupancySampler,
    TabularSimulator,
    child_rng,
    estimate_occupancy,
    sample_state_action,
)


@pytest.fixture()
def small_instance() -> tuple[TabularMdp, StationaryPolicy]:
    """Provides a small random MDP with a random policy.

    Returns:
        tuple[TabularMdp, StationaryPolicy]: A 5-state, 2-action instance with discount 0.8.
    """
    rng = np.random.default_rng(5)
    return random_mdp(5, 2, 0.8, rng), random_policy(5, 2, rng)


def test_child_rng_is_reproducible() -> None:
    """Tests that named streams are deterministic.

    Asserts:
        The same seed, name and index give the same draws; changing any of them does not.
    """
    first = child_rng(7, "sgd").random(4)
    np.testing.assert_array_equal(first, child_rng(7, "sgd").random(4))
    assert not np.array_equal(first, child_rng(7, "rollout").random(4))
    assert not np.array_equal(first, child_rng(8, "sgd").random(4))
    assert not np.array_equal(child_rng(7, "empirical", 0).random(4), child_rng(7, "empirical", 1).random(4))


def test_categorical_table() -> None:
    """Tests row-wise sampling frequencies.

    Asserts:
        A one-hot row always yields its column; a split row yields both columns about equally.
    """
    table = CategoricalTable(np.array([[0.0, 1.0, 0.0], [0.5, 0.0, 0.5]]))
    rng = np.random.default_rng(0)
    assert set(table.sample(np.zeros(500, dtype=np.int64), rng).tolist()) == {1}
    draws = table.sample(np.ones(20000, dtype=np.int64), rng)
    assert set(draws.tolist()) == {0, 2}
    assert np.mean(draws == 0) == pytest.approx(0.5, abs=0.02)
    assert table.sample(np.array([[0, 1], [1, 0]]), rng).shape == (2, 2)


@pytest.mark.parametrize(
    ("weights", "message"),
    [
        ([[1.0, -0.5]], "nonnegative"),
        ([[1.0, 0.0], [0.0, 0.0]], "Row 1 has no probability mass"),
    ],
)
def test_categorical_table_rejects(weights: list[list[float]], message: str) -> None:
    """Tests rejection of invalid weights."""
    with pytest.raises(InvalidInputError, match=message):
        CategoricalTable(np.array(weights))


def test_tabular_simulator() -> None:
    """Tests one-step simulation on a deterministic MDP.

    Asserts:
        The simulator starts in the initial state, follows the transition and reports costs.
    """
    transition = np.zeros((3, 1, 3))
    transition[0, 0, 1] = transition[1, 0, 2] = transition[2, 0, 0] = 1.0
    mdp = TabularMdp(3, 1, np.array([[1.0], [2.0], [3.0]]), transition, np.array([0.0, 1.0, 0.0]), 0.9)
    simulator = TabularSimulator(mdp)
    assert isinstance(simulator, ForwardSimulator)
    rng = np.random.default_rng(1)
    state = simulator.initial_state(rng)
    assert state == 1
    assert simulator.step(state, 0, rng) == 2
    assert simulator.cost(2, 0) == 3.0
    np.testing.assert_array_equal(simulator.next_states(np.array([0, 1, 2]), np.zeros(3, dtype=np.int64), rng), [1, 2, 0])


def test_estimate_occupancy_matches_exact(small_instance: tuple[TabularMdp, StationaryPolicy]) -> None:
    """Tests the roll-out estimate against the linear solve.

    Args:
        small_instance (tuple[TabularMdp, StationaryPolicy]): The instance provided by the fixture.

    Asserts:
        Every entry of the estimate is within 0.02 of the exact measure.
    """
    mdp, policy = small_instance
    estimate = estimate_occupancy(mdp, policy, num_episodes=20000, seed=3)
    assert estimate.state_action.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(estimate.state_action, exact_occupancy(mdp, policy).state_action, atol=0.02)


def test_estimate_occupancy_ignores_workers(small_instance: tuple[TabularMdp, StationaryPolicy]) -> None:
    """Tests that threading does not change the estimate.

    Args:
        small_instance (tuple[TabularMdp, StationaryPolicy]): The instance provided by the fixture.

    Asserts:
        One and three workers give identical estimates; zero episodes are rejected.
    """
    mdp, policy = small_instance
    serial = estimate_occupancy(mdp, policy, num_episodes=2500, seed=9)
    threaded = estimate_occupancy(mdp, policy, num_episodes=2500, seed=9, workers=3)
    np.testing.assert_array_equal(serial.state_action, threaded.state_action)
    with pytest.raises(InvalidInputError, match="num_episodes"):
        estimate_occupancy(mdp, policy, num_episodes=0, seed=9)


def test_estimate_occupancy_needs_batch_simulator(small_instance: tuple[TabularMdp, StationaryPolicy]) -> None:
    """Tests rejection of one-trajectory simulators.

    Args:
        small_instance (tuple[TabularMdp, StationaryPolicy]): The instance provided by the fixture.

    Asserts:
        A simulator without the batch protocol is rejected with a clear error.
    """

    class Walk:
        """A walk on the integers, one trajectory at a time."""

        num_actions = 2

        def initial_state(self, rng: np.random.Generator) -> int:
            """Starts at zero."""
            return 0

        def step(self, state: int, action: int, rng: np.random.Generator) -> int:
            """Moves right on action 1."""
            return state + action

        def cost(self, state: int, action: int) -> float:
            """Charges the position."""
            return float(state)

    _, policy = small_instance
    walk = Walk()
    assert isinstance(walk, ForwardSimulator)
    with pytest.raises(InvalidInputError, match="not a BatchSimulator"):
        estimate_occupancy(walk, policy, num_episodes=10, seed=1)  # type: ignore[arg-type]


def test_sample_state_action() -> None:
    """Tests single draws from an occupancy measure.

    Asserts:
        A point mass is always drawn; an all-zero measure is rejected.
    """
    rng = np.random.default_rng(2)
    mu = OccupancyMeasure.from_state_action([0.0, 0.0, 0.0, 1.0, 0.0, 0.0], 2)
    assert {sample_state_action(mu, rng) for _ in range(50)} == {(1, 1)}
    with pytest.raises(InvalidInputError, match="all-zero"):
        sample_state_action(OccupancyMeasure.from_state_action(np.zeros(4), 2), rng)


def test_occupancy_sampler_support() -> None:
    """Tests that mixture draws stay in the union support.

    Asserts:
        Draws only hit rows where some column has mass, and both columns are used.
    """
    columns = np.array([[0.5, 0.0], [0.5, 0.0], [0.0, 0.0], [0.0, 1.0]])
    sampler = OccupancySampler(columns)
    draws = sampler.draw(4000, np.random.default_rng(4))
    assert set(draws.tolist()) == {0, 1, 3}
    assert np.mean(draws == 3) == pytest.approx(0.5, abs=0.03)
    np.testing.assert_allclose(sampler.mixture_mass, [0.5, 0.5, 0.0, 1.0])
