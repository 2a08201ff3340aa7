"""Test Suite for Tabular MDPs.

This module contains test functions for MDP and policy validation, exact and
iterative policy evaluation, discounted and stationary occupancy measures,
and random MDP generation.

Fixtures:
    - flip_mdp: Provides a two-state MDP where action 0 stays and action 1 switches.
    - random_instance: Provides a random MDP with a random policy.

Functions:
    - test_exact_occupancy_by_hand: Tests occupancy and value against closed forms.
    - test_iterative_matches_exact: Tests value iteration against the linear solve.
    - test_sparse_matches_dense: Tests that storage format does not change results.
    - test_occupancy_is_valid: Tests normalization and the flow constraint.
    - test_stationary_distribution: Tests a two-state chain with a known answer.
    - test_stationary_distribution_ambiguous: Tests rejection of multichain inputs.
    - test_average_cost_exact: Tests the long-run average cost of an alternating policy.
    - test_mdp_validation: Tests rejection of malformed MDPs.
    - test_policy_validation: Tests rejection of malformed policy tables.
    - test_random_mdp_branching: Tests the successor count of generated MDPs.
"""

from __future__ import annotations

from typing import Any

import numpy as np
import pytest
import scipy.sparse

from policy_mixtures.exceptions import AmbiguousChainError, InvalidInputError
from policy_mixtures.mdp_data_type import (
    OccupancyMeasure,
    StationaryPolicy,
    TabularMdp,
    average_cost_exact,
    evaluate_policy_iteratively,
    exact_occupancy,
    induced_chain,
    policy_value,
    random_mdp,
    random_policy,
    stationary_distribution,
    stationary_occupancy,
)


@pytest.fixture()
def flip_mdp() -> TabularMdp:
    """Provides a two-state MDP where action 0 stays and action 1 switches.

    Returns:
        TabularMdp: Costs ``[[0, 1], [2, 3]]``, start in state 0, discount 0.5.
    """
    transition = np.zeros((2, 2, 2))
    transition[0, 0, 0] = transition[1, 0, 1] = 1.0
    transition[0, 1, 1] = transition[1, 1, 0] = 1.0
    return TabularMdp(2, 2, np.array([[0.0, 1.0], [2.0, 3.0]]), transition, np.array([1.0, 0.0]), 0.5)


@pytest.fixture()
def random_instance() -> tuple[TabularMdp, StationaryPolicy]:
    """Provides a random MDP with a random policy.

    Returns:
        tuple[TabularMdp, StationaryPolicy]: A 12-state, 3-action instance.
    """
    rng = np.random.default_rng(11)
    mdp = random_mdp(12, 3, 0.9, rng, branching=4)
    return mdp, random_policy(12, 3, rng)


def _sparse_copy(mdp: TabularMdp) -> TabularMdp:
    rows = scipy.sparse.csr_matrix(mdp.transition.reshape(mdp.num_states * mdp.num_actions, mdp.num_states))
    return TabularMdp(mdp.num_states, mdp.num_actions, mdp.cost, rows, mdp.initial_dist, mdp.discount)


def test_exact_occupancy_by_hand(flip_mdp: TabularMdp) -> None:
    """Tests occupancy and value against closed forms.

    Args:
        flip_mdp (TabularMdp): The MDP provided by the fixture.

    Asserts:
        Staying in state 0 costs 0; alternating visits the states 2:1 and costs 5/3.
    """
    stay = StationaryPolicy.deterministic([0, 0], 2)
    alternate = StationaryPolicy.deterministic([1, 1], 2)
    assert policy_value(flip_mdp, stay) == pytest.approx(0.0)
    occupancy = exact_occupancy(flip_mdp, alternate)
    np.testing.assert_allclose(occupancy.state, [2.0 / 3.0, 1.0 / 3.0])
    np.testing.assert_allclose(occupancy.as_table(), [[0.0, 2.0 / 3.0], [0.0, 1.0 / 3.0]])
    assert policy_value(flip_mdp, alternate) == pytest.approx(5.0 / 3.0)


def test_iterative_matches_exact(random_instance: tuple[TabularMdp, StationaryPolicy]) -> None:
    """Tests value iteration against the linear solve.

    Args:
        random_instance (tuple[TabularMdp, StationaryPolicy]): The instance provided by the fixture.

    Asserts:
        Both evaluations agree to 1e-9.
    """
    mdp, policy = random_instance
    assert evaluate_policy_iteratively(mdp, policy) == pytest.approx(policy_value(mdp, policy), abs=1e-9)


def test_sparse_matches_dense(random_instance: tuple[TabularMdp, StationaryPolicy]) -> None:
    """Tests that storage format does not change results.

    Args:
        random_instance (tuple[TabularMdp, StationaryPolicy]): The instance provided by the fixture.

    Asserts:
        Occupancies, chains and next-state rows agree between dense and CSR storage.
    """
    mdp, policy = random_instance
    sparse = _sparse_copy(mdp)
    assert sparse.is_sparse
    assert not mdp.is_sparse
    np.testing.assert_allclose(
        exact_occupancy(sparse, policy).state_action,
        exact_occupancy(mdp, policy).state_action,
        atol=1e-12,
    )
    chain_sparse, cost_sparse = induced_chain(sparse, policy)
    chain_dense, cost_dense = induced_chain(mdp, policy)
    np.testing.assert_allclose(chain_sparse.toarray(), chain_dense, atol=1e-14)
    np.testing.assert_allclose(cost_sparse, cost_dense)
    np.testing.assert_allclose(sparse.next_state_distribution(3, 2), mdp.next_state_distribution(3, 2))


def test_occupancy_is_valid(random_instance: tuple[TabularMdp, StationaryPolicy]) -> None:
    """Tests normalization and the flow constraint.

    Args:
        random_instance (tuple[TabularMdp, StationaryPolicy]): The instance provided by the fixture.

    Asserts:
        The measure validates and satisfies ``nu = (1 - gamma) alpha + gamma P^T mu``.
    """
    mdp, policy = random_instance
    occupancy = exact_occupancy(mdp, policy)
    occupancy.validate()
    inflow = mdp.transition_rows.T @ occupancy.state_action
    np.testing.assert_allclose(
        occupancy.state,
        (1.0 - mdp.discount) * mdp.initial_dist + mdp.discount * inflow,
        atol=1e-12,
    )


def test_occupancy_validate_rejects() -> None:
    """Tests that malformed measures fail validation.

    Asserts:
        A measure that does not sum to one raises InvalidInputError.
    """
    measure = OccupancyMeasure.from_state_action([0.25, 0.25, 0.25, 0.0], 2)
    np.testing.assert_allclose(measure.state, [0.5, 0.25])
    with pytest.raises(InvalidInputError, match="Occupancy sums to"):
        measure.validate()
    with pytest.raises(InvalidInputError, match="not a multiple"):
        OccupancyMeasure.from_state_action([0.5, 0.25, 0.25], 2)


@pytest.mark.parametrize("sparse", [False, True])
def test_stationary_distribution(sparse: bool) -> None:
    """Tests a two-state chain with a known answer."""
    chain: Any = np.array([[0.9, 0.1], [0.5, 0.5]])
    if sparse:
        chain = scipy.sparse.csr_matrix(chain)
    np.testing.assert_allclose(stationary_distribution(chain), [5.0 / 6.0, 1.0 / 6.0])


def test_stationary_distribution_ambiguous() -> None:
    """Tests rejection of multichain inputs.

    Asserts:
        The identity chain raises AmbiguousChainError.
    """
    with pytest.raises(AmbiguousChainError):
        stationary_distribution(np.eye(3))
    with pytest.raises(InvalidInputError, match="square"):
        stationary_distribution(np.ones((2, 3)) / 3.0)


def test_average_cost_exact(flip_mdp: TabularMdp) -> None:
    """Tests the long-run average cost of an alternating policy.

    Args:
        flip_mdp (TabularMdp): The MDP provided by the fixture.

    Asserts:
        Alternating spends half the time in each state and averages cost 2.
    """
    alternate = StationaryPolicy.deterministic([1, 1], 2)
    assert average_cost_exact(flip_mdp, alternate) == pytest.approx(2.0)
    np.testing.assert_allclose(stationary_occupancy(flip_mdp, alternate).state, [0.5, 0.5])


@pytest.mark.parametrize(
    ("changes", "message"),
    [
        ({"discount": 1.0}, "Discount must lie in"),
        ({"cost": np.zeros((2, 3))}, "Cost has shape"),
        ({"initial_dist": np.array([0.7, 0.7])}, "Initial distribution sums to"),
        ({"transition": np.full((2, 2, 2), 0.6)}, r"Transition row \(0, 0\) sums to"),
        ({"transition": np.zeros((2, 2, 3))}, "Transition has shape"),
    ],
)
def test_mdp_validation(flip_mdp: TabularMdp, changes: dict[str, Any], message: str) -> None:
    """Tests rejection of malformed MDPs."""
    fields = {
        "num_states": 2,
        "num_actions": 2,
        "cost": flip_mdp.cost,
        "transition": flip_mdp.transition,
        "initial_dist": flip_mdp.initial_dist,
        "discount": 0.5,
    }
    fields.update(changes)
    with pytest.raises(InvalidInputError, match=message):
        TabularMdp(**fields)


@pytest.mark.parametrize(
    ("probs", "message"),
    [
        ([[0.5, 0.6]], "Policy row 0 sums to"),
        ([[1.5, -0.5]], "negative probability at state 0"),
        ([0.5, 0.5], "non-empty X x A"),
    ],
)
def test_policy_validation(probs: Any, message: str) -> None:
    """Tests rejection of malformed policy tables."""
    with pytest.raises(InvalidInputError, match=message):
        StationaryPolicy(np.array(probs))


def test_policy_is_read_only(flip_mdp: TabularMdp) -> None:
    """Tests that policy tables cannot be modified in place.

    Args:
        flip_mdp (TabularMdp): The MDP provided by the fixture.

    Asserts:
        Writing to the table raises ValueError and a wrong shape is caught.
    """
    policy = StationaryPolicy.uniform(2, 2)
    with pytest.raises(ValueError, match="read-only"):
        policy.probs[0, 0] = 1.0
    with pytest.raises(InvalidInputError, match="MDP expects"):
        StationaryPolicy.uniform(3, 2).check_dimensions(flip_mdp)


def test_random_mdp_branching() -> None:
    """Tests the successor count of generated MDPs.

    Asserts:
        Every state-action row has exactly the requested number of successors.
    """
    mdp = random_mdp(10, 2, 0.95, np.random.default_rng(3), branching=3)
    counts = np.count_nonzero(mdp.transition_rows, axis=1)
    assert set(counts.tolist()) == {3}
    assert mdp.with_discount(0.5).discount == 0.5
