"""Test Suite for the Queueing Environments.

This module contains test functions for the generic uniformized network, the
longest-queue rule family, the single queue, the four-queue network and the
eight-queue network.

Fixtures:
    - small_network: Provides the four-queue network truncated at two jobs per queue.
    - small_queue: Provides a single queue of capacity 10 with unit cost weights.

Functions:
    - test_network_validation: Tests rejection of malformed networks.
    - test_network_actions: Tests action enumeration and legality.
    - test_encode_decode: Tests the mixed-radix state index.
    - test_network_events: Tests arrivals, services and boundary rules.
    - test_network_mdp: Tests the tabular MDP of a bounded network.
    - test_family_rule: Tests the longest-queue rule distributions.
    - test_family_rule_validation: Tests rejection of bad server probabilities.
    - test_simulator_transition: Tests successor selection from a uniform draw.
    - test_single_queue_mdp: Tests single-queue transitions and costs.
    - test_single_queue_validation: Tests rejection of bad queue parameters.
    - test_single_queue_primal_is_monotone: Tests that mixing toward the first policy only adds cost.
    - test_single_queue_dual_beats_primal: Tests that the dual grid reaches the best base policy.
    - test_reference_basis_4q: Tests the reference basis on the truncated network.
    - test_reference_cost_report: Tests the exact costs of the reference policies.
    - test_eight_queue: Tests the unbounded network and its reference rules.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from policy_mixtures.dual_data_type import DualSpace, dual_objective
from policy_mixtures.envs import (
    EIGHT_QUEUE_REFERENCE,
    FOUR_QUEUE_REFERENCE,
    IDLE,
    FamilyRule,
    QueueNetworkConfig,
    SingleQueueConfig,
    eight_queue_config,
    eight_queue_simulator,
    family_policy_4q,
    four_queue_config,
    four_queue_mdp,
    network_events,
    network_mdp,
    reference_basis_4q,
    reference_cost_report,
    reference_rules_8q,
    single_queue_basis,
    single_queue_mdp,
    single_queue_policy,
)
from policy_mixtures.exceptions import InvalidInputError
from policy_mixtures.mdp_data_type import average_cost_exact
from policy_mixtures.mixture_data_type import MixtureWeight, primal_objective
from policy_mixtures.sgd_utils import dual_grid_search


@pytest.fixture()
def small_network() -> QueueNetworkConfig:
    """Provides the four-queue network truncated at two jobs per queue.

    Returns:
        QueueNetworkConfig: 81 states and 9 actions.
    """
    return four_queue_config(capacity=2)


@pytest.fixture()
def small_queue() -> SingleQueueConfig:
    """Provides a single queue of capacity 10 with unit cost weights.

    Returns:
        SingleQueueConfig: Cost ``x^2 + a^2``.
    """
    return SingleQueueConfig(capacity=10, action_weight=1.0)


@pytest.mark.parametrize(
    ("changes", "message"),
    [
        ({"arrival_rates": (0.1,)}, "arrival_rates has 1 entries"),
        ({"capacities": (0, 2)}, "at least 1"),
        ({"arrival_rates": (-0.1, 0.0)}, "nonnegative"),
        ({"servers": ((0,),)}, "exactly one server"),
        ({"routing": (1, 0)}, "cycle"),
        ({"routing": (5, None)}, "out of range"),
        ({"service_rates": (0.6, 0.6), "servers": ((0,), (1,))}, "exceeds 1"),
        ({"discount": 1.0}, "Discount"),
    ],
)
def test_network_validation(changes: dict, message: str) -> None:
    """Tests rejection of malformed networks."""
    settings = {
        "capacities": (2, 2),
        "arrival_rates": (0.1, 0.0),
        "service_rates": (0.3, 0.3),
        "servers": ((0, 1),),
        "routing": (1, None),
    }
    settings.update(changes)
    with pytest.raises(InvalidInputError, match=message):
        QueueNetworkConfig(**settings)


def test_network_actions(small_network: QueueNetworkConfig) -> None:
    """Tests action enumeration and legality.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        Actions are the product of per-server choices with idling first, and the
        legality mask admits exactly the nine one-queue-per-server vectors.
    """
    actions = small_network.actions()
    assert small_network.num_actions == len(actions) == 9
    assert actions[0] == (IDLE, IDLE)
    assert actions[3] == (0, IDLE)
    assert actions[8] == (3, 2)
    assert small_network.action_vector(8) == (0, 0, 1, 1)
    mask = small_network.legal_mask()
    assert mask.sum() == 9
    assert not mask[0b1001]  # queues 1 and 4 share server 1
    assert mask[0b1010]


def test_encode_decode(small_network: QueueNetworkConfig) -> None:
    """Tests the mixed-radix state index.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        Queue 1 is the most significant digit and decoding inverts encoding.
    """
    assert small_network.num_states == 81
    assert small_network.encode((1, 0, 0, 2)) == 29
    assert small_network.decode(29) == (1, 0, 0, 2)
    assert all(small_network.encode(small_network.decode(i)) == i for i in range(81))


def test_network_events(small_network: QueueNetworkConfig) -> None:
    """Tests arrivals, services and boundary rules.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        Arrivals to a full queue are lost, a job routed into a full queue leaves,
        and the self-loop carries the remaining mass.
    """
    events = network_events(small_network, (2, 0, 0, 0), (0, IDLE))
    assert events == [(0.08, (2, 0, 1, 0)), (0.12, (1, 1, 0, 0)), (pytest.approx(0.8), (2, 0, 0, 0))]
    blocked = network_events(small_network, (1, 2, 0, 0), (0, IDLE))
    assert (0.12, (0, 2, 0, 0)) in blocked
    idle = network_events(small_network, (0, 0, 0, 0), (0, 2))
    assert [nxt for _, nxt in idle] == [(1, 0, 0, 0), (0, 0, 1, 0), (0, 0, 0, 0)]


def test_network_mdp(small_network: QueueNetworkConfig) -> None:
    """Tests the tabular MDP of a bounded network.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        The MDP is sparse, starts empty and charges the number of jobs.
    """
    mdp, mask = four_queue_mdp(small_network)
    assert mdp.is_sparse
    assert (mdp.num_states, mdp.num_actions) == (81, 9)
    assert mdp.initial_dist[0] == 1.0
    np.testing.assert_array_equal(mdp.cost[29], np.full(9, 3.0))
    assert mask.sum() == mdp.num_actions
    with pytest.raises(InvalidInputError, match="unbounded"):
        network_mdp(eight_queue_config())


def test_family_rule(small_network: QueueNetworkConfig) -> None:
    """Tests the longest-queue rule distributions.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        Servers idle on empty queues, serve a lone queue with probability p and
        favor the longest queue with ties to the lowest index.
    """
    rule = FamilyRule(small_network, (0.9, 0.7))
    empty = rule.distribution((0, 0, 0, 0))
    assert empty[0] == 1.0
    lone = rule.distribution((0, 1, 0, 0))
    assert lone[1] == pytest.approx(0.7)
    assert lone[0] == pytest.approx(0.3)
    longest = rule.distribution((1, 0, 0, 2))
    assert longest[6] == pytest.approx(0.9)
    assert longest[3] == pytest.approx(0.1)
    tie = rule.server_distribution(0, (1, 0, 0, 1))
    assert tie == {0: 0.9, 3: pytest.approx(0.1)}
    assert repr(rule) == "FamilyRule(0.9, 0.7)"
    policy = family_policy_4q(0.9, 0.7, small_network)
    np.testing.assert_allclose(policy.probs.sum(axis=1), 1.0)
    np.testing.assert_allclose(policy.probs[29], longest)


def test_family_rule_validation(small_network: QueueNetworkConfig) -> None:
    """Tests rejection of bad server probabilities.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        A wrong count or a probability outside [0, 1] is rejected.
    """
    with pytest.raises(InvalidInputError, match="2 servers"):
        FamilyRule(small_network, (0.5,))
    with pytest.raises(InvalidInputError, match=r"\[0, 1\]"):
        FamilyRule(small_network, (0.5, 1.5))


def test_simulator_transition() -> None:
    """Tests successor selection from a uniform draw.

    Asserts:
        The cumulative event list is searched in order with the self-loop last.
    """
    simulator = eight_queue_simulator()
    start = simulator.initial_state(np.random.default_rng(0))
    assert start == (0,) * 8
    idle = 0
    assert simulator.transition(start, idle, 0.01) == (1, 0, 0, 0, 0, 0, 0, 0)
    assert simulator.transition(start, idle, 0.03) == (0, 0, 0, 1, 0, 0, 0, 0)
    assert simulator.transition(start, idle, 0.5) == start
    assert simulator.cost((1, 0, 2, 0, 0, 0, 0, 3), idle) == 6.0


def test_single_queue_mdp(small_queue: SingleQueueConfig) -> None:
    """Tests single-queue transitions and costs.

    Args:
        small_queue (SingleQueueConfig): The queue provided by the fixture.

    Asserts:
        Boundary rows, an interior row and the quadratic cost are as specified.
    """
    mdp = single_queue_mdp(small_queue)
    assert (mdp.num_states, mdp.num_actions) == (11, 4)
    assert mdp.transition[0, 2, 1] == pytest.approx(0.3)
    assert mdp.transition[0, 2, 0] == pytest.approx(0.7)
    assert mdp.transition[5, 3, 4] == pytest.approx(0.65)
    assert mdp.transition[5, 3, 5] == pytest.approx(0.05)
    assert mdp.transition[10, 0, 10] == pytest.approx(1.0 - 0.1625)
    assert mdp.cost[2, 0] == pytest.approx(4.0 + 0.1625**2)
    default = single_queue_mdp()
    assert default.num_states == 100
    assert default.cost[0, 3] == pytest.approx(2500.0 * 0.65**2)


def test_single_queue_validation(small_queue: SingleQueueConfig) -> None:
    """Tests rejection of bad queue parameters.

    Args:
        small_queue (SingleQueueConfig): The queue provided by the fixture.

    Asserts:
        Zero capacity, an out-of-range arrival probability, rates that overflow
        a step and a policy of the wrong length are rejected.
    """
    with pytest.raises(InvalidInputError, match="Capacity"):
        SingleQueueConfig(capacity=0)
    with pytest.raises(InvalidInputError, match="Arrival probability"):
        SingleQueueConfig(arrival_prob=1.0)
    with pytest.raises(InvalidInputError, match="exceeds 1"):
        SingleQueueConfig(arrival_prob=0.4)
    with pytest.raises(InvalidInputError, match="Expected 4 action probabilities"):
        single_queue_policy(small_queue, [0.5, 0.5])


def test_single_queue_primal_is_monotone() -> None:
    """Tests that mixing toward the first policy only adds cost.

    Asserts:
        ``J(w pi_1 + (1 - w) pi_2)`` under the average criterion increases in ``w``.
    """
    mdp, basis = single_queue_mdp(), single_queue_basis()
    values = [
        primal_objective(mdp, basis, MixtureWeight.on_simplex([w, 1.0 - w]), "average")
        for w in np.linspace(0.0, 1.0, 11)
    ]
    assert all(later > earlier for earlier, later in zip(values, values[1:]))


def test_single_queue_dual_beats_primal() -> None:
    """Tests that the dual grid reaches the best base policy.

    Asserts:
        The dual grid minimum is no larger than ``J(pi_2)``, the primal minimum.
    """
    mdp, basis = single_queue_mdp(), single_queue_basis()
    space = DualSpace.from_policies(mdp, basis, radius=1.0, criterion="average")
    _, best, evaluated = dual_grid_search(space, lambda p: dual_objective(mdp, space, p, "average"), 0.05)
    second = primal_objective(mdp, basis, MixtureWeight.vertex(2, 1), "average")
    assert best <= second + 1e-6
    assert all(math.isfinite(value) for _, value in evaluated)


def test_reference_basis_4q(small_network: QueueNetworkConfig) -> None:
    """Tests the reference basis on the truncated network.

    Args:
        small_network (QueueNetworkConfig): The network provided by the fixture.

    Asserts:
        Five policies in table order with finite positive average costs.
    """
    basis = reference_basis_4q(small_network)
    assert basis.size == len(FOUR_QUEUE_REFERENCE) == 5
    mdp = network_mdp(small_network)
    costs = [average_cost_exact(mdp, policy) for policy in basis.policies]
    assert all(0.0 < cost < 8.0 for cost in costs)


@pytest.mark.slow
def test_reference_cost_report() -> None:
    """Tests the exact costs of the reference policies.

    Asserts:
        Every reference policy gets a finite positive cost on the default network.
    """
    report = reference_cost_report()
    assert [(row.p1, row.p2) for row in report.rows] == [(p1, p2) for p1, p2, _ in FOUR_QUEUE_REFERENCE]
    assert all(math.isfinite(row.computed) and row.computed > 0 for row in report.rows)
    assert isinstance(report.ranking_matches, bool)


def test_eight_queue() -> None:
    """Tests the unbounded network and its reference rules.

    Asserts:
        The network is unbounded with 48 actions and three rules in table order.
    """
    config = eight_queue_config()
    assert not config.bounded
    assert config.num_actions == 48
    assert config.max_total_rate == pytest.approx(0.36)
    with pytest.raises(InvalidInputError, match="unbounded"):
        _ = config.num_states
    rules = reference_rules_8q(config)
    assert [rule.probs for rule in rules] == [(p1, p2, p3) for p1, p2, p3, _, _ in EIGHT_QUEUE_REFERENCE]
    row = rules[0].distribution((1, 0, 0, 0, 0, 0, 0, 0))
    assert row.sum() == pytest.approx(1.0)
    assert row.max() == pytest.approx(0.8)
