"""The single queue with a controlled service rate."""

from __future__ import annotations

import logging

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidInputError
from ..mdp_data_type import StationaryPolicy, TabularMdp
from ..mixture_data_type import PolicyBasis


logger = logging.getLogger(__name__)

DEFAULT_SERVICE_RATES = (0.1625, 0.325, 0.4875, 0.65)

# two state-independent policies with heavily overlapping occupancy measures
REFERENCE_POLICIES = (
    (0.0, 0.0, 0.5, 0.5),
    (0.0, 0.1, 0.45, 0.45),
)


@dataclass(frozen=True)
class SingleQueueConfig:
    """A queue of capacity ``L`` with arrival probability ``p``.

    Each step a job leaves with the chosen service rate ``a``, a job arrives
    with probability ``p``, and nothing happens otherwise. The cost is
    ``queue_weight * x^2 + action_weight * a^2``.

    Attributes:
        capacity (int): ``L``; states are ``0..L``.
        arrival_prob (float): ``p``.
        service_rates (tuple[float, ...]): The action set.
        queue_weight (float): Coefficient of ``x^2``.
        action_weight (float): Coefficient of ``a^2``.
        discount (float): Discount factor of the MDP.
    """

    capacity: int = 99
    arrival_prob: float = 0.3
    service_rates: tuple[float, ...] = DEFAULT_SERVICE_RATES
    queue_weight: float = 1.0
    action_weight: float = 2500.0
    discount: float = 0.99

    def __post_init__(self) -> None:
        """Checks that every interior row is a valid distribution.

        Raises:
            InvalidInputError: On a bad capacity or rates.
        """
        if self.capacity < 1:
            raise InvalidInputError(f"Capacity must be at least 1, got {self.capacity}")
        if not 0.0 < self.arrival_prob < 1.0:
            raise InvalidInputError(f"Arrival probability must lie in (0, 1), got {self.arrival_prob!r}")
        if not self.service_rates or min(self.service_rates) < 0:
            raise InvalidInputError(f"Service rates must be nonnegative, got {self.service_rates}")
        if self.arrival_prob + max(self.service_rates) > 1.0:
            raise InvalidInputError(
                f"p + max service rate = {self.arrival_prob + max(self.service_rates)!r} exceeds 1"
            )

    @property
    def num_states(self) -> int:
        """``L + 1``."""
        return self.capacity + 1

    @property
    def num_actions(self) -> int:
        """Number of service rates."""
        return len(self.service_rates)


def single_queue_mdp(config: SingleQueueConfig | None = None) -> TabularMdp:
    """Builds the dense single-queue MDP starting from the empty queue.

    Args:
        config (SingleQueueConfig | None): Parameters, defaults when omitted.

    Returns:
        TabularMdp: ``L + 1`` states, one action per service rate.
    """
    config = config or SingleQueueConfig()
    size, top, p = config.num_states, config.capacity, config.arrival_prob
    rates = np.asarray(config.service_rates, dtype=np.float64)
    transition = np.zeros((size, rates.size, size))

    transition[0, :, 1] = p
    transition[0, :, 0] = 1.0 - p
    for x in range(1, top):
        transition[x, :, x - 1] = rates
        transition[x, :, x + 1] = p
        transition[x, :, x] = 1.0 - rates - p
    transition[top, :, top - 1] = rates
    transition[top, :, top] = 1.0 - rates

    states = np.arange(size, dtype=np.float64)
    cost = config.queue_weight * states[:, None] ** 2 + config.action_weight * rates[None, :] ** 2
    alpha = np.zeros(size)
    alpha[0] = 1.0
    logger.debug("Single queue: L=%d p=%.6g", top, p)
    return TabularMdp(size, rates.size, cost, transition, alpha, config.discount)


def single_queue_policy(config: SingleQueueConfig, action_probs: Sequence[float]) -> StationaryPolicy:
    """Returns the policy using the same action distribution in every state.

    Raises:
        InvalidInputError: If the distribution length does not match the actions.
    """
    probs = np.asarray(action_probs, dtype=np.float64)
    if probs.shape != (config.num_actions,):
        raise InvalidInputError(f"Expected {config.num_actions} action probabilities, got {list(action_probs)}")
    return StationaryPolicy(np.tile(probs, (config.num_states, 1)))


def single_queue_basis(
    config: SingleQueueConfig | None = None,
    action_probs: Sequence[Sequence[float]] = REFERENCE_POLICIES,
) -> PolicyBasis:
    """Returns a basis of state-independent policies."""
    config = config or SingleQueueConfig()
    return PolicyBasis(single_queue_policy(config, probs) for probs in action_probs)
