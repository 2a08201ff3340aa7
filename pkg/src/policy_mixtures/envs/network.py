"""Uniformized queueing networks.

A network is a set of queues, entry arrival rates, per-queue service rates, a
partition of the queues among servers and a routing map sending each served
job to a next queue or out of the system. Time is discrete and at most one
event happens per step: an arrival to queue ``q`` with probability
``lambda_q``, a service completion at a queue chosen by the action with
probability ``r_q``, and nothing otherwise.

Boundary rules: arrivals to a full queue are lost, a job routed into a full
queue leaves the system, and serving an empty queue does nothing.
"""

from __future__ import annotations

import functools
import itertools
import logging
import math

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse

from ..exceptions import InvalidInputError
from ..mdp_data_type import FloatArray, StationaryPolicy, TabularMdp


logger = logging.getLogger(__name__)

IDLE = -1
RATE_TOL = 1e-12

QueueState = tuple[int, ...]


@dataclass(frozen=True)
class QueueNetworkConfig:
    """Topology and rates of a queueing network.

    Attributes:
        capacities (tuple[int | None, ...]): Per-queue capacity, ``None`` for unbounded.
        arrival_rates (tuple[float, ...]): Per-queue external arrival probability.
        service_rates (tuple[float, ...]): Per-queue service completion probability.
        servers (tuple[tuple[int, ...], ...]): Queues handled by each server.
        routing (tuple[int | None, ...]): Next queue after service, ``None`` to exit.
        discount (float): Discount factor of the tabular MDP built from this network.
    """

    capacities: tuple[Optional[int], ...]
    arrival_rates: tuple[float, ...]
    service_rates: tuple[float, ...]
    servers: tuple[tuple[int, ...], ...]
    routing: tuple[Optional[int], ...]
    discount: float = 0.99

    def __post_init__(self) -> None:
        """Validates sizes, rates, the server partition and the routing map.

        Raises:
            InvalidInputError: If the network is malformed or its rates can exceed 1.
        """
        n = len(self.capacities)
        for name in ("arrival_rates", "service_rates", "routing"):
            if len(getattr(self, name)) != n:
                raise InvalidInputError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if any(c is not None and c < 1 for c in self.capacities):
            raise InvalidInputError(f"Capacities must be at least 1, got {self.capacities}")
        if min(self.arrival_rates + self.service_rates) < 0:
            raise InvalidInputError("Rates must be nonnegative")

        owners = sorted(q for queues in self.servers for q in queues)
        if owners != list(range(n)):
            raise InvalidInputError(f"Every queue must belong to exactly one server, got {self.servers}")

        for start in range(n):
            seen, queue = set(), start
            while queue is not None:
                if queue in seen:
                    raise InvalidInputError(f"Routing map has a cycle through queue {queue}")
                if not 0 <= queue < n:
                    raise InvalidInputError(f"Routing target {queue} is out of range")
                seen.add(queue)
                queue = self.routing[queue]

        if self.max_total_rate > 1.0 + RATE_TOL:
            raise InvalidInputError(f"Event rates can sum to {self.max_total_rate!r}, which exceeds 1")
        if not 0.0 < self.discount < 1.0:
            raise InvalidInputError(f"Discount must lie in (0, 1), got {self.discount!r}")

    @property
    def num_queues(self) -> int:
        """Number of queues."""
        return len(self.capacities)

    @property
    def max_total_rate(self) -> float:
        """Largest possible sum of event probabilities in one step."""
        busiest = sum(max(self.service_rates[q] for q in queues) for queues in self.servers)
        return sum(self.arrival_rates) + busiest

    @property
    def bounded(self) -> bool:
        """Whether every queue has a finite capacity."""
        return all(c is not None for c in self.capacities)

    @property
    def num_states(self) -> int:
        """Number of states of the bounded network."""
        if not self.bounded:
            raise InvalidInputError("An unbounded network has no finite state count")
        return math.prod(c + 1 for c in self.capacities)  # type: ignore[operator]

    def actions(self) -> list[tuple[int, ...]]:
        """Returns every action as the queue served by each server (``IDLE`` for none).

        Actions are ordered as the product of the server choices, each server
        listing ``IDLE`` first and then its queues.
        """
        return list(itertools.product(*[(IDLE, *queues) for queues in self.servers]))

    @property
    def num_actions(self) -> int:
        """Number of actions."""
        return math.prod(len(queues) + 1 for queues in self.servers)

    def action_vector(self, action: int) -> tuple[int, ...]:
        """Returns the binary serve vector of action ``action``."""
        served = set(self.actions()[action])
        return tuple(int(q in served) for q in range(self.num_queues))

    def legal_mask(self) -> np.ndarray:
        """Returns a mask over all ``2^n`` binary vectors marking the legal ones.

        Vector ``b`` is legal when every server serves at most one queue. The
        mask is indexed by the integer whose bit ``n-1-q`` is ``b[q]``.
        """
        n = self.num_queues
        mask = np.zeros(2**n, dtype=bool)
        for index in range(2**n):
            bits = [(index >> (n - 1 - q)) & 1 for q in range(n)]
            mask[index] = all(sum(bits[q] for q in queues) <= 1 for queues in self.servers)
        return mask

    def encode(self, state: Sequence[int]) -> int:
        """Mixed-radix index of a bounded state, queue 1 most significant."""
        index = 0
        for length, capacity in zip(state, self.capacities):
            index = index * (capacity + 1) + int(length)  # type: ignore[operator]
        return index

    def decode(self, index: int) -> QueueState:
        """Inverse of :meth:`encode`."""
        lengths = []
        for capacity in reversed(self.capacities):
            index, length = divmod(index, capacity + 1)  # type: ignore[operator]
            lengths.append(length)
        return tuple(reversed(lengths))

    def has_room(self, state: QueueState, queue: int) -> bool:
        """Whether ``queue`` can accept one more job."""
        capacity = self.capacities[queue]
        return capacity is None or state[queue] < capacity


def network_events(
    config: QueueNetworkConfig,
    state: QueueState,
    action: tuple[int, ...],
) -> list[tuple[float, QueueState]]:
    """Lists the successor states of one uniformized step.

    Args:
        config (QueueNetworkConfig): The network.
        state (QueueState): Queue lengths.
        action (tuple[int, ...]): Queue served by each server, or ``IDLE``.

    Returns:
        list[tuple[float, QueueState]]: ``(probability, next_state)`` pairs;
        the last entry is the self-loop carrying the remaining mass.
    """
    events = []
    for queue, rate in enumerate(config.arrival_rates):
        if rate > 0 and config.has_room(state, queue):
            nxt = list(state)
            nxt[queue] += 1
            events.append((rate, tuple(nxt)))
    for queue in action:
        if queue == IDLE or state[queue] == 0:
            continue
        nxt = list(state)
        nxt[queue] -= 1
        target = config.routing[queue]
        if target is not None and config.has_room(state, target):
            nxt[target] += 1
        events.append((config.service_rates[queue], tuple(nxt)))
    stay = 1.0 - sum(rate for rate, _ in events)
    events.append((max(stay, 0.0), tuple(state)))
    return events


def network_mdp(config: QueueNetworkConfig) -> TabularMdp:
    """Builds the tabular MDP of a bounded network.

    States use the mixed-radix order of :meth:`QueueNetworkConfig.encode`, the
    cost is the total number of jobs for every action, the initial state is the
    empty system and transitions are stored sparse.

    Raises:
        InvalidInputError: If the network is unbounded.
    """
    num_states = config.num_states
    actions = config.actions()
    num_actions = len(actions)
    logger.info("Building network MDP with %d states and %d actions", num_states, num_actions)

    rows, cols, data = [], [], []
    cost = np.zeros((num_states, num_actions))
    for index in range(num_states):
        state = config.decode(index)
        cost[index, :] = sum(state)
        for a, action in enumerate(actions):
            row = index * num_actions + a
            for probability, nxt in network_events(config, state, action):
                if probability > 0:
                    rows.append(row)
                    cols.append(config.encode(nxt))
                    data.append(probability)

    transition = scipy.sparse.csr_matrix(
        (data, (rows, cols)), shape=(num_states * num_actions, num_states)
    )
    alpha = np.zeros(num_states)
    alpha[0] = 1.0
    return TabularMdp(num_states, num_actions, cost, transition, alpha, config.discount)


class FamilyRule:
    """The longest-queue family of server rules.

    For each server with ``n`` nonempty queues: idle when ``n = 0``; serve the
    nonempty queue with probability ``p`` (idle otherwise) when ``n = 1``;
    otherwise serve the longest queue with probability ``p`` (ties go to the
    lowest index) and each other nonempty queue with ``(1 - p) / (n - 1)``.

    Args:
        config (QueueNetworkConfig): The network.
        probs (Sequence[float]): ``p_i`` per server, each in ``[0, 1]``.
    """

    def __init__(self, config: QueueNetworkConfig, probs: Sequence[float]):
        """Stores the parameters and precomputes the action index table."""
        if len(probs) != len(config.servers):
            raise InvalidInputError(f"Got {len(probs)} probabilities for {len(config.servers)} servers")
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise InvalidInputError(f"Server probabilities must lie in [0, 1], got {list(probs)}")
        self.config = config
        self.probs = tuple(float(p) for p in probs)
        self.num_actions = config.num_actions
        self._index = {action: idx for idx, action in enumerate(config.actions())}

    def server_distribution(self, server: int, state: QueueState) -> dict[int, float]:
        """Returns ``{queue or IDLE: probability}`` for one server."""
        p = self.probs[server]
        nonempty = sorted(q for q in self.config.servers[server] if state[q] > 0)
        if not nonempty:
            return {IDLE: 1.0}
        if len(nonempty) == 1:
            return {nonempty[0]: p, IDLE: 1.0 - p}
        longest = max(nonempty, key=lambda q: (state[q], -q))
        share = (1.0 - p) / (len(nonempty) - 1)
        return {q: (p if q == longest else share) for q in nonempty}

    def distribution(self, state: QueueState) -> FloatArray:
        """Returns the probability of every action in ``state``."""
        probs = np.zeros(self.num_actions)
        per_server = [self.server_distribution(s, state) for s in range(len(self.config.servers))]
        for combo in itertools.product(*[d.items() for d in per_server]):
            action = tuple(choice for choice, _ in combo)
            probs[self._index[action]] += math.prod(weight for _, weight in combo)
        return probs

    def __repr__(self) -> str:
        """Returns ``FamilyRule(p1, p2, ...)``."""
        return f"FamilyRule{self.probs}"


def tabulate_rule(config: QueueNetworkConfig, rule: FamilyRule) -> StationaryPolicy:
    """Materializes ``rule`` on every state of a bounded network."""
    table = np.array([rule.distribution(config.decode(index)) for index in range(config.num_states)])
    return StationaryPolicy(table)


class QueueNetworkSimulator:
    """Forward simulator of a network, bounded or not.

    States are tuples of queue lengths, the start state is the empty system and
    the cost of a step is the number of jobs present. Event lists are memoized
    per ``(state, action)``.

    Args:
        config (QueueNetworkConfig): The network.
        cache_size (int): Number of memoized event lists.
    """

    def __init__(self, config: QueueNetworkConfig, cache_size: int = 1 << 16):
        """Prepares the action table and the event cache."""
        self.config = config
        self.num_actions = config.num_actions
        self._actions = config.actions()
        self._events = functools.lru_cache(maxsize=cache_size)(self._cumulative_events)

    def _cumulative_events(self, state: QueueState, action: int) -> tuple[np.ndarray, list[QueueState]]:
        events = network_events(self.config, state, self._actions[action])
        return np.cumsum([p for p, _ in events]), [nxt for _, nxt in events]

    def initial_state(self, rng: np.random.Generator) -> QueueState:  # noqa: ARG002
        """Returns the empty system."""
        return (0,) * self.config.num_queues

    def transition(self, state: QueueState, action: int, uniform: float) -> QueueState:
        """Returns the successor selected by a uniform draw in ``[0, 1)``."""
        cumulative, successors = self._events(state, action)
        index = int(np.searchsorted(cumulative, uniform, side="right"))
        return successors[min(index, len(successors) - 1)]

    def step(self, state: QueueState, action: int, rng: np.random.Generator) -> QueueState:
        """Draws one successor state."""
        return self.transition(state, action, float(rng.random()))

    def cost(self, state: QueueState, action: int) -> float:  # noqa: ARG002
        """Returns the total number of jobs."""
        return float(sum(state))
