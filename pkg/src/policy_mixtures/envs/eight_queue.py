"""The three-server, eight-queue network, simulated without a state bound.

Two pipelines: jobs entering queue 1 pass queues 2 and 3, jobs entering
queue 4 pass queues 5 to 8. The server layout is configurable; the default
puts queues 1 and 4 on server 1, queues 2, 5 and 6 on server 2 and queues
3, 7 and 8 on server 3.
"""

from __future__ import annotations

from collections.abc import Sequence

from .network import FamilyRule, QueueNetworkConfig, QueueNetworkSimulator


# (p1, p2, p3, reference average cost, reference standard error)
EIGHT_QUEUE_REFERENCE = (
    (0.8, 0.5, 0.5, 21.78, 0.16),
    (0.5, 0.8, 0.5, 22.47, 0.08),
    (0.5, 0.5, 0.8, 22.98, 0.12),
)

DEFAULT_SERVERS = ((0, 3), (1, 4, 5), (2, 6, 7))


def eight_queue_config(
    arrival_rate: float = 0.02,
    service_rates: Sequence[float] = (0.12, 0.1, 0.1, 0.12, 0.1, 0.1, 0.1, 0.1),
    servers: Sequence[Sequence[int]] = DEFAULT_SERVERS,
) -> QueueNetworkConfig:
    """Returns the unbounded eight-queue network."""
    return QueueNetworkConfig(
        capacities=(None,) * 8,
        arrival_rates=(arrival_rate, 0.0, 0.0, arrival_rate, 0.0, 0.0, 0.0, 0.0),
        service_rates=tuple(service_rates),
        servers=tuple(tuple(queues) for queues in servers),
        routing=(1, 2, None, 4, 5, 6, 7, None),
    )


def eight_queue_simulator(config: QueueNetworkConfig | None = None) -> QueueNetworkSimulator:
    """Returns a forward simulator of the network."""
    return QueueNetworkSimulator(config or eight_queue_config())


def family_policy_8q(p1: float, p2: float, p3: float, config: QueueNetworkConfig | None = None) -> FamilyRule:
    """Returns the longest-queue rule with server probabilities ``(p1, p2, p3)``."""
    return FamilyRule(config or eight_queue_config(), (p1, p2, p3))


def reference_rules_8q(config: QueueNetworkConfig | None = None) -> list[FamilyRule]:
    """Returns the three reference rules in reference order."""
    config = config or eight_queue_config()
    return [family_policy_8q(p1, p2, p3, config) for p1, p2, p3, _, _ in EIGHT_QUEUE_REFERENCE]
