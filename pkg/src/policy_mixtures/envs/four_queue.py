"""The two-server, four-queue network.

Jobs enter queues 1 and 3. Queue 1 feeds queue 2 and queue 3 feeds queue 4;
jobs leave after queues 2 and 4. Server 1 handles queues 1 and 4, server 2
handles queues 2 and 3.
"""

from __future__ import annotations

import logging

from dataclasses import dataclass

import numpy as np

from ..mdp_data_type import StationaryPolicy, TabularMdp, average_cost_exact
from ..mixture_data_type import PolicyBasis
from .network import FamilyRule, QueueNetworkConfig, network_mdp, tabulate_rule


logger = logging.getLogger(__name__)

# (p1, p2, reference average cost)
FOUR_QUEUE_REFERENCE = (
    (0.9, 0.9, 16.2950),
    (0.9, 0.7, 17.3926),
    (0.8, 0.8, 15.1535),
    (0.7, 0.9, 13.6525),
    (0.7, 0.7, 14.3266),
)


def four_queue_config(
    capacity: int = 9,
    service_rates: tuple[float, float, float, float] = (0.12, 0.12, 0.28, 0.28),
    arrival_rate: float = 0.08,
    discount: float = 0.99,
) -> QueueNetworkConfig:
    """Returns the four-queue network with per-queue capacity ``capacity``."""
    return QueueNetworkConfig(
        capacities=(capacity,) * 4,
        arrival_rates=(arrival_rate, 0.0, arrival_rate, 0.0),
        service_rates=tuple(service_rates),
        servers=((0, 3), (1, 2)),
        routing=(1, None, 3, None),
        discount=discount,
    )


def four_queue_mdp(config: QueueNetworkConfig | None = None) -> tuple[TabularMdp, np.ndarray]:
    """Returns the tabular MDP and the legality mask over ``{0, 1}^4``.

    The MDP's actions are the legal vectors only, in the order of
    :meth:`QueueNetworkConfig.actions`.
    """
    config = config or four_queue_config()
    return network_mdp(config), config.legal_mask()


def family_policy_4q(p1: float, p2: float, config: QueueNetworkConfig | None = None) -> StationaryPolicy:
    """Tabulates the longest-queue rule with server probabilities ``(p1, p2)``."""
    config = config or four_queue_config()
    return tabulate_rule(config, FamilyRule(config, (p1, p2)))


def reference_basis_4q(config: QueueNetworkConfig | None = None) -> PolicyBasis:
    """Returns the five reference family policies in reference order."""
    config = config or four_queue_config()
    return PolicyBasis(family_policy_4q(p1, p2, config) for p1, p2, _ in FOUR_QUEUE_REFERENCE)


@dataclass(frozen=True)
class ReferenceCostRow:
    """One reference policy with its reference and computed average cost."""

    p1: float
    p2: float
    reference: float
    computed: float

    @property
    def relative_error(self) -> float:
        """``|computed - reference| / reference``."""
        return abs(self.computed - self.reference) / self.reference


@dataclass(frozen=True)
class ReferenceCostReport:
    """Computed costs of the reference policies next to their reference values."""

    rows: tuple[ReferenceCostRow, ...]

    @property
    def ranking_matches(self) -> bool:
        """Whether sorting by computed cost gives the reference order."""
        expected = sorted(range(len(self.rows)), key=lambda i: self.rows[i].reference)
        computed = sorted(range(len(self.rows)), key=lambda i: self.rows[i].computed)
        return expected == computed

    def within(self, tolerance: float) -> bool:
        """Whether every relative error is at most ``tolerance``."""
        return all(row.relative_error <= tolerance for row in self.rows)


def reference_cost_report(config: QueueNetworkConfig | None = None) -> ReferenceCostReport:
    """Computes exact average costs of the reference policies."""
    config = config or four_queue_config()
    mdp = network_mdp(config)
    rows = []
    for p1, p2, reference in FOUR_QUEUE_REFERENCE:
        computed = average_cost_exact(mdp, family_policy_4q(p1, p2, config))
        logger.info("p=(%.1f, %.1f): computed %.6f, reference %.4f", p1, p2, computed, reference)
        rows.append(ReferenceCostRow(p1, p2, reference, computed))
    return ReferenceCostReport(tuple(rows))
