"""Queueing benchmark environments."""

from __future__ import annotations

from .eight_queue import (
    EIGHT_QUEUE_REFERENCE,
    eight_queue_config,
    eight_queue_simulator,
    family_policy_8q,
    reference_rules_8q,
)
from .four_queue import (
    FOUR_QUEUE_REFERENCE,
    ReferenceCostReport,
    ReferenceCostRow,
    family_policy_4q,
    four_queue_config,
    four_queue_mdp,
    reference_basis_4q,
    reference_cost_report,
)
from .network import (
    IDLE,
    FamilyRule,
    QueueNetworkConfig,
    QueueNetworkSimulator,
    network_events,
    network_mdp,
    tabulate_rule,
)
from .simulation import (
    ActionRule,
    EmpiricalOccupancies,
    LookupRule,
    MixtureRule,
    TableRule,
    average_cost,
    batch_means,
    empirical_occupancies,
    make_lookup_evaluator,
    make_simulation_evaluator,
    replicated_average_cost,
)
from .single_queue import (
    REFERENCE_POLICIES,
    SingleQueueConfig,
    single_queue_basis,
    single_queue_mdp,
    single_queue_policy,
)


__all__ = [
    "EIGHT_QUEUE_REFERENCE",
    "FOUR_QUEUE_REFERENCE",
    "IDLE",
    "REFERENCE_POLICIES",
    "ActionRule",
    "EmpiricalOccupancies",
    "FamilyRule",
    "LookupRule",
    "MixtureRule",
    "QueueNetworkConfig",
    "QueueNetworkSimulator",
    "ReferenceCostReport",
    "ReferenceCostRow",
    "SingleQueueConfig",
    "TableRule",
    "average_cost",
    "batch_means",
    "eight_queue_config",
    "eight_queue_simulator",
    "empirical_occupancies",
    "family_policy_4q",
    "family_policy_8q",
    "four_queue_config",
    "four_queue_mdp",
    "make_lookup_evaluator",
    "make_simulation_evaluator",
    "network_events",
    "network_mdp",
    "reference_basis_4q",
    "reference_cost_report",
    "reference_rules_8q",
    "replicated_average_cost",
    "single_queue_basis",
    "single_queue_mdp",
    "single_queue_policy",
    "tabulate_rule",
]
