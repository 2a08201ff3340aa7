"""Policy Mixtures Library.

This library optimizes over mixtures of base policies of a Markov decision
process. It includes tabular MDPs and occupancy measures, primal
finite-difference descent on mixture weights, stochastic subgradient descent
on the dual (occupancy-measure) parameterization, the stable-set hardness
reduction, and queueing-network benchmark environments.
"""

from __future__ import annotations

from .dual_data_type import (
    DualPoint,
    DualSpace,
    dual_objective,
    extract_policy,
    improvement_bound,
    occupancy_spread_bound,
    overlap_lambda,
    overlap_theta,
    project_theta,
    stochastic_subgradient,
    surrogate_loss,
    xi,
)
from .exceptions import (
    AmbiguousChainError,
    ConfigError,
    FiniteDifferenceError,
    InfeasibleMixtureError,
    InvalidInputError,
    NumericalError,
    PolicyMixturesError,
)
from .hardness_utils import (
    Graph,
    independence_number,
    mixture_cost_closed_form,
    motzkin_straus_min,
    read_graph,
    reduction_mdp,
    stable_set_decision,
)
from .json_utils import canonical_hash, decode_json, encode_json
from .mdp_data_type import (
    OccupancyMeasure,
    StationaryPolicy,
    TabularMdp,
    average_cost_exact,
    exact_occupancy,
    policy_value,
    random_mdp,
    random_policy,
    stationary_distribution,
    stationary_occupancy,
)
from .mixture_data_type import (
    MixtureWeight,
    PolicyBasis,
    evaluate_policy,
    make_primal_evaluator,
    mix_policies,
    primal_line_sweep,
    primal_objective,
    project_simplex,
)
from .primal_utils import finite_difference_gradient, primal_descent, step_schedule
from .rollout_utils import child_rng, estimate_occupancy, sample_state_action
from .sgd_utils import SgdResult, SgdRun, dual_grid_search, sgd_optimize
from .toml_utils import decode_toml, encode_toml
from .yaml_utils import decode_yaml, encode_yaml


__version__ = "1.0.0"

__all__ = [
    "AmbiguousChainError",
    "ConfigError",
    "DualPoint",
    "DualSpace",
    "FiniteDifferenceError",
    "Graph",
    "InfeasibleMixtureError",
    "InvalidInputError",
    "MixtureWeight",
    "NumericalError",
    "OccupancyMeasure",
    "PolicyBasis",
    "PolicyMixturesError",
    "SgdResult",
    "SgdRun",
    "StationaryPolicy",
    "TabularMdp",
    "average_cost_exact",
    "canonical_hash",
    "child_rng",
    "decode_json",
    "decode_toml",
    "decode_yaml",
    "dual_grid_search",
    "dual_objective",
    "encode_json",
    "encode_toml",
    "encode_yaml",
    "estimate_occupancy",
    "evaluate_policy",
    "exact_occupancy",
    "extract_policy",
    "finite_difference_gradient",
    "improvement_bound",
    "independence_number",
    "make_primal_evaluator",
    "mix_policies",
    "mixture_cost_closed_form",
    "motzkin_straus_min",
    "occupancy_spread_bound",
    "overlap_lambda",
    "overlap_theta",
    "policy_value",
    "primal_descent",
    "primal_line_sweep",
    "primal_objective",
    "project_simplex",
    "project_theta",
    "random_mdp",
    "random_policy",
    "read_graph",
    "reduction_mdp",
    "sample_state_action",
    "sgd_optimize",
    "stable_set_decision",
    "stationary_distribution",
    "stationary_occupancy",
    "step_schedule",
    "stochastic_subgradient",
    "surrogate_loss",
    "xi",
]
