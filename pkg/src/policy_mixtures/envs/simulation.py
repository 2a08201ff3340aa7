"""Long-run cost estimation and visit statistics on forward simulators.

Action rules are anything with ``num_actions`` and ``distribution(state)``; a
:class:`StationaryPolicy` is wrapped as a :class:`TableRule` automatically, so
tabular and simulated environments share the same entry points.
"""

from __future__ import annotations

import functools
import logging
import math

from collections import Counter
from collections.abc import Hashable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Protocol, Union, runtime_checkable

import numpy as np

from ..dual_data_type import DualPoint, DualSpace, extract_policy, xi
from ..exceptions import InfeasibleMixtureError, InvalidInputError
from ..mdp_data_type import DIST_TOL, FloatArray, StationaryPolicy, TabularMdp, average_cost_exact
from ..mixture_data_type import Evaluator
from ..rollout_utils import ForwardSimulator, TabularSimulator, child_rng
from ..sgd_utils import DualEvaluator


logger = logging.getLogger(__name__)

DEFAULT_BATCHES = 20
RULE_CACHE = 1 << 16


@runtime_checkable
class ActionRule(Protocol):
    """A state-dependent action distribution over ``num_actions`` actions."""

    num_actions: int

    def distribution(self, state: Any) -> FloatArray:
        """Returns the action probabilities in ``state``."""


class TableRule:
    """Adapts a :class:`StationaryPolicy` to integer states.

    Args:
        policy (StationaryPolicy): Row ``x`` is the action distribution in state ``x``.
    """

    def __init__(self, policy: StationaryPolicy):
        """Stores the policy table."""
        self.policy = policy
        self.num_actions = policy.num_actions

    def distribution(self, state: int) -> FloatArray:
        """Returns row ``state`` of the policy table.

        Args:
            state (int): A state index.

        Returns:
            FloatArray: The action probabilities.
        """
        return self.policy.probs[int(state)]


class MixtureRule:
    """The state-wise mixture ``sum_i w_i rule_i`` of action rules.

    Weights may leave the simplex as long as each visited row stays a
    distribution.

    Args:
        rules (Sequence[ActionRule]): Base rules with a common action count.
        weights (Sequence[float] | FloatArray): One weight per rule.

    Raises:
        InvalidInputError: If the lengths or action counts disagree.
    """

    def __init__(self, rules: Sequence[ActionRule], weights: Union[Sequence[float], FloatArray]):
        """Stores the rules and the weights."""
        self.rules = tuple(rules)
        self.weights = np.asarray(weights, dtype=np.float64).ravel()
        if not self.rules or self.weights.size != len(self.rules):
            raise InvalidInputError(f"Got {self.weights.size} weights for {len(self.rules)} rules")
        counts = {rule.num_actions for rule in self.rules}
        if len(counts) != 1:
            raise InvalidInputError(f"Rules disagree on the number of actions: {sorted(counts)}")
        self.num_actions = counts.pop()

    def distribution(self, state: Any) -> FloatArray:
        """Returns the mixed distribution.

        Raises:
            InfeasibleMixtureError: If the mixed row is not a distribution. The
                error's ``state`` is ``-1`` for non-integer states.
        """
        row = sum(w * rule.distribution(state) for w, rule in zip(self.weights, self.rules))
        row = np.asarray(row, dtype=np.float64)
        if row.min() < -DIST_TOL or abs(row.sum() - 1.0) > DIST_TOL:
            raise InfeasibleMixtureError(state if isinstance(state, int) else -1, row.tolist())
        row = np.clip(row, 0.0, None)
        return row / row.sum()


class LookupRule:
    """A policy table indexed by a list of states, uniform everywhere else.

    Args:
        keys (Sequence[Hashable]): The states, in row order of ``policy``.
        policy (StationaryPolicy): One row per key.
    """

    def __init__(self, keys: Sequence[Hashable], policy: StationaryPolicy):
        """Indexes the keys."""
        if len(keys) != policy.num_states:
            raise InvalidInputError(f"Got {len(keys)} keys for a policy over {policy.num_states} states")
        self.policy = policy
        self.num_actions = policy.num_actions
        self._rows = {key: idx for idx, key in enumerate(keys)}
        self._uniform = np.full(self.num_actions, 1.0 / self.num_actions)

    def distribution(self, state: Hashable) -> FloatArray:
        """Returns the row for ``state``.

        Args:
            state (Hashable): Any state of the environment.

        Returns:
            FloatArray: The table row for a known key, the uniform distribution otherwise.
        """
        idx = self._rows.get(state)
        return self._uniform if idx is None else self.policy.probs[idx]


RuleLike = Union[ActionRule, StationaryPolicy]
Environment = Union[ForwardSimulator, TabularMdp]


def as_rule(rule: RuleLike) -> ActionRule:
    """Wraps policy tables, returns rules unchanged."""
    return TableRule(rule) if isinstance(rule, StationaryPolicy) else rule


def as_simulator(env: Environment) -> ForwardSimulator:
    """Wraps tabular MDPs, returns simulators unchanged."""
    return TabularSimulator(env) if isinstance(env, TabularMdp) else env


class _ActionSampler:
    def __init__(self, rule: ActionRule):
        self.rule = rule
        self._cumulative = functools.lru_cache(maxsize=RULE_CACHE)(self._build)

    def _build(self, state: Hashable) -> np.ndarray:
        return np.cumsum(self.rule.distribution(state))

    def __call__(self, state: Hashable, rng: np.random.Generator) -> int:
        cumulative = self._cumulative(state)
        index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
        return min(index, cumulative.size - 1)


def _simulate_costs(
    rule: ActionRule,
    simulator: ForwardSimulator,
    horizon: int,
    rng: np.random.Generator,
) -> FloatArray:
    sample = _ActionSampler(rule)
    costs = np.empty(horizon)
    state = simulator.initial_state(rng)
    for t in range(horizon):
        action = sample(state, rng)
        costs[t] = simulator.cost(state, action)
        state = simulator.step(state, action, rng)
    return costs


def batch_means(values: FloatArray, num_batches: int = DEFAULT_BATCHES) -> tuple[float, float]:
    """Returns the mean of ``values`` and its batch-means standard error.

    The series is cut into ``num_batches`` contiguous, nearly equal batches.
    With fewer than two batches the standard error is ``nan``.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 1:
        raise InvalidInputError("Cannot average an empty series")
    batches = min(num_batches, values.size)
    means = np.array([chunk.mean() for chunk in np.array_split(values, batches)])
    if batches < 2:
        return float(values.mean()), math.nan
    return float(values.mean()), float(means.std(ddof=1) / math.sqrt(batches))


def average_cost(
    rule: RuleLike,
    env: Environment,
    horizon: int,
    seed: int,
    num_batches: int = DEFAULT_BATCHES,
    exact: bool = False,
) -> tuple[float, float]:
    """Estimates the long-run average cost of ``rule`` from the start state.

    Args:
        rule (RuleLike): Policy table or action rule.
        env (Environment): Tabular MDP or forward simulator.
        horizon (int): Number of simulated steps, at least 1.
        seed (int): Run seed; the stream is ``child_rng(seed, "simulate")``.
        num_batches (int): Batches for the standard error.
        exact (bool): Use the stationary distribution instead of simulating;
            needs a tabular MDP and a policy table.

    Returns:
        tuple[float, float]: ``(mean, standard error)``; the error is ``0`` on
        the exact path.

    Raises:
        InvalidInputError: If ``horizon`` is not positive or the exact path is
            requested for a simulator.
    """
    if exact:
        if not isinstance(env, TabularMdp) or not isinstance(rule, StationaryPolicy):
            raise InvalidInputError("Exact average cost needs a tabular MDP and a policy table")
        return average_cost_exact(env, rule), 0.0
    if horizon < 1:
        raise InvalidInputError(f"horizon must be at least 1, got {horizon}")
    logger.info("Simulating %d steps", horizon)
    costs = _simulate_costs(as_rule(rule), as_simulator(env), horizon, child_rng(seed, "simulate"))
    return batch_means(costs, num_batches)


def replicated_average_cost(
    rule: RuleLike,
    env: Environment,
    horizon: int,
    seed: int,
    replications: int,
    workers: int = 1,
) -> tuple[float, float]:
    """Averages independent runs, each with stream ``child_rng(seed, "batch-means", i)``.

    Returns:
        tuple[float, float]: Mean of the run averages and its standard error.
    """
    if replications < 2:
        raise InvalidInputError(f"Need at least two replications, got {replications}")
    action_rule, simulator = as_rule(rule), as_simulator(env)

    def run(index: int) -> float:
        return float(_simulate_costs(action_rule, simulator, horizon, child_rng(seed, "batch-means", index)).mean())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            means = np.array(list(pool.map(run, range(replications))))
    else:
        means = np.array([run(index) for index in range(replications)])
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(replications))


@dataclass(frozen=True, eq=False)
class EmpiricalOccupancies:
    """Long-run visit frequencies of several rules over a shared state list.

    Attributes:
        keys (tuple[Hashable, ...]): Every state visited by at least one rule, sorted.
        columns (FloatArray): ``(K*A) x m`` frequencies, row ``k*A + a``.
        costs (FloatArray): Flattened ``c(key, a)``.
        num_actions (int): ``A``.
    """

    keys: tuple[Hashable, ...]
    columns: FloatArray
    costs: FloatArray
    num_actions: int

    def lookup_rule(self, policy: StationaryPolicy) -> LookupRule:
        """Returns ``policy`` as a rule on the visited states."""
        return LookupRule(self.keys, policy)

    def dual_rule(self, space: DualSpace, point: DualPoint) -> LookupRule:
        """Returns the policy extracted from ``xi_theta`` as a rule."""
        return self.lookup_rule(extract_policy(xi(space, point), self.num_actions))


def empirical_occupancies(
    simulator: ForwardSimulator,
    rules: Sequence[RuleLike],
    horizon: int,
    seed: int,
) -> EmpiricalOccupancies:
    """Counts state-action visits of each rule over ``horizon`` steps.

    Rule ``i`` runs on ``child_rng(seed, "empirical", i)`` from the start state.
    """
    if horizon < 1:
        raise InvalidInputError(f"horizon must be at least 1, got {horizon}")
    counters = []
    for index, rule in enumerate(rules):
        rng = child_rng(seed, "empirical", index)
        sample = _ActionSampler(as_rule(rule))
        visits: Counter[tuple[Hashable, int]] = Counter()
        state = simulator.initial_state(rng)
        for _ in range(horizon):
            action = sample(state, rng)
            visits[(state, action)] += 1
            state = simulator.step(state, action, rng)
        counters.append(visits)

    keys = tuple(sorted({state for visits in counters for state, _ in visits}))
    rows = {key: idx for idx, key in enumerate(keys)}
    num_actions = simulator.num_actions
    columns = np.zeros((len(keys) * num_actions, len(counters)))
    for col, visits in enumerate(counters):
        for (state, action), count in visits.items():
            columns[rows[state] * num_actions + action, col] = count / horizon
    costs = np.array([simulator.cost(key, a) for key in keys for a in range(num_actions)])
    logger.info("Empirical occupancies cover %d states", len(keys))
    return EmpiricalOccupancies(keys, columns, costs, num_actions)


def make_simulation_evaluator(
    simulator: ForwardSimulator,
    rules: Sequence[RuleLike],
    horizon: int,
    seed: int,
) -> Evaluator:
    """Returns ``f(w)``, the simulated average cost of the mixture of ``rules``.

    Every call reuses the same seed, so nearby weights see common random numbers.
    """
    base = [as_rule(rule) for rule in rules]

    def evaluate(w: FloatArray) -> float:
        return average_cost(MixtureRule(base, w), simulator, horizon, seed)[0]

    return evaluate


def make_lookup_evaluator(
    simulator: ForwardSimulator,
    occupancies: EmpiricalOccupancies,
    space: DualSpace,
    horizon: int,
    seed: int,
) -> DualEvaluator:
    """Returns ``g(theta)``, the simulated average cost of the extracted dual policy."""

    def evaluate(point: DualPoint) -> float:
        return average_cost(occupancies.dual_rule(space, point), simulator, horizon, seed)[0]

    return evaluate
