"""Mixtures of base policies and the primal objective.

A :class:`PolicyBasis` holds ``m`` stationary policies over the same state and
action spaces, and a :class:`MixtureWeight` says how to combine them state by
state: ``pi_w(a|x) = sum_i w_i pi_i(a|x)``.
"""

from __future__ import annotations

import logging

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from .exceptions import InfeasibleMixtureError, InvalidInputError
from .mdp_data_type import (
    DIST_TOL,
    FloatArray,
    StationaryPolicy,
    TabularMdp,
    average_cost_exact,
    policy_value,
)


logger = logging.getLogger(__name__)

CRITERIA = ("discounted", "average")

Evaluator = Callable[[FloatArray], float]


def check_criterion(criterion: str) -> str:
    """Returns ``criterion`` unchanged if it is ``discounted`` or ``average``.

    Raises:
        InvalidInputError: For any other value.
    """
    if criterion not in CRITERIA:
        raise InvalidInputError(f"Unknown criterion {criterion!r}; expected one of {CRITERIA}")
    return criterion


def evaluate_policy(mdp: TabularMdp, policy: StationaryPolicy, criterion: str = "discounted") -> float:
    """Returns the exact cost of ``policy`` under the given criterion."""
    if check_criterion(criterion) == "average":
        return average_cost_exact(mdp, policy)
    return policy_value(mdp, policy)


@dataclass(frozen=True, eq=False)
class PolicyBasis:
    """An ordered list of ``m >= 1`` base policies sharing ``(X, A)``.

    Attributes:
        policies (tuple[StationaryPolicy, ...]): The base policies.
    """

    policies: tuple[StationaryPolicy, ...]

    def __init__(self, policies: Iterable[StationaryPolicy]):
        """Stores the policies and checks that their shapes agree.

        Raises:
            InvalidInputError: If the basis is empty or shapes differ.
        """
        items = tuple(policies)
        if not items:
            raise InvalidInputError("A policy basis needs at least one policy")
        shape = items[0].probs.shape
        for idx, policy in enumerate(items):
            if policy.probs.shape != shape:
                raise InvalidInputError(f"Base policy {idx} has shape {policy.probs.shape}, expected {shape}")
        object.__setattr__(self, "policies", items)

    def __len__(self) -> int:
        """Returns ``m``."""
        return len(self.policies)

    def __getitem__(self, index: int) -> StationaryPolicy:
        """Returns base policy ``index``."""
        return self.policies[index]

    @property
    def size(self) -> int:
        """Number of base policies ``m``."""
        return len(self.policies)

    @property
    def num_states(self) -> int:
        """Number of states."""
        return self.policies[0].num_states

    @property
    def num_actions(self) -> int:
        """Number of actions."""
        return self.policies[0].num_actions

    def stacked(self) -> FloatArray:
        """Returns the ``m x X x A`` array of policy tables."""
        return np.stack([policy.probs for policy in self.policies])


@dataclass(frozen=True, eq=False)
class MixtureWeight:
    """A weight vector over the basis.

    Attributes:
        w (FloatArray): Length-``m`` weights.
        simplex (bool): Whether ``w`` is constrained to the probability simplex.
    """

    w: FloatArray
    simplex: bool = True

    def __post_init__(self) -> None:
        """Validates the weights for the declared regime.

        Raises:
            InvalidInputError: If the weights are empty, non-finite, or off the
                simplex while flagged ``simplex``.
        """
        w = np.array(self.w, dtype=np.float64).ravel()
        if w.size < 1 or not np.all(np.isfinite(w)):
            raise InvalidInputError(f"Mixture weights must be a non-empty finite vector, got {self.w!r}")
        if self.simplex and (w.min() < 0 or abs(w.sum() - 1.0) > DIST_TOL):
            raise InvalidInputError(f"Weights {w.tolist()} are not on the probability simplex")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def on_simplex(cls, w: Any) -> MixtureWeight:
        """Returns simplex-constrained weights."""
        return cls(np.asarray(w, dtype=np.float64), simplex=True)

    @classmethod
    def off_simplex(cls, w: Any) -> MixtureWeight:
        """Returns unconstrained weights; feasibility is checked when mixing."""
        return cls(np.asarray(w, dtype=np.float64), simplex=False)

    @classmethod
    def vertex(cls, size: int, index: int) -> MixtureWeight:
        """Returns the unit vector ``e_index`` of length ``size``."""
        w = np.zeros(size)
        w[index] = 1.0
        return cls(w, simplex=True)

    @classmethod
    def uniform(cls, size: int) -> MixtureWeight:
        """Returns equal weights ``1/size``."""
        return cls(np.full(size, 1.0 / size), simplex=True)

    @property
    def size(self) -> int:
        """Number of weights."""
        return int(self.w.size)


def mix_policies(basis: PolicyBasis, weight: MixtureWeight) -> StationaryPolicy:
    """Returns the mixture ``pi_w(a|x) = sum_i w_i pi_i(a|x)``.

    Off-simplex weights are accepted as long as every resulting row is still a
    distribution; entries within ``1e-12`` below zero are clipped.

    Args:
        basis (PolicyBasis): The base policies.
        weight (MixtureWeight): The weights.

    Returns:
        StationaryPolicy: The mixed policy.

    Raises:
        InvalidInputError: If the weight length differs from the basis size.
        InfeasibleMixtureError: If a row has a negative entry or does not sum to 1.
    """
    if weight.size != basis.size:
        raise InvalidInputError(f"Got {weight.size} weights for a basis of {basis.size} policies")
    support = np.flatnonzero(weight.w)
    if support.size == 1 and weight.w[support[0]] == 1.0:
        return basis[int(support[0])]

    probs = np.tensordot(weight.w, basis.stacked(), axes=1)
    sums = probs.sum(axis=1)
    for state in range(probs.shape[0]):
        row = probs[state]
        if row.min() < -DIST_TOL or abs(sums[state] - 1.0) > DIST_TOL:
            raise InfeasibleMixtureError(state, row.tolist())
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    return StationaryPolicy(probs)


def primal_objective(
    mdp: TabularMdp,
    basis: PolicyBasis,
    weight: MixtureWeight,
    criterion: str = "discounted",
) -> float:
    """Returns ``J(pi_w)`` for the mixture of ``basis`` under ``weight``.

    Raises:
        InfeasibleMixtureError: If the mixture is not a valid policy.
    """
    return evaluate_policy(mdp, mix_policies(basis, weight), criterion)


def make_primal_evaluator(
    mdp: TabularMdp,
    basis: PolicyBasis,
    criterion: str = "discounted",
) -> Evaluator:
    """Returns ``f(w) = J(pi_w)`` as a plain function of a weight vector.

    The evaluator accepts any vector whose mixture is a valid policy.
    """
    check_criterion(criterion)

    def evaluate(w: FloatArray) -> float:
        return primal_objective(mdp, basis, MixtureWeight.off_simplex(w), criterion)

    return evaluate


def project_simplex(v: Sequence[float] | FloatArray) -> MixtureWeight:
    """Returns the Euclidean projection of ``v`` onto the probability simplex.

    Uses the sort-and-threshold method: with ``u`` sorted in decreasing order,
    the threshold is ``(sum(u[:k]) - 1) / k`` for the largest ``k`` at which it
    stays below ``u[k-1]``.

    Args:
        v (Sequence[float] | FloatArray): Any finite vector of length ``m >= 1``.

    Returns:
        MixtureWeight: The projection, flagged ``simplex``.

    Raises:
        InvalidInputError: If ``v`` is empty or not finite.
    """
    y = np.asarray(v, dtype=np.float64).ravel()
    if y.size < 1 or not np.all(np.isfinite(y)):
        raise InvalidInputError(f"Cannot project {v!r} onto the simplex")
    if y.min() >= 0 and y.sum() == 1.0:
        return MixtureWeight(y, simplex=True)

    u = np.sort(y)[::-1]
    thresholds = (np.cumsum(u) - 1.0) / np.arange(1, y.size + 1)
    k = np.nonzero(thresholds < u)[0][-1]
    x = np.clip(y - thresholds[k], 0.0, None)
    # the clip can leave the sum a few ulps away from 1
    return MixtureWeight(x / x.sum(), simplex=True)


def primal_line_sweep(
    mdp: TabularMdp,
    basis: PolicyBasis,
    values: Iterable[float],
    criterion: str = "discounted",
) -> list[tuple[float, float]]:
    """Evaluates ``pi_w = w pi_1 + (1 - w) pi_2`` along a line of ``w`` values.

    ``w`` may leave ``[0, 1]``; points where the mixture is not a valid policy
    are reported with objective ``nan``.

    Args:
        mdp (TabularMdp): The MDP.
        basis (PolicyBasis): A basis of exactly two policies.
        values (Iterable[float]): The ``w`` values.
        criterion (str): ``discounted`` or ``average``.

    Returns:
        list[tuple[float, float]]: ``(w, J(pi_w))`` pairs in input order.

    Raises:
        InvalidInputError: If the basis does not hold two policies.
    """
    if basis.size != 2:
        raise InvalidInputError(f"A line sweep needs two base policies, got {basis.size}")
    results = []
    for value in values:
        try:
            cost = primal_objective(mdp, basis, MixtureWeight.off_simplex([value, 1.0 - value]), criterion)
        except InfeasibleMixtureError as exc:
            logger.debug("Skipping w=%r: %s", value, exc)
            cost = float("nan")
        results.append((float(value), cost))
    return results
