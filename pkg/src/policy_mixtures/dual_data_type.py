"""The dual space of occupancy-measure combinations.

Base policies are represented by their occupancy measures, stacked as the
columns of ``M``. A point ``theta`` with ``sum(theta) = 1`` and
``||theta||_2 <= S`` names the vector ``xi_theta = M theta``, which need not be
a valid occupancy measure; :func:`extract_policy` turns it into a policy by
normalizing its positive part state by state.
"""

from __future__ import annotations

import logging
import math

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .mdp_data_type import (
    FloatArray,
    OccupancyMeasure,
    StationaryPolicy,
    TabularMdp,
    exact_occupancy,
    stationary_occupancy,
)
from .mixture_data_type import (
    MixtureWeight,
    PolicyBasis,
    check_criterion,
    evaluate_policy,
    mix_policies,
)


logger = logging.getLogger(__name__)

THETA_TOL = 1e-9
OVERLAP_ZERO = 1e-12


@dataclass(frozen=True, eq=False)
class DualPoint:
    """A point ``theta`` on the hyperplane ``sum(theta) = 1``.

    Attributes:
        theta (FloatArray): Length-``m`` coefficients.
    """

    theta: FloatArray

    def __post_init__(self) -> None:
        """Validates the hyperplane constraint.

        Raises:
            InvalidInputError: If ``theta`` is empty, non-finite or does not sum to 1.
        """
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.size < 1 or not np.all(np.isfinite(theta)):
            raise InvalidInputError(f"theta must be a non-empty finite vector, got {self.theta!r}")
        if abs(theta.sum() - 1.0) > THETA_TOL:
            raise InvalidInputError(f"theta sums to {theta.sum()!r}, expected 1")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def norm(self) -> float:
        """Euclidean norm of ``theta``."""
        return float(np.linalg.norm(self.theta))

    @classmethod
    def uniform(cls, size: int) -> DualPoint:
        """Returns ``(1/m, ..., 1/m)``, the minimum-norm point of the hyperplane."""
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def vertex(cls, size: int, index: int) -> DualPoint:
        """Returns the unit vector ``e_index``."""
        return cls(MixtureWeight.vertex(size, index).w)


def min_radius(size: int) -> float:
    """Smallest radius ``S`` for which the dual set is non-empty, ``1/sqrt(m)``."""
    return 1.0 / math.sqrt(size)


@dataclass(frozen=True, eq=False)
class DualSpace:
    """Occupancy columns of the base policies and the radius ``S``.

    Attributes:
        columns (FloatArray): ``(X*A) x m`` matrix ``M``.
        radius (float): ``S``, at least ``1/sqrt(m)``.
        num_actions (int): ``A``, used to unflatten ``xi``.
    """

    columns: FloatArray
    radius: float
    num_actions: int

    def __post_init__(self) -> None:
        """Validates the columns and the radius.

        Raises:
            InvalidInputError: If a column is not an occupancy measure or the set is empty.
        """
        columns = np.array(self.columns, dtype=np.float64)
        if columns.ndim != 2 or columns.shape[1] < 1:
            raise InvalidInputError(f"Occupancy matrix must be (X*A) x m, got shape {columns.shape}")
        if columns.shape[0] % self.num_actions:
            raise InvalidInputError(f"{columns.shape[0]} rows is not a multiple of {self.num_actions} actions")
        sums = columns.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > THETA_TOL)
        if bad.size:
            raise InvalidInputError(f"Occupancy column {int(bad[0])} sums to {sums[bad[0]]!r}")
        if columns.min() < -OVERLAP_ZERO:
            raise InvalidInputError("Occupancy columns must be nonnegative")
        if self.radius < min_radius(columns.shape[1]) - 1e-12:
            raise InvalidInputError(
                f"Radius {self.radius!r} is below 1/sqrt(m) = {min_radius(columns.shape[1])!r}; the dual set is empty"
            )
        columns = np.clip(columns, 0.0, None)
        columns.setflags(write=False)
        object.__setattr__(self, "columns", columns)

    @classmethod
    def from_measures(cls, measures: Sequence[OccupancyMeasure], radius: float) -> DualSpace:
        """Stacks occupancy measures as the columns of ``M``."""
        if not measures:
            raise InvalidInputError("A dual space needs at least one occupancy measure")
        columns = np.column_stack([mu.state_action for mu in measures])
        return cls(columns, radius, measures[0].num_actions)

    @classmethod
    def from_policies(
        cls,
        mdp: TabularMdp,
        basis: PolicyBasis,
        radius: float,
        criterion: str = "discounted",
    ) -> DualSpace:
        """Builds ``M`` from exact discounted or stationary occupancy measures."""
        measure = stationary_occupancy if check_criterion(criterion) == "average" else exact_occupancy
        logger.info("Computing %d %s occupancy measures", basis.size, criterion)
        return cls.from_measures([measure(mdp, policy) for policy in basis.policies], radius)

    @property
    def size(self) -> int:
        """Number of base policies ``m``."""
        return int(self.columns.shape[1])

    @property
    def num_pairs(self) -> int:
        """Number of state-action pairs ``X*A``."""
        return int(self.columns.shape[0])

    @property
    def num_states(self) -> int:
        """Number of states ``X``."""
        return self.num_pairs // self.num_actions

    def contains(self, point: DualPoint, tol: float = THETA_TOL) -> bool:
        """Whether ``point`` lies in the dual set for this radius."""
        return point.theta.size == self.size and point.norm <= self.radius + tol

    def check_point(self, point: DualPoint) -> None:
        """Raises :class:`InvalidInputError` if ``point`` has the wrong length."""
        if point.theta.size != self.size:
            raise InvalidInputError(f"theta has {point.theta.size} entries, expected {self.size}")


def xi(space: DualSpace, point: DualPoint) -> FloatArray:
    """Returns ``xi_theta = M theta``."""
    space.check_point(point)
    return space.columns @ point.theta


def extract_policy(xi_theta: FloatArray, num_actions: int) -> StationaryPolicy:
    """Turns ``xi`` into a policy by normalizing its positive part per state.

    States whose entries are all nonpositive get the uniform distribution.

    Args:
        xi_theta (FloatArray): Flattened length-``X*A`` vector.
        num_actions (int): ``A``.

    Returns:
        StationaryPolicy: ``pi(a|x) = [xi(x,a)]_+ / sum_a' [xi(x,a')]_+``.
    """
    positive = np.clip(np.asarray(xi_theta, dtype=np.float64), 0.0, None).reshape(-1, num_actions)
    totals = positive.sum(axis=1, keepdims=True)
    uniform = np.full_like(positive, 1.0 / num_actions)
    probs = np.divide(positive, totals, out=uniform, where=totals > 0)
    return StationaryPolicy(probs)


def constraint_violation(xi_theta: FloatArray) -> float:
    """Returns ``U = sum |min(xi, 0)|``, the total negative mass of ``xi``."""
    return float(-np.minimum(np.asarray(xi_theta, dtype=np.float64), 0.0).sum())


def surrogate_loss(space: DualSpace, point: DualPoint, cost: FloatArray, penalty: float) -> float:
    """Returns ``L(theta) = c^T xi_theta + H U(theta)``.

    Raises:
        InvalidInputError: If the penalty is not positive.
    """
    if not penalty > 0:
        raise InvalidInputError(f"Penalty must be positive, got {penalty!r}")
    values = xi(space, point)
    return float(np.asarray(cost) @ values + penalty * constraint_violation(values))


def exact_surrogate_subgradient(
    space: DualSpace,
    point: DualPoint,
    cost: FloatArray,
    penalty: float,
) -> FloatArray:
    """Returns ``M^T c - H sum_{xi(x,a) < 0} M(x,a)``, a subgradient of ``L``.

    Pairs with ``xi`` exactly zero contribute no penalty term.
    """
    if not penalty > 0:
        raise InvalidInputError(f"Penalty must be positive, got {penalty!r}")
    values = xi(space, point)
    active = values < 0
    return space.columns.T @ np.asarray(cost) - penalty * space.columns[active].sum(axis=0)


def stochastic_subgradient(
    space: DualSpace,
    point: DualPoint,
    pair: int | tuple[int, int],
    cost: FloatArray,
    penalty: float,
) -> FloatArray:
    """Returns the one-sample subgradient estimate at a pair drawn from the uniform mixture.

    ``g = M^T c - H m M(x,a) / sum_i mu_i(x,a)`` when ``xi_theta(x,a) < 0``,
    and ``M^T c`` otherwise. Its expectation under ``(1/m) sum_i mu_i`` is
    :func:`exact_surrogate_subgradient`.

    Args:
        space (DualSpace): The dual space.
        point (DualPoint): ``theta``.
        pair (int | tuple[int, int]): Flattened index or ``(x, a)``.
        cost (FloatArray): Flattened cost vector.
        penalty (float): ``H``.

    Returns:
        FloatArray: The estimate ``g``.

    Raises:
        InvalidInputError: If the mixture has no mass at the pair.
    """
    index = pair[0] * space.num_actions + pair[1] if isinstance(pair, tuple) else int(pair)
    row = space.columns[index]
    mass = float(row.sum())
    if mass <= 0:
        raise InvalidInputError(f"Pair {pair!r} has zero mass under every base occupancy measure")
    base = space.columns.T @ np.asarray(cost)
    if float(row @ point.theta) < 0:
        return base - penalty * space.size * row / mass
    return base


def project_theta(v: Sequence[float] | FloatArray, radius: float) -> DualPoint:
    """Euclidean projection onto ``{sum(theta) = 1, ||theta||_2 <= S}``.

    The point is first projected onto the hyperplane. If it falls outside the
    ball it is pulled radially towards ``c = (1/m) 1`` onto the circle of
    radius ``sqrt(S^2 - 1/m)`` around ``c``.

    Args:
        v (Sequence[float] | FloatArray): Any finite vector.
        radius (float): ``S``, at least ``1/sqrt(m)``.

    Returns:
        DualPoint: The projection.

    Raises:
        InvalidInputError: If ``radius < 1/sqrt(m)`` or ``v`` is not finite.
    """
    values = np.asarray(v, dtype=np.float64).ravel()
    if values.size < 1 or not np.all(np.isfinite(values)):
        raise InvalidInputError(f"Cannot project {v!r}")
    if radius < min_radius(values.size) - 1e-12:
        raise InvalidInputError(f"Radius {radius!r} is below 1/sqrt(m); the dual set is empty")
    return DualPoint(project_theta_array(values, radius))


def project_theta_array(values: FloatArray, radius: float) -> FloatArray:
    """Array-in, array-out form of :func:`project_theta` without validation."""
    size = values.size
    plane = values - (values.sum() - 1.0) / size
    if plane @ plane <= radius * radius:
        return plane
    center = 1.0 / size
    offset = plane - center
    circle = math.sqrt(max(radius * radius - center, 0.0))
    length = math.sqrt(float(offset @ offset))
    return center + circle * offset / length


def overlap_lambda(space: DualSpace) -> float:
    """Returns the largest ``lambda`` with ``lambda/(1+lambda) <= mu_i/mu_j`` everywhere.

    The ratio ``r`` is the minimum of ``mu_i(x,a) / mu_j(x,a)`` over ordered
    pairs ``i != j`` and entries with ``mu_j > 1e-12``; entries below that
    threshold count as zero. The result is ``r / (1 - r)``, or ``math.inf``
    when all columns coincide.

    Raises:
        InvalidInputError: If the space has fewer than two columns.
    """
    if space.size < 2:
        raise InvalidInputError("Overlap needs at least two base policies")
    columns = np.where(space.columns > OVERLAP_ZERO, space.columns, 0.0)
    ratio = math.inf
    for j in range(space.size):
        support = columns[:, j] > 0
        if not support.any():
            continue
        for i in range(space.size):
            if i != j:
                ratio = min(ratio, float((columns[support, i] / columns[support, j]).min()))
    if ratio >= 1.0 - OVERLAP_ZERO:
        return math.inf
    return ratio / (1.0 - ratio)


def overlap_theta(space: DualSpace, overlap: float | None = None) -> DualPoint:
    """Returns ``(1 + lambda) e_1 - lambda e_m`` for the measured overlap.

    Raises:
        InvalidInputError: If the overlap is unbounded.
    """
    lam = overlap_lambda(space) if overlap is None else overlap
    if math.isinf(lam):
        raise InvalidInputError("Overlap is unbounded; every base occupancy measure is identical")
    theta = np.zeros(space.size)
    theta[0] += 1.0 + lam
    theta[-1] -= lam
    return DualPoint(theta)


def dual_objective(
    mdp: TabularMdp,
    space: DualSpace,
    point: DualPoint,
    criterion: str = "discounted",
) -> float:
    """Returns ``J(pi_theta)``, the exact cost of the policy extracted from ``xi_theta``."""
    return evaluate_policy(mdp, extract_policy(xi(space, point), space.num_actions), criterion)


def occupancy_spread(mdp: TabularMdp, basis: PolicyBasis, weight: MixtureWeight) -> tuple[float, float]:
    """Compares how far a mixture's state occupancy can move from its bases.

    Returns:
        tuple[float, float]: ``max_i ||nu_i - nu_w||_1`` and the bound
        ``eps (1 + gamma) / (1 - gamma)`` with ``eps = max_{i,j} ||nu_i - nu_j||_1``.
    """
    mixed = exact_occupancy(mdp, mix_policies(basis, weight)).state
    gap = max(float(np.abs(exact_occupancy(mdp, p).state - mixed).sum()) for p in basis.policies)
    return gap, occupancy_spread_bound(mdp, basis)


def occupancy_spread_bound(mdp: TabularMdp, basis: PolicyBasis) -> float:
    """Returns ``eps (1 + gamma) / (1 - gamma)`` for the pairwise state-occupancy spread ``eps``."""
    states = [exact_occupancy(mdp, p).state for p in basis.policies]
    eps = max(
        (float(np.abs(a - b).sum()) for idx, a in enumerate(states) for b in states[idx + 1 :]),
        default=0.0,
    )
    gamma = mdp.discount
    return eps * (1.0 + gamma) / (1.0 - gamma)


@dataclass(frozen=True)
class ImprovementCheck:
    """Cost of the overlap point against a reference policy.

    Attributes:
        overlap (float): Measured ``lambda``.
        theta (tuple[float, ...]): ``(1 + lambda) e_1 - lambda e_m``.
        violation (float): ``U(theta)``.
        value (float): ``J(pi_theta)``.
        first_value (float): ``J(pi_1)``.
        reference_value (float): ``J`` of the reference policy.
        slack (float): ``||mu_1 - mu_ref||_1 ||c||_inf``.
    """

    overlap: float
    theta: tuple[float, ...]
    violation: float
    value: float
    first_value: float
    reference_value: float
    slack: float

    def holds(self, tol: float = 1e-6) -> bool:
        """Whether ``J(pi_theta) <= J(pi_ref) + slack + tol``."""
        return self.value <= self.reference_value + self.slack + tol


def improvement_bound(
    mdp: TabularMdp,
    space: DualSpace,
    reference_policy: StationaryPolicy,
) -> ImprovementCheck:
    """Evaluates the overlap point and the slack against ``reference_policy``.

    Args:
        mdp (TabularMdp): The MDP the columns of ``space`` were computed on.
        space (DualSpace): Columns ordered so that ``pi_m`` is the one to move away from.
        reference_policy (StationaryPolicy): Typically the best mixture found by search.

    Returns:
        ImprovementCheck: The measured quantities.
    """
    lam = overlap_lambda(space)
    point = overlap_theta(space, lam)
    reference = exact_occupancy(mdp, reference_policy)
    first = space.columns[:, 0]
    cost = mdp.state_action_cost
    return ImprovementCheck(
        overlap=lam,
        theta=tuple(point.theta.tolist()),
        violation=constraint_violation(xi(space, point)),
        value=dual_objective(mdp, space, point),
        first_value=float(first @ cost),
        reference_value=float(reference.state_action @ cost),
        slack=float(np.abs(first - reference.state_action).sum() * np.abs(cost).max()),
    )
