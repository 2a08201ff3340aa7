"""Tabular MDPs, stationary policies and occupancy measures.

Transitions are stored either as a dense ``X x A x X`` array or as a
``scipy.sparse`` CSR matrix of shape ``(X*A) x X`` whose row ``x*A + a`` is
``P(. | x, a)``. Every operation in this module accepts both.

State-action vectors are flattened row-major, so entry ``x*A + a`` holds the
value for ``(x, a)``.
"""

from __future__ import annotations

import logging
import warnings

from dataclasses import dataclass
from typing import Any, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from numpy.typing import NDArray

from .exceptions import AmbiguousChainError, InvalidInputError, NumericalError


logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Transition = Union[FloatArray, scipy.sparse.csr_matrix]

DIST_TOL = 1e-12
OCCUPANCY_TOL = 1e-9
STATIONARY_RESIDUAL_TOL = 1e-8


def _check_distribution(values: FloatArray, name: str, tol: float = DIST_TOL) -> None:
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    if values.size and values.min() < 0:
        raise InvalidInputError(f"{name} has a negative entry {values.min()!r}")
    if abs(values.sum() - 1.0) > tol:
        raise InvalidInputError(f"{name} sums to {values.sum()!r}, expected 1")


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """A finite discounted MDP.

    Attributes:
        num_states (int): Number of states ``X``.
        num_actions (int): Number of actions ``A``.
        cost (FloatArray): ``X x A`` cost table.
        transition (Transition): Dense ``X x A x X`` array or CSR ``(X*A) x X`` matrix.
        initial_dist (FloatArray): Initial state distribution ``alpha``.
        discount (float): Discount factor in ``(0, 1)``.
    """

    num_states: int
    num_actions: int
    cost: FloatArray
    transition: Transition
    initial_dist: FloatArray
    discount: float

    def __post_init__(self) -> None:
        """Validates shapes and distributions.

        Raises:
            InvalidInputError: If any invariant is violated.
        """
        X, A = self.num_states, self.num_actions  # noqa: N806
        if X < 1 or A < 1:
            raise InvalidInputError(f"MDP needs at least one state and action, got X={X}, A={A}")
        if not 0.0 < self.discount < 1.0:
            raise InvalidInputError(f"Discount must lie in (0, 1), got {self.discount!r}")

        cost = np.asarray(self.cost, dtype=np.float64)
        if cost.shape != (X, A):
            raise InvalidInputError(f"Cost has shape {cost.shape}, expected {(X, A)}")
        if not np.all(np.isfinite(cost)):
            raise InvalidInputError("Cost contains non-finite entries")
        object.__setattr__(self, "cost", cost)

        alpha = np.asarray(self.initial_dist, dtype=np.float64)
        if alpha.shape != (X,):
            raise InvalidInputError(f"Initial distribution has shape {alpha.shape}, expected {(X,)}")
        _check_distribution(alpha, "Initial distribution")
        object.__setattr__(self, "initial_dist", alpha)

        if scipy.sparse.issparse(self.transition):
            rows = scipy.sparse.csr_matrix(self.transition, dtype=np.float64)
            rows.eliminate_zeros()
            if rows.shape != (X * A, X):
                raise InvalidInputError(f"Sparse transition has shape {rows.shape}, expected {(X * A, X)}")
            if rows.nnz and rows.data.min() < 0:
                raise InvalidInputError("Transition has a negative probability")
            sums = np.asarray(rows.sum(axis=1)).ravel()
            object.__setattr__(self, "transition", rows)
        else:
            dense = np.asarray(self.transition, dtype=np.float64)
            if dense.shape != (X, A, X):
                raise InvalidInputError(f"Transition has shape {dense.shape}, expected {(X, A, X)}")
            if dense.min() < 0:
                raise InvalidInputError("Transition has a negative probability")
            sums = dense.sum(axis=2).ravel()
            object.__setattr__(self, "transition", dense)

        bad = np.flatnonzero(np.abs(sums - 1.0) > DIST_TOL)
        if bad.size:
            x, a = divmod(int(bad[0]), A)
            raise InvalidInputError(f"Transition row ({x}, {a}) sums to {sums[bad[0]]!r}, expected 1")

    @property
    def is_sparse(self) -> bool:
        """Whether transitions are stored as a sparse matrix."""
        return scipy.sparse.issparse(self.transition)

    @property
    def transition_rows(self) -> Transition:
        """Transitions as a ``(X*A) x X`` matrix, dense or sparse."""
        if self.is_sparse:
            return self.transition
        return self.transition.reshape(self.num_states * self.num_actions, self.num_states)

    @property
    def state_action_cost(self) -> FloatArray:
        """The cost table flattened row-major."""
        return self.cost.ravel()

    def next_state_distribution(self, state: int, action: int) -> FloatArray:
        """Returns ``P(. | state, action)`` as a dense vector."""
        row = self.transition_rows[state * self.num_actions + action]
        if scipy.sparse.issparse(row):
            return np.asarray(row.toarray()).ravel()
        return np.array(row, dtype=np.float64)

    def with_discount(self, discount: float) -> TabularMdp:
        """Returns a copy with a different discount factor."""
        return TabularMdp(
            self.num_states,
            self.num_actions,
            self.cost,
            self.transition,
            self.initial_dist,
            discount,
        )


@dataclass(frozen=True, eq=False)
class StationaryPolicy:
    """A row-stochastic ``X x A`` table of action probabilities.

    Attributes:
        probs (FloatArray): ``probs[x, a]`` is the probability of action ``a`` in state ``x``.
    """

    probs: FloatArray

    def __post_init__(self) -> None:
        """Validates that every row is a probability distribution.

        Raises:
            InvalidInputError: If the table is not two-dimensional or a row is invalid.
        """
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[0] < 1 or probs.shape[1] < 1:
            raise InvalidInputError(f"Policy table must be a non-empty X x A array, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)):
            raise InvalidInputError("Policy table contains non-finite entries")
        if probs.min() < 0:
            state = int(np.argwhere(probs < 0)[0, 0])
            raise InvalidInputError(f"Policy has a negative probability at state {state}")
        sums = probs.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > DIST_TOL)
        if bad.size:
            raise InvalidInputError(f"Policy row {int(bad[0])} sums to {sums[bad[0]]!r}, expected 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def num_states(self) -> int:
        """Number of states."""
        return int(self.probs.shape[0])

    @property
    def num_actions(self) -> int:
        """Number of actions."""
        return int(self.probs.shape[1])

    @classmethod
    def uniform(cls, num_states: int, num_actions: int) -> StationaryPolicy:
        """Returns the policy that picks every action with equal probability."""
        return cls(np.full((num_states, num_actions), 1.0 / num_actions))

    @classmethod
    def deterministic(cls, actions: Any, num_actions: int) -> StationaryPolicy:
        """Returns the policy that takes ``actions[x]`` in state ``x``."""
        chosen = np.asarray(actions, dtype=np.int64)
        probs = np.zeros((chosen.size, num_actions))
        probs[np.arange(chosen.size), chosen] = 1.0
        return cls(probs)

    def check_dimensions(self, mdp: TabularMdp) -> None:
        """Raises :class:`InvalidInputError` unless the policy fits ``mdp``."""
        if self.probs.shape != (mdp.num_states, mdp.num_actions):
            raise InvalidInputError(
                f"Policy has shape {self.probs.shape}, MDP expects {(mdp.num_states, mdp.num_actions)}"
            )


@dataclass(frozen=True, eq=False)
class OccupancyMeasure:
    """A state-action occupancy measure and its state marginal.

    Attributes:
        state_action (FloatArray): Flattened ``mu``, length ``X*A``.
        state (FloatArray): ``nu``, length ``X``.
        num_actions (int): ``A``, needed to unflatten ``state_action``.
    """

    state_action: FloatArray
    state: FloatArray
    num_actions: int

    @classmethod
    def from_state_action(cls, state_action: Any, num_actions: int) -> OccupancyMeasure:
        """Builds the measure from ``mu`` alone, deriving ``nu`` by summing actions."""
        mu = np.asarray(state_action, dtype=np.float64).ravel()
        if mu.size % num_actions:
            raise InvalidInputError(f"Length {mu.size} is not a multiple of {num_actions} actions")
        return cls(mu, mu.reshape(-1, num_actions).sum(axis=1), num_actions)

    @property
    def num_states(self) -> int:
        """Number of states."""
        return int(self.state.size)

    def as_table(self) -> FloatArray:
        """Returns ``mu`` as an ``X x A`` table."""
        return self.state_action.reshape(self.num_states, self.num_actions)

    def validate(self, tol: float = OCCUPANCY_TOL) -> None:
        """Checks normalization, nonnegativity and the marginal relation.

        Raises:
            InvalidInputError: If any check fails.
        """
        if abs(self.state_action.sum() - 1.0) > tol:
            raise InvalidInputError(f"Occupancy sums to {self.state_action.sum()!r}")
        if self.state_action.min() < -DIST_TOL:
            raise InvalidInputError(f"Occupancy has a negative entry {self.state_action.min()!r}")
        if np.max(np.abs(self.as_table().sum(axis=1) - self.state)) > tol:
            raise InvalidInputError("State marginal does not match the state-action measure")


def induced_chain(mdp: TabularMdp, policy: StationaryPolicy) -> tuple[Transition, FloatArray]:
    """Returns the Markov chain ``P_pi`` and per-state cost ``c_pi`` induced by ``policy``.

    ``P_pi`` is sparse when the MDP transitions are sparse.

    Args:
        mdp (TabularMdp): The MDP.
        policy (StationaryPolicy): The policy.

    Returns:
        tuple[Transition, FloatArray]: ``(P_pi, c_pi)``.

    Raises:
        InvalidInputError: On a dimension mismatch.
    """
    policy.check_dimensions(mdp)
    X, A = mdp.num_states, mdp.num_actions  # noqa: N806
    cost_pi = np.einsum("xa,xa->x", policy.probs, mdp.cost)
    if mdp.is_sparse:
        weights = scipy.sparse.csr_matrix(
            (policy.probs.ravel(), np.arange(X * A), np.arange(0, X * A + 1, A)),
            shape=(X, X * A),
        )
        return scipy.sparse.csr_matrix(weights @ mdp.transition), cost_pi
    return np.einsum("xa,xay->xy", policy.probs, mdp.transition), cost_pi


def _solve(matrix: Transition, rhs: FloatArray) -> FloatArray:
    try:
        if scipy.sparse.issparse(matrix):
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.sparse.linalg.MatrixRankWarning)
                solution = scipy.sparse.linalg.spsolve(scipy.sparse.csc_matrix(matrix), rhs)
        else:
            solution = scipy.linalg.solve(matrix, rhs)
    except (np.linalg.LinAlgError, scipy.sparse.linalg.MatrixRankWarning) as exc:
        raise NumericalError(f"Linear solve failed: {exc}") from exc
    solution = np.asarray(solution, dtype=np.float64).ravel()
    if not np.all(np.isfinite(solution)):
        raise NumericalError("Linear solve returned non-finite values")
    return solution


def _occupancy_from_state(nu: FloatArray, policy: StationaryPolicy) -> OccupancyMeasure:
    mu = (nu[:, None] * policy.probs).ravel()
    return OccupancyMeasure(mu, nu, policy.num_actions)


def exact_occupancy(mdp: TabularMdp, policy: StationaryPolicy) -> OccupancyMeasure:
    """Solves ``nu^T (I - gamma P_pi) = (1 - gamma) alpha^T`` and returns ``(mu, nu)``.

    Args:
        mdp (TabularMdp): The MDP.
        policy (StationaryPolicy): The policy.

    Returns:
        OccupancyMeasure: The discounted occupancy measure.

    Raises:
        InvalidInputError: On a dimension mismatch.
        NumericalError: If the linear solve fails.
    """
    chain, _ = induced_chain(mdp, policy)
    gamma = mdp.discount
    if scipy.sparse.issparse(chain):
        system = scipy.sparse.identity(mdp.num_states, format="csr") - gamma * chain.T
    else:
        system = np.eye(mdp.num_states) - gamma * chain.T
    nu = _solve(system, (1.0 - gamma) * mdp.initial_dist)
    return _occupancy_from_state(nu, policy)


def policy_value(mdp: TabularMdp, policy: StationaryPolicy) -> float:
    """Returns ``J(pi) = mu_pi^T c``, the normalized discounted cost."""
    return float(exact_occupancy(mdp, policy).state_action @ mdp.state_action_cost)


def evaluate_policy_iteratively(
    mdp: TabularMdp,
    policy: StationaryPolicy,
    tol: float = 1e-12,
    max_iterations: int = 1_000_000,
) -> float:
    """Evaluates ``policy`` by fixed-policy value iteration.

    Iterates ``V <- c_pi + gamma P_pi V`` until the sup-norm change drops below
    ``tol * (1 - gamma)`` and returns ``(1 - gamma) alpha^T V``.

    Args:
        mdp (TabularMdp): The MDP.
        policy (StationaryPolicy): The policy.
        tol (float): Target accuracy of the returned value.
        max_iterations (int): Iteration cap.

    Returns:
        float: The normalized discounted cost.

    Raises:
        NumericalError: If the iteration cap is reached.
    """
    chain, cost_pi = induced_chain(mdp, policy)
    gamma = mdp.discount
    values = np.zeros(mdp.num_states)
    for iteration in range(max_iterations):
        updated = cost_pi + gamma * (chain @ values)
        delta = float(np.max(np.abs(updated - values)))
        values = updated
        if delta <= tol * (1.0 - gamma):
            logger.debug("Value iteration converged after %d sweeps", iteration + 1)
            return float((1.0 - gamma) * mdp.initial_dist @ values)
    raise NumericalError(f"Value iteration did not converge in {max_iterations} sweeps")


def stationary_distribution(chain: Transition) -> FloatArray:
    """Returns the stationary distribution ``rho`` of a unichain transition matrix.

    One equation of ``(P^T - I) rho = 0`` is replaced by the normalization
    ``sum(rho) = 1`` and the system is solved directly.

    Args:
        chain (Transition): Row-stochastic ``X x X`` matrix, dense or sparse.

    Returns:
        FloatArray: ``rho`` with ``rho^T P = rho^T`` and ``sum(rho) = 1``.

    Raises:
        InvalidInputError: If the matrix is not square.
        AmbiguousChainError: If the chain has more than one recurrent class.
    """
    size = chain.shape[0]
    if chain.shape != (size, size) or size < 1:
        raise InvalidInputError(f"Transition matrix must be square, got shape {chain.shape}")
    if size == 1:
        return np.ones(1)
    rhs = np.zeros(size)
    rhs[-1] = 1.0

    if scipy.sparse.issparse(chain):
        balance = scipy.sparse.csr_matrix(chain.T - scipy.sparse.identity(size, format="csr"))
        system = scipy.sparse.vstack([balance[:-1], scipy.sparse.csr_matrix(np.ones((1, size)))], format="csr")
    else:
        dense = np.asarray(chain, dtype=np.float64)
        balance = dense.T - np.eye(size)
        if np.linalg.matrix_rank(balance) < size - 1:
            raise AmbiguousChainError("Chain has more than one recurrent class")
        system = balance.copy()
        system[-1, :] = 1.0

    try:
        rho = _solve(system, rhs)
    except NumericalError as exc:
        raise AmbiguousChainError(f"Stationary distribution is not unique: {exc}") from exc

    residual = float(np.max(np.abs(chain.T @ rho - rho)))
    if residual > STATIONARY_RESIDUAL_TOL or rho.min() < -STATIONARY_RESIDUAL_TOL:
        raise AmbiguousChainError(f"Stationary solve failed its residual check ({residual:.3g})")
    rho = np.clip(rho, 0.0, None)
    return rho / rho.sum()


def stationary_occupancy(mdp: TabularMdp, policy: StationaryPolicy) -> OccupancyMeasure:
    """Returns the long-run state-action frequencies ``rho(x) pi(a|x)``.

    This is the average-cost counterpart of :func:`exact_occupancy`.
    """
    chain, _ = induced_chain(mdp, policy)
    return _occupancy_from_state(stationary_distribution(chain), policy)


def average_cost_exact(mdp: TabularMdp, policy: StationaryPolicy) -> float:
    """Returns the exact long-run average cost ``rho^T c_pi``."""
    chain, cost_pi = induced_chain(mdp, policy)
    return float(stationary_distribution(chain) @ cost_pi)


def random_policy(num_states: int, num_actions: int, rng: np.random.Generator) -> StationaryPolicy:
    """Returns a policy whose rows are drawn from a flat Dirichlet distribution."""
    probs = rng.dirichlet(np.ones(num_actions), size=num_states)
    return StationaryPolicy(probs / probs.sum(axis=1, keepdims=True))


def random_mdp(
    num_states: int,
    num_actions: int,
    gamma: float,
    rng: np.random.Generator,
    branching: int | None = None,
) -> TabularMdp:
    """Generates a random MDP.

    Every ``(x, a)`` pair moves to ``branching`` distinct successor states with
    Dirichlet probabilities (all states when ``branching`` is ``None``). Costs
    are uniform on ``[0, 1]`` and the initial distribution is flat Dirichlet.

    Args:
        num_states (int): ``X``.
        num_actions (int): ``A``.
        gamma (float): Discount factor.
        rng (np.random.Generator): Source of randomness.
        branching (int | None): Successors per state-action pair.

    Returns:
        TabularMdp: The generated MDP.
    """
    width = num_states if branching is None else max(1, min(branching, num_states))
    transition = np.zeros((num_states, num_actions, num_states))
    for x in range(num_states):
        for a in range(num_actions):
            successors = rng.choice(num_states, size=width, replace=False)
            transition[x, a, successors] = rng.dirichlet(np.ones(width))
    transition /= transition.sum(axis=2, keepdims=True)
    alpha = rng.dirichlet(np.ones(num_states))
    return TabularMdp(
        num_states=num_states,
        num_actions=num_actions,
        cost=rng.uniform(0.0, 1.0, size=(num_states, num_actions)),
        transition=transition,
        initial_dist=alpha / alpha.sum(),
        discount=gamma,
    )
