"""Projected stochastic subgradient descent over the dual space.

Each round samples a base policy uniformly, samples ``(x, a)`` from its
occupancy measure, forms the importance-weighted subgradient of the surrogate
``L(theta) = c^T xi_theta + H U(theta)`` and takes a projected step. The
returned point is the average of the iterates.
"""

from __future__ import annotations

import logging
import math
import time

from collections.abc import Callable
from dataclasses import dataclass, field, replace

import numpy as np

from .dual_data_type import (
    DualPoint,
    DualSpace,
    constraint_violation,
    min_radius,
    project_theta_array,
)
from .exceptions import InvalidInputError
from .mdp_data_type import FloatArray
from .primal_utils import DescentRecord, StepSchedule, projected_descent, step_schedule
from .rollout_utils import OccupancySampler, child_rng


logger = logging.getLogger(__name__)

SAMPLE_BLOCK = 100_000
MIN_U_AWARE_RATE = 1e-4
MAX_GRID_POINTS = 1_000_000

DualEvaluator = Callable[[DualPoint], float]


@dataclass(frozen=True)
class SgdRun:
    """Settings of one stochastic subgradient run.

    ``eta`` and ``penalty`` may be left unset. With neither set, a reference
    rate ``S / (sqrt(m) sqrt(T))`` fixes ``H = 1 / eta_ref`` and the step is
    then ``S / (G' sqrt(T))`` with ``G' = sqrt(m) + H m``. With only ``eta``
    set, ``H = 1 / eta``; with only ``H`` set, the step follows the same
    ``S / (G' sqrt(T))`` rule.

    Attributes:
        num_rounds (int): ``T``.
        radius (float): ``S``.
        seed (int): Run seed.
        penalty (float | None): ``H``.
        eta (float | None): Base learning rate.
        schedule (str): ``constant`` or ``inv-sqrt``.
        confidence (float): ``delta`` of the high-probability guarantee, reported only.
        record_every (int | None): Trace spacing, default ``max(1, T // 100)``.
        batch (int): Samples averaged per step.
    """

    num_rounds: int
    radius: float
    seed: int = 0
    penalty: float | None = None
    eta: float | None = None
    schedule: str = "constant"
    confidence: float = 0.05
    record_every: int | None = None
    batch: int = 1

    def __post_init__(self) -> None:
        """Validates the settings.

        Raises:
            InvalidInputError: On a non-positive ``T``, ``H``, ``eta`` or batch.
        """
        if self.num_rounds < 1:
            raise InvalidInputError(f"T must be at least 1, got {self.num_rounds}")
        if self.penalty is not None and not self.penalty > 0:
            raise InvalidInputError(f"H must be positive, got {self.penalty!r}")
        if self.eta is not None and not self.eta > 0:
            raise InvalidInputError(f"eta must be positive, got {self.eta!r}")
        if self.batch < 1:
            raise InvalidInputError(f"batch must be at least 1, got {self.batch}")
        if self.record_every is not None and self.record_every < 1:
            raise InvalidInputError(f"record_every must be at least 1, got {self.record_every}")
        if not 0 < self.confidence < 1:
            raise InvalidInputError(f"confidence must lie in (0, 1), got {self.confidence!r}")
        step_schedule(self.schedule, 1.0)

    @property
    def record_interval(self) -> int:
        """Iterations between trace rows."""
        return self.record_every or max(1, self.num_rounds // 100)

    def resolve(self, size: int) -> tuple[float, float]:
        """Returns ``(eta, H)`` for a basis of ``size`` policies."""
        root_t = math.sqrt(self.num_rounds)
        penalty = self.penalty
        if penalty is None:
            penalty = 1.0 / self.eta if self.eta is not None else math.sqrt(size) * root_t / self.radius
        eta = self.eta
        if eta is None:
            eta = self.radius / (gradient_bound(size, penalty) * root_t)
        return eta, penalty


def gradient_bound(size: int, penalty: float) -> float:
    """Returns ``G' = sqrt(m) + H m``."""
    return math.sqrt(size) + penalty * size


def tune_u_aware(run: SgdRun, pilot_violation: float, gamma: float) -> SgdRun:
    """Returns ``run`` with ``eta = sqrt((1 - gamma) U)`` and ``H = 1 / eta``.

    ``U`` is the constraint violation measured on a pilot run; the rate is
    floored at ``1e-4``.
    """
    eta = max(math.sqrt(max(1.0 - gamma, 0.0) * max(pilot_violation, 0.0)), MIN_U_AWARE_RATE)
    return replace(run, eta=eta, penalty=1.0 / eta)


@dataclass(frozen=True)
class SgdRecord:
    """One trace row.

    Attributes:
        t (int): Iteration.
        surrogate_estimate (float): Mean one-sample estimate of ``L`` since the previous row.
        violation (float): Exact ``U(theta_t)``.
        theta (tuple[float, ...]): ``theta_t``.
        true_objective (float | None): ``J(pi_theta_t)`` when requested.
    """

    t: int
    surrogate_estimate: float
    violation: float
    theta: tuple[float, ...]
    true_objective: float | None = None


@dataclass
class SgdResult:
    """Outcome of :func:`sgd_optimize`."""

    theta_hat: DualPoint
    trace: list[SgdRecord]
    eta: float
    penalty: float
    gradient_bound: float
    max_gradient_norm: float
    wall_time: float = 0.0
    extras: dict[str, float] = field(default_factory=dict)


def sgd_optimize(
    space: DualSpace,
    cost: FloatArray,
    run: SgdRun,
    sampler: OccupancySampler | None = None,
    evaluator: DualEvaluator | None = None,
) -> SgdResult:
    """Runs the projected stochastic subgradient method on ``L``.

    Iterates start at the uniform point ``(1/m) 1``. Rows of the trace are
    written every ``run.record_interval`` iterations and at ``T``; when
    ``evaluator`` is given it is called on ``theta_t`` for each row.

    Args:
        space (DualSpace): Occupancy columns and radius.
        cost (FloatArray): Flattened cost vector ``c``.
        run (SgdRun): Settings.
        sampler (OccupancySampler | None): Sampler over the uniform mixture of
            the columns; built from ``space`` when omitted.
        evaluator (DualEvaluator | None): True objective for the trace.

    Returns:
        SgdResult: The averaged iterate, the trace and the step constants.

    Raises:
        InvalidInputError: If ``run.radius`` differs from the space radius
            validity, or the cost has the wrong length.
    """
    started = time.perf_counter()
    size = space.size
    if run.radius < min_radius(size) - 1e-12:
        raise InvalidInputError(f"Radius {run.radius!r} is below 1/sqrt(m); the dual set is empty")
    cost = np.asarray(cost, dtype=np.float64)
    if cost.shape != (space.num_pairs,):
        raise InvalidInputError(f"Cost has shape {cost.shape}, expected {(space.num_pairs,)}")

    eta, penalty = run.resolve(size)
    bound = gradient_bound(size, penalty)
    rates = step_schedule(run.schedule, eta)
    sampler = sampler or OccupancySampler(space.columns)
    rng = child_rng(run.seed, "sgd")
    columns = space.columns
    linear = columns.T @ cost
    mass = sampler.mixture_mass
    weights = np.divide(float(size), mass, out=np.zeros_like(mass), where=mass > 0)
    logger.info(
        "SGD: T=%d m=%d S=%.6g eta=%.6g H=%.6g G'=%.6g batch=%d",
        run.num_rounds, size, run.radius, eta, penalty, bound, run.batch,
    )

    theta = np.full(size, 1.0 / size)
    total = np.zeros(size)
    trace: list[SgdRecord] = []
    window_sum, window_count = 0.0, 0
    max_norm = 0.0
    interval = run.record_interval
    block: np.ndarray = np.empty(0, dtype=np.int64)
    cursor = 0

    for t in range(1, run.num_rounds + 1):
        if cursor >= block.size:
            count = min(SAMPLE_BLOCK, (run.num_rounds - t + 1)) * run.batch
            block = sampler.draw(count, rng)
            cursor = 0
        pairs = block[cursor : cursor + run.batch]
        cursor += run.batch

        rows = columns[pairs]
        values = rows @ theta
        negative = values < 0
        scale = penalty * weights[pairs] * negative
        penalty_grad = (scale[:, None] * rows).sum(axis=0) / run.batch
        grad = linear - penalty_grad
        max_norm = max(max_norm, float(np.sqrt(grad @ grad)))

        window_sum += float(theta @ linear) + float((scale * -values).sum()) / run.batch
        window_count += 1
        total += theta

        if t % interval == 0 or t == run.num_rounds:
            true_value = evaluator(DualPoint(theta)) if evaluator is not None else None
            record = SgdRecord(
                t,
                window_sum / window_count,
                constraint_violation(columns @ theta),
                tuple(theta.tolist()),
                true_value,
            )
            trace.append(record)
            logger.debug("sgd t=%d L_est=%.17g U=%.17g", t, record.surrogate_estimate, record.violation)
            window_sum, window_count = 0.0, 0

        theta = project_theta_array(theta - rates(t) * grad, run.radius)

    theta_hat = project_theta_array(total / run.num_rounds, run.radius)
    elapsed = time.perf_counter() - started
    logger.info("SGD finished in %.3fs, max ||g|| = %.6g", elapsed, max_norm)
    return SgdResult(
        theta_hat=DualPoint(theta_hat),
        trace=trace,
        eta=eta,
        penalty=penalty,
        gradient_bound=bound,
        max_gradient_norm=max_norm,
        wall_time=elapsed,
    )


def theta_grid(size: int, radius: float, resolution: float) -> np.ndarray:
    """Returns a lattice of points of the dual set for ``m <= 3``.

    For ``m = 2`` the points are ``(s, 1 - s)`` spaced ``resolution`` apart in
    ``s``; for ``m = 3`` they form a square grid of spacing ``resolution`` in
    orthonormal coordinates of the hyperplane, clipped to the disk.

    Raises:
        InvalidInputError: If ``m > 3`` or the grid would be too large.
    """
    if not resolution > 0:
        raise InvalidInputError(f"Grid resolution must be positive, got {resolution!r}")
    if radius < min_radius(size) - 1e-12:
        raise InvalidInputError(f"Radius {radius!r} is below 1/sqrt(m); the dual set is empty")
    if size == 1:
        return np.ones((1, 1))
    circle = math.sqrt(max(radius * radius - 1.0 / size, 0.0))
    if size == 2:
        half = circle / math.sqrt(2.0)
        count = int(math.floor(2 * half / resolution)) + 1
        if count > MAX_GRID_POINTS:
            raise InvalidInputError(f"Grid of {count} points exceeds {MAX_GRID_POINTS}")
        s = 0.5 - half + resolution * np.arange(count)
        s = np.append(s, 0.5 + half) if s[-1] < 0.5 + half - 1e-12 else s
        return np.column_stack([s, 1.0 - s])
    if size == 3:
        steps = int(math.floor(circle / resolution))
        if (2 * steps + 1) ** 2 > MAX_GRID_POINTS:
            raise InvalidInputError(f"Grid of {(2 * steps + 1) ** 2} points exceeds {MAX_GRID_POINTS}")
        axis = resolution * np.arange(-steps, steps + 1)
        u, v = np.meshgrid(axis, axis, indexing="ij")
        inside = u * u + v * v <= circle * circle + 1e-15
        first = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
        second = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)
        return 1.0 / 3.0 + np.outer(u[inside], first) + np.outer(v[inside], second)
    raise InvalidInputError(f"Grid search supports at most 3 base policies, got {size}")


def dual_grid_search(
    space: DualSpace,
    objective: DualEvaluator,
    resolution: float,
) -> tuple[DualPoint, float, list[tuple[tuple[float, ...], float]]]:
    """Evaluates ``objective`` on :func:`theta_grid` and returns the minimizer.

    Returns:
        tuple: The best point, its value and every ``(theta, value)`` pair.
    """
    grid = theta_grid(space.size, space.radius, resolution)
    logger.info("Dual grid search over %d points", grid.shape[0])
    evaluated = []
    best_idx, best_value = 0, math.inf
    for idx, theta in enumerate(grid):
        value = float(objective(DualPoint(theta)))
        evaluated.append((tuple(theta.tolist()), value))
        if value < best_value:
            best_idx, best_value = idx, value
    return DualPoint(grid[best_idx]), best_value, evaluated


def dual_descent(
    space: DualSpace,
    objective: DualEvaluator,
    iterations: int,
    schedule: StepSchedule,
    step: float = 1e-2,
    start: DualPoint | None = None,
    workers: int = 1,
) -> tuple[DualPoint, list[DescentRecord]]:
    """Finite-difference projected descent of the true objective over the dual set.

    Args:
        space (DualSpace): Supplies ``m`` and the radius.
        objective (DualEvaluator): ``J(pi_theta)``.
        iterations (int): Descent steps.
        schedule (StepSchedule): Learning rates.
        step (float): Finite-difference step.
        start (DualPoint | None): Initial point, uniform by default.
        workers (int): Threads for gradient evaluations.

    Returns:
        tuple[DualPoint, list[DescentRecord]]: The best point seen and the trace.
    """
    theta0 = (start or DualPoint.uniform(space.size)).theta

    def project(v: FloatArray) -> FloatArray:
        return project_theta_array(np.asarray(v, dtype=np.float64), space.radius)

    def evaluate(theta: FloatArray) -> float:
        return objective(DualPoint(theta))

    best, trace = projected_descent(evaluate, theta0, iterations, schedule, step, project, workers)
    return DualPoint(best), trace
