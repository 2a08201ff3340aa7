"""Finite-difference descent over mixture weights.

This is the primal baseline: the objective is treated as a black box of the
weight vector, its gradient is estimated by central differences and iterates
are kept on the simplex by :func:`project_simplex`.
"""

from __future__ import annotations

import logging
import math

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import FiniteDifferenceError, InvalidInputError
from .mdp_data_type import FloatArray
from .mixture_data_type import Evaluator, MixtureWeight, project_simplex


logger = logging.getLogger(__name__)

EXACT_STEP = 1e-2
SIMULATION_STEP = 0.05

StepSchedule = Callable[[int], float]
Projection = Callable[[FloatArray], FloatArray]


def step_schedule(kind: str, eta: float) -> StepSchedule:
    """Returns a learning-rate schedule ``t -> eta_t`` for ``t = 1, 2, ...``.

    Args:
        kind (str): ``constant`` (``eta_t = eta``) or ``inv-sqrt`` (``eta_t = eta / sqrt(t)``).
        eta (float): Base rate, positive.

    Returns:
        StepSchedule: The schedule.

    Raises:
        InvalidInputError: For an unknown kind or a non-positive rate.
    """
    if not eta > 0:
        raise InvalidInputError(f"Learning rate must be positive, got {eta!r}")
    if kind == "constant":
        return lambda t: eta
    if kind in ("inv-sqrt", "inv_sqrt"):
        return lambda t: eta / math.sqrt(t)
    raise InvalidInputError(f"Unknown step schedule {kind!r}; expected 'constant' or 'inv-sqrt'")


def _simplex_point(v: FloatArray) -> FloatArray:
    return project_simplex(v).w


def central_differences(
    evaluator: Evaluator,
    point: FloatArray,
    step: float,
    project: Projection,
    workers: int = 1,
) -> FloatArray:
    """Central-difference gradient of ``evaluator`` along each coordinate.

    Coordinate ``i`` is ``(f(P(x + step e_i)) - f(P(x - step e_i))) / (2 step)``
    where ``P`` is ``project``. Evaluations may run on a thread pool; the result
    is assembled in coordinate order.

    Raises:
        InvalidInputError: If ``step`` is not positive.
        FiniteDifferenceError: If an evaluation raises or returns a non-finite value.
    """
    if not step > 0:
        raise InvalidInputError(f"Finite-difference step must be positive, got {step!r}")
    x = np.asarray(point, dtype=np.float64)
    jobs = []
    for i in range(x.size):
        offset = np.zeros_like(x)
        offset[i] = step
        jobs.append((i, project(x + offset)))
        jobs.append((i, project(x - offset)))

    def evaluate(job: tuple[int, FloatArray]) -> float:
        coordinate, perturbed = job
        try:
            value = float(evaluator(perturbed))
        except Exception as exc:  # noqa: BLE001
            raise FiniteDifferenceError(coordinate, f"{type(exc).__name__}: {exc}") from exc
        if not math.isfinite(value):
            raise FiniteDifferenceError(coordinate, f"objective is {value!r}")
        return value

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(evaluate, jobs))
    else:
        values = [evaluate(job) for job in jobs]

    pairs = np.asarray(values).reshape(x.size, 2)
    return (pairs[:, 0] - pairs[:, 1]) / (2.0 * step)


def finite_difference_gradient(
    evaluator: Evaluator,
    weight: MixtureWeight | Sequence[float],
    step: float = EXACT_STEP,
    workers: int = 1,
) -> FloatArray:
    """Estimates the gradient of ``w -> f(w)`` on the simplex.

    Each coordinate is perturbed by ``+-step``, the perturbed weights are
    projected back onto the simplex and the objective differences are divided
    by ``2 step``. Use ``EXACT_STEP`` for exact evaluators and
    ``SIMULATION_STEP`` for simulation-based ones.

    Args:
        evaluator (Evaluator): The objective as a function of weights.
        weight (MixtureWeight | Sequence[float]): The point to differentiate at.
        step (float): The perturbation size.
        workers (int): Threads used for the ``2m`` evaluations.

    Returns:
        FloatArray: The length-``m`` gradient estimate.

    Raises:
        FiniteDifferenceError: Naming the coordinate whose evaluation failed.
    """
    w = weight.w if isinstance(weight, MixtureWeight) else np.asarray(weight, dtype=np.float64)
    return central_differences(evaluator, w, step, _simplex_point, workers)


@dataclass(frozen=True)
class DescentRecord:
    """One row of a descent trace."""

    iteration: int
    weights: tuple[float, ...]
    objective: float


def projected_descent(
    evaluator: Evaluator,
    start: FloatArray,
    iterations: int,
    schedule: StepSchedule,
    step: float,
    project: Projection,
    workers: int = 1,
) -> tuple[FloatArray, list[DescentRecord]]:
    """Runs ``x <- P(x - eta_t grad)`` with finite-difference gradients.

    The trace starts with iteration 0 at ``start``; the returned point is the
    best one seen.

    Raises:
        InvalidInputError: If ``iterations`` is not positive.
        FiniteDifferenceError: Propagated from gradient estimation.
    """
    if iterations < 1:
        raise InvalidInputError(f"iterations must be at least 1, got {iterations}")
    x = project(np.asarray(start, dtype=np.float64))
    value = float(evaluator(x))
    trace = [DescentRecord(0, tuple(x.tolist()), value)]
    best_x, best_value = x, value
    for t in range(1, iterations + 1):
        grad = central_differences(evaluator, x, step, project, workers)
        x = project(x - schedule(t) * grad)
        value = float(evaluator(x))
        trace.append(DescentRecord(t, tuple(x.tolist()), value))
        logger.debug("descent t=%d objective=%.17g", t, value)
        if value < best_value:
            best_x, best_value = x, value
    logger.info("Descent finished after %d iterations, best objective %.6g", iterations, best_value)
    return best_x, trace


def primal_descent(
    evaluator: Evaluator,
    start: MixtureWeight | Sequence[float],
    iterations: int,
    schedule: StepSchedule,
    step: float = EXACT_STEP,
    workers: int = 1,
) -> tuple[MixtureWeight, list[DescentRecord]]:
    """Finite-difference projected gradient descent over the simplex.

    Args:
        evaluator (Evaluator): ``f(w)``; seed any randomness inside it so the
            run is reproducible.
        start (MixtureWeight | Sequence[float]): Initial weights, projected first.
        iterations (int): Number of descent steps, at least 1.
        schedule (StepSchedule): Learning rates ``eta_t``.
        step (float): Finite-difference step.
        workers (int): Threads for the gradient evaluations.

    Returns:
        tuple[MixtureWeight, list[DescentRecord]]: The best weights seen and the
        trace ``(iteration, w, objective)``.
    """
    w0 = start.w if isinstance(start, MixtureWeight) else np.asarray(start, dtype=np.float64)
    best, trace = projected_descent(evaluator, w0, iterations, schedule, step, _simplex_point, workers)
    return MixtureWeight(best, simplex=True), trace
