"""Exception hierarchy for the policy-mixtures library.

Every error raised on purpose by the library derives from
:class:`PolicyMixturesError` and from the builtin exception a caller would
naturally catch (``ValueError`` for bad input, ``RuntimeError`` for failed
evaluations, ``ArithmeticError`` for solver failures).
"""

from __future__ import annotations

from typing import Any


class PolicyMixturesError(Exception):
    """Base class for all library errors."""


class InvalidInputError(PolicyMixturesError, ValueError):
    """Raised when an argument violates a documented precondition."""


class InfeasibleMixtureError(InvalidInputError):
    """Raised when mixing weights produce an invalid action distribution.

    Args:
        state (int): Index of the first state whose row is not a distribution.
        row (Any): The offending row, included in the message.
    """

    def __init__(self, state: int, row: Any):
        """Initialize the error with the offending state and row.

        Args:
            state (int): Index of the offending state.
            row (Any): The offending action distribution.
        """
        self.state = state
        self.row = row
        super().__init__(f"Mixture is not a valid policy at state {state}: {row!r}")


class FiniteDifferenceError(PolicyMixturesError, RuntimeError):
    """Raised when the objective cannot be evaluated at a perturbed point.

    Args:
        coordinate (int): The coordinate whose perturbation failed.
        reason (str): Description of the underlying failure.
    """

    def __init__(self, coordinate: int, reason: str):
        """Initialize the error.

        Args:
            coordinate (int): The perturbed coordinate.
            reason (str): The underlying failure.
        """
        self.coordinate = coordinate
        super().__init__(f"Evaluation failed when perturbing coordinate {coordinate}: {reason}")


class AmbiguousChainError(PolicyMixturesError, ValueError):
    """Raised when a chain has more than one stationary distribution."""


class NumericalError(PolicyMixturesError, ArithmeticError):
    """Raised when a linear solve fails or returns non-finite values."""


class ConfigError(PolicyMixturesError, ValueError):
    """Raised for unreadable, incomplete or inconsistent experiment configs.

    Args:
        message (str): What is wrong.
        path (str | None): The config file, if any.
        line (int | None): One-based line the problem is anchored to.
        key (str | None): The offending key, if any.
    """

    def __init__(
        self,
        message: str,
        path: str | None = None,
        line: int | None = None,
        key: str | None = None,
    ):
        """Initialize the error and render the ``path:line:`` prefix.

        Args:
            message (str): What is wrong.
            path (str | None): The config file.
            line (int | None): One-based line number.
            key (str | None): The offending key.
        """
        self.path = path
        self.line = line
        self.key = key
        prefix = ""
        if path is not None:
            prefix = f"{path}:{line if line is not None else 1}: "
        super().__init__(f"{prefix}{message}")
