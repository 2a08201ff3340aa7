"""Test Suite for Policy Mixtures.

This module contains test functions for policy bases, mixture weights,
state-wise policy mixing, simplex projection and the primal objective.

Fixtures:
    - chain_mdp: Provides a three-state MDP with two actions.
    - pure_basis: Provides the two deterministic policies of the chain MDP.

Functions:
    - test_mix_policies: Tests the state-wise mixture of two policies.
    - test_mix_vertex_returns_base: Tests that a vertex weight returns the base policy.
    - test_mix_infeasible: Tests rejection of off-simplex weights leaving the policy set.
    - test_mixture_weight_validation: Tests the simplex flag.
    - test_project_simplex: Tests projection against hand-computed points.
    - test_project_simplex_is_closest: Tests that no sampled simplex point is closer.
    - test_primal_objective_endpoints: Tests that the mixture objective matches the base costs at vertices.
    - test_primal_line_sweep: Tests sweeping the two-policy line, including infeasible points.
    - test_policy_basis_validation: Tests rejection of empty and inconsistent bases.
"""

from __future__ import annotations

import numpy as np
import pytest

from policy_mixtures.exceptions import InfeasibleMixtureError, InvalidInputError
from policy_mixtures.mdp_data_type import StationaryPolicy, TabularMdp, policy_value
from policy_mixtures.mixture_data_type import (
    MixtureWeight,
    PolicyBasis,
    check_criterion,
    evaluate_policy,
    make_primal_evaluator,
    mix_policies,
    primal_line_sweep,
    primal_objective,
    project_simplex,
)


@pytest.fixture()
def chain_mdp() -> TabularMdp:
    """Provides a three-state MDP with two actions.

    Action 0 moves one state to the right, action 1 returns to state 0. Costs
    grow with the state index.

    Returns:
        TabularMdp: The MDP, discount 0.9, starting in state 0.
    """
    transition = np.zeros((3, 2, 3))
    for x in range(3):
        transition[x, 0, min(x + 1, 2)] = 1.0
        transition[x, 1, 0] = 1.0
    cost = np.array([[0.0, 0.5], [1.0, 1.5], [4.0, 4.5]])
    return TabularMdp(3, 2, cost, transition, np.array([1.0, 0.0, 0.0]), 0.9)


@pytest.fixture()
def pure_basis() -> PolicyBasis:
    """Provides the two deterministic policies of the chain MDP.

    Returns:
        PolicyBasis: Always-advance and always-reset.
    """
    return PolicyBasis([StationaryPolicy.deterministic([0, 0, 0], 2), StationaryPolicy.deterministic([1, 1, 1], 2)])


def test_mix_policies(pure_basis: PolicyBasis) -> None:
    """Tests the state-wise mixture of two policies.

    Args:
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        Every row of the mixture equals the weight vector.
    """
    mixed = mix_policies(pure_basis, MixtureWeight.on_simplex([0.25, 0.75]))
    np.testing.assert_allclose(mixed.probs, np.tile([0.25, 0.75], (3, 1)))


def test_mix_vertex_returns_base(pure_basis: PolicyBasis) -> None:
    """Tests that a vertex weight returns the base policy.

    Args:
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        The second vertex gives back the second base policy object.
    """
    assert mix_policies(pure_basis, MixtureWeight.vertex(2, 1)) is pure_basis[1]
    with pytest.raises(InvalidInputError, match="Got 3 weights"):
        mix_policies(pure_basis, MixtureWeight.uniform(3))


def test_mix_infeasible(pure_basis: PolicyBasis) -> None:
    """Tests rejection of off-simplex weights leaving the policy set.

    Args:
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        The error names state 0 and keeps the offending row.
    """
    with pytest.raises(InfeasibleMixtureError, match="state 0") as excinfo:
        mix_policies(pure_basis, MixtureWeight.off_simplex([1.5, -0.5]))
    assert excinfo.value.state == 0
    assert excinfo.value.row == [1.5, -0.5]


def test_off_simplex_mixture_of_equal_rows() -> None:
    """Tests that off-simplex weights are fine where the base rows agree.

    Asserts:
        Mixing identical policies with weights (2, -1) returns the same table.
    """
    policy = StationaryPolicy(np.array([[0.3, 0.7], [0.6, 0.4]]))
    mixed = mix_policies(PolicyBasis([policy, policy]), MixtureWeight.off_simplex([2.0, -1.0]))
    np.testing.assert_allclose(mixed.probs, policy.probs)


@pytest.mark.parametrize("weights", [[0.5, 0.6], [-0.1, 1.1], [], [np.nan, 1.0]])
def test_mixture_weight_validation(weights: list[float]) -> None:
    """Tests the simplex flag."""
    with pytest.raises(InvalidInputError):
        MixtureWeight.on_simplex(weights)


@pytest.mark.parametrize(
    ("v", "expected"),
    [
        ([0.2, 0.8], [0.2, 0.8]),
        ([1.0, 1.0], [0.5, 0.5]),
        ([2.0, 0.0], [1.0, 0.0]),
        ([-1.0, 0.5, 0.3], [0.0, 0.6, 0.4]),
        ([5.0], [1.0]),
    ],
)
def test_project_simplex(v: list[float], expected: list[float]) -> None:
    """Tests projection against hand-computed points."""
    projected = project_simplex(v)
    assert projected.simplex
    np.testing.assert_allclose(projected.w, expected, atol=1e-12)


def test_project_simplex_is_closest() -> None:
    """Tests that no sampled simplex point is closer.

    Asserts:
        The projection is at least as close to v as 2000 Dirichlet samples.
    """
    rng = np.random.default_rng(8)
    v = rng.normal(size=4) * 2.0
    projected = project_simplex(v).w
    candidates = rng.dirichlet(np.ones(4), size=2000)
    best = np.min(np.linalg.norm(candidates - v, axis=1))
    assert np.linalg.norm(projected - v) <= best + 1e-12
    with pytest.raises(InvalidInputError):
        project_simplex([np.inf, 0.0])


def test_primal_objective_endpoints(chain_mdp: TabularMdp, pure_basis: PolicyBasis) -> None:
    """Tests that the mixture objective matches the base costs at vertices.

    Args:
        chain_mdp (TabularMdp): The MDP provided by the fixture.
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        The evaluator agrees with policy_value at both vertices and resetting is cheap.
    """
    evaluate = make_primal_evaluator(chain_mdp, pure_basis)
    for index in range(2):
        assert evaluate(np.eye(2)[index]) == pytest.approx(policy_value(chain_mdp, pure_basis[index]))
    assert evaluate(np.array([0.0, 1.0])) == pytest.approx(0.5)
    assert primal_objective(chain_mdp, pure_basis, MixtureWeight.uniform(2)) == pytest.approx(
        evaluate(np.array([0.5, 0.5]))
    )


def test_average_criterion(chain_mdp: TabularMdp, pure_basis: PolicyBasis) -> None:
    """Tests the average-cost criterion on the chain MDP.

    Args:
        chain_mdp (TabularMdp): The MDP provided by the fixture.
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        Always advancing ends up in state 2 forever; unknown criteria are rejected.
    """
    assert evaluate_policy(chain_mdp, pure_basis[0], "average") == pytest.approx(4.0)
    assert evaluate_policy(chain_mdp, pure_basis[1], "average") == pytest.approx(0.5)
    with pytest.raises(InvalidInputError, match="Unknown criterion"):
        check_criterion("total")


def test_primal_line_sweep(chain_mdp: TabularMdp, pure_basis: PolicyBasis) -> None:
    """Tests sweeping the two-policy line, including infeasible points.

    Args:
        chain_mdp (TabularMdp): The MDP provided by the fixture.
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        The ends of the sweep equal the base costs and points outside [0, 1] are nan.
    """
    sweep = primal_line_sweep(chain_mdp, pure_basis, [-0.5, 0.0, 1.0, 1.5])
    assert [w for w, _ in sweep] == [-0.5, 0.0, 1.0, 1.5]
    assert np.isnan(sweep[0][1])
    assert np.isnan(sweep[3][1])
    assert sweep[1][1] == pytest.approx(policy_value(chain_mdp, pure_basis[1]))
    assert sweep[2][1] == pytest.approx(policy_value(chain_mdp, pure_basis[0]))
    with pytest.raises(InvalidInputError, match="two base policies"):
        primal_line_sweep(chain_mdp, PolicyBasis([pure_basis[0]]), [0.5])


def test_policy_basis_validation(pure_basis: PolicyBasis) -> None:
    """Tests rejection of empty and inconsistent bases.

    Args:
        pure_basis (PolicyBasis): The basis provided by the fixture.

    Asserts:
        Empty and mixed-shape bases raise; the stacked array has shape m x X x A.
    """
    with pytest.raises(InvalidInputError, match="at least one policy"):
        PolicyBasis([])
    with pytest.raises(InvalidInputError, match="Base policy 1 has shape"):
        PolicyBasis([pure_basis[0], StationaryPolicy.uniform(2, 2)])
    assert pure_basis.stacked().shape == (2, 3, 2)
    assert (len(pure_basis), pure_basis.num_states, pure_basis.num_actions) == (2, 3, 2)
