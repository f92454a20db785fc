import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qimprove import (
    ControlProgram,
    Objective,
    basis_projector,
    complement,
    projector_from_states,
    terminal_cost,
    total_cost,
)
from qimprove.errors import NotOrthonormal, NotProjector, ValidationError

from conftest import random_projector, random_state


def test_projector_from_states():
    np.testing.assert_array_equal(projector_from_states([[0, 1]]), [[0, 0], [0, 1]])
    np.testing.assert_allclose(projector_from_states(list(np.eye(3))), np.eye(3))
    np.testing.assert_array_equal(projector_from_states([], dim=2), np.zeros((2, 2)))
    with pytest.raises(NotOrthonormal):
        projector_from_states([[1, 0], [1, 1] / np.sqrt(2)])


def test_complement():
    np.testing.assert_array_equal(complement(np.zeros((2, 2))), np.eye(2))
    np.testing.assert_array_equal(complement(np.eye(2)), np.zeros((2, 2)))
    np.testing.assert_array_equal(complement(basis_projector([1], 2)), basis_projector([0], 2))
    with pytest.raises(NotProjector):
        complement(np.diag([0.5, 1.0]))


def test_terminal_cost_examples():
    L = basis_projector([1], 2)
    assert terminal_cost(L, [0, 1]) == -1.0
    assert terminal_cost(L, [1, 0]) == 0.0
    assert terminal_cost(L, np.array([1, 1]) / np.sqrt(2)) == pytest.approx(-0.5)


def test_total_cost_examples():
    c = ControlProgram.constant(2.0, 4, 1.0)
    assert total_cost(-0.3, 0.0, c) == -0.3
    assert total_cost(-1.0, 1.0, ControlProgram.constant(1.0, 3, 0.0)) == -1.0
    # z(T) = 1 * 2 = 2
    assert total_cost(-0.9, 0.1, c) == pytest.approx(-0.7)
    with pytest.raises(ValidationError):
        total_cost(0.0, -1.0, c)


def test_objective_validation():
    with pytest.raises(ValidationError):
        Objective(np.eye(2), beta=-0.1)
    with pytest.raises(ValidationError):
        Objective(np.eye(2), energy_cap=0.0)
    with pytest.raises(ValidationError):
        Objective(-np.eye(2)).require_psd("krotov")
    with pytest.warns(UserWarning):
        Objective(-np.eye(2)).require_psd("gradient")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.floats(0, 2 * np.pi))
def test_projector_cost_properties(seed, n, phase):
    rng = np.random.default_rng(seed)
    L = random_projector(rng, n, rank=int(rng.integers(0, n + 1)))
    psi = random_state(rng, n)
    cost = terminal_cost(L, psi)
    assert -1.0 - 1e-12 <= cost <= 1e-12
    assert abs(cost + terminal_cost(complement(L), psi) + 1.0) <= 1e-12
    assert abs(terminal_cost(L, np.exp(1j * phase) * psi) - cost) <= 1e-12
