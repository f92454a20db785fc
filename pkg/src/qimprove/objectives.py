"""Terminal quadratic-form objectives and total cost.

The terminal cost is ``I = -Re <psi(T), L psi(T)>`` and the total cost adds the
energy penalty ``beta * z(T)``.  Probabilities of landing in a target set are
encoded as orthogonal projectors ``L``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import ControlProgram, energy_integral, propagate_forward
from .errors import NotOrthonormal, NotProjector, ValidationError
from .operators import validate_hermitian

TOL_ORTHO = 1e-10
TOL_PROJ = 1e-10
TOL_PSD = 1e-10


@dataclass(frozen=True)
class Objective:
    """Terminal operator, energy-penalty weight and optional energy cap."""

    terminal_op: np.ndarray
    beta: float = 0.0
    energy_cap: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "terminal_op", validate_hermitian(self.terminal_op, field="L"))
        if not self.beta >= 0:
            raise ValidationError(f"beta must be >= 0, got {self.beta}", "beta")
        object.__setattr__(self, "beta", float(self.beta))
        if self.energy_cap is not None and not self.energy_cap > 0:
            raise ValidationError(f"energy_cap must be positive, got {self.energy_cap}", "energy_cap")

    @property
    def dim(self) -> int:
        return self.terminal_op.shape[0]

    def is_psd(self, tol=TOL_PSD) -> bool:
        return bool(np.linalg.eigvalsh(self.terminal_op).min() >= -tol)

    def with_beta(self, beta) -> "Objective":
        return Objective(self.terminal_op, beta, self.energy_cap)

    def require_psd(self, method):
        """Krotov needs a PSD ``L``; the gradient method only warns."""
        if self.is_psd():
            return
        if method == "krotov":
            raise ValidationError("terminal operator must be positive semidefinite for krotov", "L")
        warnings.warn("terminal operator is not positive semidefinite", stacklevel=2)


def projector_from_states(states, dim=None) -> np.ndarray:
    """``L = sum_i |s_i><s_i|`` for mutually orthonormal ``states``.

    ``dim`` is required only when ``states`` is empty.
    """
    states = [np.asarray(s, dtype=complex).reshape(-1) for s in states]
    if not states:
        if dim is None:
            raise ValidationError("dimension needed for an empty state list")
        return np.zeros((dim, dim), dtype=complex)
    s = np.stack(states, axis=1)
    gram = s.conj().T @ s
    dev = float(np.max(np.abs(gram - np.eye(len(states)))))
    if dev > TOL_ORTHO:
        raise NotOrthonormal(dev)
    return s @ s.conj().T


def basis_projector(indices, dim) -> np.ndarray:
    """Diagonal 0/1 projector onto the listed basis states."""
    diag = np.zeros(dim)
    diag[list(indices)] = 1.0
    return np.diag(diag).astype(complex)


def complement(L) -> np.ndarray:
    """``Id - L`` for a projector ``L``; turns minimizing a probability into
    maximizing the probability of the complementary set."""
    L = np.asarray(L, dtype=complex)
    if np.max(np.abs(L @ L - L)) > TOL_PROJ or np.max(np.abs(L - L.conj().T)) > TOL_PROJ:
        raise NotProjector("complement requires an orthogonal projector")
    return np.eye(L.shape[0]) - L


def terminal_cost(L, psi_final) -> float:
    psi_final = np.asarray(psi_final, dtype=complex)
    value = np.vdot(psi_final, np.asarray(L) @ psi_final)
    # Hermitian L gives a real expectation value
    assert abs(value.imag) <= 1e-12 * max(1.0, abs(value.real)), value
    return -float(value.real)


def total_cost(terminal: float, beta: float, control: ControlProgram) -> float:
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}", "beta")
    return terminal + beta * energy_integral(control)


def evaluate(system, objective: Objective, control: ControlProgram, psi0, propagators=None):
    """Propagate and return ``(I, J, trajectory)``."""
    traj = propagate_forward(system, control, psi0, propagators)
    terminal = terminal_cost(objective.terminal_op, traj.final)
    return terminal, total_cost(terminal, objective.beta, control), traj
