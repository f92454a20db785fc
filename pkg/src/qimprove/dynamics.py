"""Forward/backward propagation on a uniform grid with piecewise-constant control.

Control value ``u_k`` acts on ``[t_k, t_{k+1})`` with ``t_k = k * dt`` and
``dt = T / N``.  Trajectories store all ``N + 1`` nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NormDrift, ValidationError
from .operators import BilinearSystem, step_propagators

TOL_NORM = 1e-9
TOL_PSI0 = 1e-12


@dataclass(frozen=True)
class ControlProgram:
    """Piecewise-constant control on ``N = len(values)`` uniform intervals."""

    horizon: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if not self.horizon > 0:
            raise ValidationError(f"horizon must be positive, got {self.horizon}", "T")
        if values.size < 1:
            raise ValidationError("control needs at least one interval", "N")
        if not np.all(np.isfinite(values)):
            raise ValidationError("control values must be finite", "values")
        values.setflags(write=False)
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, horizon, n_steps, value=0.0):
        return cls(horizon, np.full(int(n_steps), float(value)))

    @property
    def n_steps(self) -> int:
        return self.values.size

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def with_values(self, values) -> "ControlProgram":
        return ControlProgram(self.horizon, values)

    def refine(self, factor=2) -> "ControlProgram":
        """Same piecewise-constant function on a grid ``factor`` times finer."""
        return ControlProgram(self.horizon, np.repeat(self.values, int(factor)))

    def is_feasible(self, bounds, tol=0.0) -> bool:
        a, b = bounds
        return bool(np.all(self.values >= a - tol) and np.all(self.values <= b + tol))


@dataclass(frozen=True)
class StateTrajectory:
    states: np.ndarray  # (N + 1, n)
    max_norm_drift: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class AdjointTrajectory:
    states: np.ndarray  # (N + 1, n)

    @property
    def initial(self) -> np.ndarray:
        return self.states[0]


def _check_dim(system, vec, name):
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    if vec.size != system.dim:
        raise DimensionMismatch(f"{name} has length {vec.size}, system dimension is {system.dim}")
    return vec


def norm_drift(states) -> float:
    return float(np.max(np.abs(np.sum(np.abs(states) ** 2, axis=-1) - 1.0)))


def propagate_forward(system: BilinearSystem, control: ControlProgram, psi0, propagators=None):
    """Propagate ``psi0`` across every interval; ``propagators`` may be supplied
    to reuse a stack from :func:`~qimprove.operators.step_propagators`."""
    psi0 = _check_dim(system, psi0, "psi0")
    if abs(np.vdot(psi0, psi0).real - 1.0) > TOL_PSI0:
        raise ValidationError("psi0 not normalized", "psi0")
    if propagators is None:
        propagators = step_propagators(system, control.values, control.dt)
    states = np.empty((control.n_steps + 1, system.dim), dtype=complex)
    states[0] = psi0
    for k, u in enumerate(propagators):
        states[k + 1] = u @ states[k]
    drift = norm_drift(states)
    if drift > TOL_NORM:
        raise NormDrift(drift)
    states.setflags(write=False)
    return StateTrajectory(states, drift)


def propagate_backward(system: BilinearSystem, control: ControlProgram, chi_final, propagators=None):
    """Costate under the same generator as the state, integrated from ``T`` to 0."""
    chi_final = _check_dim(system, chi_final, "chi_final")
    if propagators is None:
        propagators = step_propagators(system, control.values, control.dt)
    states = np.empty((control.n_steps + 1, system.dim), dtype=complex)
    states[-1] = chi_final
    for k in range(control.n_steps - 1, -1, -1):
        states[k] = propagators[k].conj().T @ states[k + 1]
    states.setflags(write=False)
    return AdjointTrajectory(states)


def energy_integral(control: ControlProgram) -> float:
    """``z(T) = sum_k u_k**2 * dt``, exact for piecewise-constant control."""
    return float(np.sum(control.values**2) * control.dt)


def switching_value(chi, psi, h1) -> float:
    """``K1 = 2 Im <chi, h1 psi>`` for a single pair of vectors."""
    return 2.0 * float(np.vdot(chi, h1 @ psi).imag)


def k1_profile(adjoint: AdjointTrajectory, trajectory: StateTrajectory, system: BilinearSystem):
    """Switching function ``K1(t_k) = 2 Im <chi(t_k), h1 psi(t_k)>`` at every node."""
    chi = adjoint.states
    psi = trajectory.states
    if chi.shape != psi.shape:
        raise DimensionMismatch(f"costate grid {chi.shape} does not match state grid {psi.shape}")
    return 2.0 * np.einsum("ki,ki->k", chi.conj(), psi @ system.h1.T).imag
