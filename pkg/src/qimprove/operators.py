"""Dense Hermitian operators, bilinear systems and exact step propagators.

Units have hbar = 1 throughout.  The Hamiltonian of a :class:`BilinearSystem`
under a scalar control ``u`` is ``H(u) = h0 + u * h1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DimensionMismatch, EigenFailure, NonHermitian, ValidationError

TOL_HERM = 1e-12


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def validate_hermitian(m, tol=TOL_HERM, field=None):
    """Return ``m`` as a read-only complex array after checking Hermiticity.

    The matrix is never symmetrized; a deviation above ``tol`` raises
    :class:`NonHermitian`.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {m.shape}", field)
    dev = float(np.max(np.abs(m - m.conj().T)))
    if dev > tol:
        raise NonHermitian(dev, field)
    return _frozen(m)


@dataclass(frozen=True)
class BilinearSystem:
    """Drift ``h0``, control coupling ``h1`` and control bounds ``(a, b)``."""

    h0: np.ndarray
    h1: np.ndarray
    bounds: tuple[float, float]

    def __post_init__(self):
        h0 = validate_hermitian(self.h0, field="h0")
        h1 = validate_hermitian(self.h1, field="h1")
        if h0.shape != h1.shape:
            raise DimensionMismatch(f"h0 is {h0.shape} but h1 is {h1.shape}")
        a, b = (float(x) for x in self.bounds)
        if not a < b:
            raise ValidationError(f"control bounds need a < b, got [{a}, {b}]", "bounds")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "bounds", (a, b))

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def a(self) -> float:
        return self.bounds[0]

    @property
    def b(self) -> float:
        return self.bounds[1]

    @cached_property
    def drift_commutator(self) -> np.ndarray:
        """``h0 h1 - h1 h0``."""
        return _frozen(commutator(self.h0, self.h1))

    @cached_property
    def h1_squared(self) -> np.ndarray:
        return _frozen(self.h1 @ self.h1)


def hamiltonian(system: BilinearSystem, u: float) -> np.ndarray:
    return system.h0 + u * system.h1


def _expm_hermitian(h, dt):
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    phase = np.exp(-1j * dt * w)
    # V diag(phase) V^dagger, batched over leading axes
    return (v * phase[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def step_propagator(system: BilinearSystem, u: float, dt: float) -> np.ndarray:
    """Exact propagator ``exp(-i H(u) dt)`` for a constant control value."""
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    return _expm_hermitian(hamiltonian(system, u), dt)


def step_propagators(system: BilinearSystem, values, dt: float) -> np.ndarray:
    """Stack of propagators, one per control value, shape ``(N, n, n)``.

    All eigendecompositions are done in a single batched call.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    values = np.asarray(values, dtype=float)
    hs = system.h0[None, :, :] + values[:, None, None] * system.h1[None, :, :]
    return _expm_hermitian(hs, dt)


def commutator(p, q) -> np.ndarray:
    p = np.asarray(p)
    q = np.asarray(q)
    if p.shape != q.shape:
        raise DimensionMismatch(f"cannot commute {p.shape} with {q.shape}")
    return p @ q - q @ p


def pauli():
    """Return ``(sx, sy, sz)`` as complex 2x2 arrays."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz
