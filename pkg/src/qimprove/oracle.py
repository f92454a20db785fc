"""Independent references: exhaustive search over level sequences, central
finite differences of J, and the closed-form two-level pulse-area optimum."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import ControlProgram
from .errors import BudgetExceeded, StepOutOfBounds
from .objectives import Objective, evaluate
from .operators import BilinearSystem, step_propagators

MAX_ENUMERATION = 10**7
MAX_STEPS = 14


@dataclass
class OracleResult:
    control: ControlProgram
    J: float
    n_optimal: int
    table: Optional[np.ndarray] = None  # J for every sequence, lexicographic order


def brute_force_bang_bang(
    system: BilinearSystem,
    objective: Objective,
    psi0,
    horizon: float,
    n_steps: int,
    levels=None,
    tie_tol: float = 1e-12,
    full_table: bool = False,
    chunk: int = 1 << 16,
) -> OracleResult:
    """Evaluate J on every sequence drawn from ``levels`` and keep the best.

    Sequences are enumerated lexicographically over the sorted levels; among
    all sequences within ``tie_tol`` of the minimum the first one is returned
    and ``n_optimal`` counts them.
    """
    levels = np.unique(np.asarray(levels if levels is not None else system.bounds, dtype=float))
    m = levels.size
    if n_steps > MAX_STEPS or m**n_steps > MAX_ENUMERATION:
        raise BudgetExceeded(f"{m}**{n_steps} sequences exceed the enumeration budget")
    dt = horizon / n_steps
    props = step_propagators(system, levels, dt)
    L = objective.terminal_op
    psi0 = np.asarray(psi0, dtype=complex)
    total = m**n_steps
    radix = m ** np.arange(n_steps - 1, -1, -1)
    energy_per_level = levels**2 * dt
    table = np.empty(total)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        idx = (codes[:, None] // radix[None, :]) % m
        psi = np.broadcast_to(psi0, (codes.size, psi0.size)).copy()
        for k in range(n_steps):
            psi = np.einsum("bij,bj->bi", props[idx[:, k]], psi)
        expect = np.einsum("bi,ij,bj->b", psi.conj(), L, psi).real
        table[start : start + codes.size] = -expect + objective.beta * energy_per_level[idx].sum(axis=1)
    best = table.min()
    ties = np.flatnonzero(table <= best + tie_tol)
    first = int(ties[0])
    values = levels[(first // radix) % m]
    return OracleResult(
        control=ControlProgram(horizon, values),
        J=float(table[first]),
        n_optimal=int(ties.size),
        table=table if full_table else None,
    )


def fd_gradient(system, objective, control: ControlProgram, psi0, k: int, h: float = 1e-5) -> float:
    """Central difference of J with respect to ``u_k`` using two full propagations."""
    a, b = system.bounds
    u = control.values
    if u[k] - h < a or u[k] + h > b:
        raise StepOutOfBounds(f"u[{k}] +/- {h} leaves [{a}, {b}]")
    plus = u.copy()
    minus = u.copy()
    plus[k] += h
    minus[k] -= h
    _, j_plus, _ = evaluate(system, objective, control.with_values(plus), psi0)
    _, j_minus, _ = evaluate(system, objective, control.with_values(minus), psi0)
    return (j_plus - j_minus) / (2.0 * h)


def pulse_area_solution(u_max: float, horizon: float):
    """Best transfer |0> -> |1> under ``H = u sx`` with ``0 <= u <= u_max``.

    Transfer probability is ``sin(area)**2`` with ``area = int u dt``, so the
    optimum needs area pi/2 when reachable and otherwise uses all of it.

    Returns ``(area, reachable, I_opt)``.
    """
    reachable = u_max * horizon >= math.pi / 2
    area = math.pi / 2 if reachable else u_max * horizon
    return area, reachable, -math.sin(area) ** 2


def enumerate_sequences(levels, n_steps):
    """Lexicographic iterator over level sequences (reference for tests)."""
    return itertools.product(sorted(levels), repeat=n_steps)
