"""Krotov global-method improvement step with singular-arc synthesis.

One step consists of a backward costate sweep under the old control and a
forward sweep that sets each interval's control from the switching value
``K1 = 2 Im <chi, h1 psi>`` evaluated on the *new* state:

* ``beta > 0``: ``u = clip(K1 / (2 beta), a, b)``;
* ``beta = 0``: ``b`` if ``K1 > 0``, ``a`` if ``K1 < 0``, and the singular
  control when ``K1`` vanishes.

On a singular arc the control keeps ``dK1/dt = 0``; a proportional term
``K1 / (2 D dt)`` drives the residual at the next node to zero to first
order, so the arc does not drift.  An arc is entered either when ``|K1|`` at a
node is below ``k1_tol`` or when the bang value would flip the sign of ``K1``
before the next node.  In the second case the entry interval is solved
exactly so that ``K1`` vanishes at its right end.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .dynamics import (
    ControlProgram,
    TOL_NORM,
    energy_integral,
    norm_drift,
    propagate_backward,
    propagate_forward,
    switching_value,
)
from .errors import MonotonicityFailure, NormDrift, SingularUnavailable, ValidationError
from .objectives import Objective, terminal_cost, total_cost
from .operators import BilinearSystem, step_propagator, step_propagators

log = logging.getLogger(__name__)

MONO_TOL = 1e-10
DAMP_MAX = 20

STAY, LEAVE_LOW, LEAVE_HIGH = "stay", "leave_low", "leave_high"


class SingularPolicy(str, Enum):
    STAY_UNTIL_SATURATION = "stay_until_saturation"
    ALWAYS_LEAVE_LOW = "always_leave_low"
    ALWAYS_LEAVE_HIGH = "always_leave_high"


@dataclass(frozen=True)
class SingularConfig:
    """Thresholds and junction policy for singular arcs.

    ``k1_tol=None`` selects ``1e-8 * ||h1|| * ||L||`` at step time.
    """

    k1_tol: Optional[float] = None
    denom_tol: float = 1e-12
    policy: SingularPolicy = SingularPolicy.STAY_UNTIL_SATURATION

    def __post_init__(self):
        if self.k1_tol is not None and not self.k1_tol > 0:
            raise ValidationError("k1_tol must be positive", "k1_tol")
        if not self.denom_tol > 0:
            raise ValidationError("denom_tol must be positive", "denom_tol")
        object.__setattr__(self, "policy", SingularPolicy(self.policy))

    def resolve_k1_tol(self, system, terminal_op) -> float:
        if self.k1_tol is not None:
            return self.k1_tol
        scale = np.linalg.norm(system.h1, 2) * np.linalg.norm(terminal_op, 2)
        return max(1e-8 * scale, 1e-300)


@dataclass
class KrotovStepReport:
    J_before: float
    J_after: float
    I_before: float
    I_after: float
    energy_after: float
    singular_fraction: float
    monotonicity_ok: bool
    damping_used: float
    damping_events: int
    norm_drift: float
    k1_tol: float
    terminal_warning: Optional[str] = None
    # K1 on the new trajectory at every node, and the per-interval arc mask
    k1_new: np.ndarray = field(default=None, repr=False)
    singular_mask: np.ndarray = field(default=None, repr=False)


def krotov_update_rule(k1, u_old, beta, bounds, singular_value=None, k1_tol=1e-8):
    """Pointwise maximizer of ``K1 u - beta u**2`` over ``[a, b]``."""
    a, b = bounds
    if beta > 0:
        return float(np.clip(k1 / (2.0 * beta), a, b))
    if k1 > k1_tol:
        return float(b)
    if k1 < -k1_tol:
        return float(a)
    if singular_value is None:
        raise SingularUnavailable("K1 vanished with beta=0 and no singular value supplied")
    return float(np.clip(singular_value, a, b))


def _arc_terms(chi, psi, system):
    """``(Re <chi,[h0,h1] psi>, Re <chi, h1^2 psi>)``."""
    num = np.vdot(chi, system.drift_commutator @ psi).real
    den = np.vdot(chi, system.h1_squared @ psi).real
    return float(num), float(den)


def k1_rate(chi, psi, system, u_old, u):
    """``dK1/dt`` at the pair ``(chi, psi)`` when the state runs under ``u`` and
    the costate under ``u_old``."""
    num, den = _arc_terms(chi, psi, system)
    return 2.0 * num + 2.0 * (u_old - u) * den


def singular_control(chi, psi, system: BilinearSystem, u_old, denom_tol=1e-12):
    """Control value that holds ``dK1/dt = 0``; ``None`` for a degenerate
    denominator ``Re <chi, h1^2 psi>``."""
    num, den = _arc_terms(chi, psi, system)
    if abs(den) < denom_tol:
        return None
    return u_old + num / den


def _branches(u_candidate, rate_a, rate_b, bounds):
    a, b = bounds
    out = set()
    if u_candidate is not None and a <= u_candidate <= b:
        out.add(STAY)
    if rate_a < 0:
        out.add(LEAVE_LOW)
    if rate_b > 0:
        out.add(LEAVE_HIGH)
    return frozenset(out)


def singular_branches(chi, psi, system: BilinearSystem, bounds, u_old, denom_tol=1e-12):
    """Admissible continuations at a point where ``K1`` vanishes.

    Leaving low is allowed when ``u = a`` drives ``K1`` negative, leaving high
    when ``u = b`` drives it positive; staying requires ``u_sing`` in bounds.
    """
    a, b = bounds
    u_sing = singular_control(chi, psi, system, u_old, denom_tol)
    return _branches(
        u_sing,
        k1_rate(chi, psi, system, u_old, a),
        k1_rate(chi, psi, system, u_old, b),
        bounds,
    )


def check_terminal_nonsingular(chi_final, psi_final, system: BilinearSystem, k1_tol):
    """Warning message when ``K1(T)`` vanishes, ``None`` otherwise.

    A singular end of the trajectory stalls later improvements.
    """
    k = switching_value(chi_final, psi_final, system.h1)
    if abs(k) < k1_tol:
        return f"terminal switching value |K1(T)| = {abs(k):.3e} is below k1_tol = {k1_tol:.3e}"
    return None


class _Sweep:
    """Forward sweep state for one damping factor."""

    def __init__(self, system, beta, chi, u_old, dt, config, k1_tol):
        self.system = system
        self.beta = beta
        self.chi = chi
        self.u_old = u_old
        self.dt = dt
        self.policy = config.policy
        self.denom_tol = config.denom_tol
        self.k1_tol = k1_tol

    def _singular_choice(self, k, psi, K, entering):
        """Returns ``(u, singular, stays_on_arc)`` or ``None`` to keep the bang."""
        system, (a, b) = self.system, self.system.bounds
        u_o = self.u_old[k]
        num, den = _arc_terms(self.chi[k], psi, system)
        if abs(den) < self.denom_tol:
            u_arc = None
        else:
            u_arc = u_o + num / den + K / (2.0 * den * self.dt)
        rate_a = 2.0 * num + 2.0 * (u_o - a) * den
        rate_b = 2.0 * num + 2.0 * (u_o - b) * den
        branches = _branches(u_arc, rate_a, rate_b, (a, b))

        if entering:
            # K1 changes sign inside the interval: either hold the arc or switch normally
            if STAY in branches and self.policy is SingularPolicy.STAY_UNTIL_SATURATION:
                return self._junction(k, psi, K, u_arc), True, True
            return None

        if self.policy is SingularPolicy.STAY_UNTIL_SATURATION:
            order = (STAY,)
        elif self.policy is SingularPolicy.ALWAYS_LEAVE_LOW:
            order = (LEAVE_LOW, STAY, LEAVE_HIGH)
        else:
            order = (LEAVE_HIGH, STAY, LEAVE_LOW)
        for branch in order:
            if branch in branches:
                if branch == STAY:
                    return u_arc, True, True
                return (a if branch == LEAVE_LOW else b), False, False
        if u_arc is not None:
            # saturated arc: continue on the bound it ran into
            return (b if u_arc > b else a), False, False
        if LEAVE_LOW in branches:
            return a, False, False
        if LEAVE_HIGH in branches:
            return b, False, False
        # flat and degenerate: every u is a maximizer
        return float(np.clip(u_o, a, b)), True, False

    def _junction(self, k, psi, K, u_guess):
        """Control on the entry interval that lands ``K1`` exactly on zero at
        the next node; falls back to the linear estimate ``u_guess``."""
        a, b = self.system.bounds
        chi_next, h1 = self.chi[k + 1], self.system.h1

        def k_next(u):
            return switching_value(chi_next, step_propagator(self.system, u, self.dt) @ psi, h1)

        u_bang = b if K > 0 else a
        f_bang = k_next(u_bang)
        for other in (u_guess, a + b - u_bang):
            f_other = k_next(other)
            if f_other == 0.0:
                return other
            if f_other * f_bang < 0:
                return brentq(k_next, min(other, u_bang), max(other, u_bang), xtol=1e-14, rtol=1e-14)
        return u_guess

    def run(self, psi0, theta=1.0):
        system = self.system
        a, b = system.bounds
        h1 = system.h1
        n_steps = self.u_old.size
        states = np.empty((n_steps + 1, system.dim), dtype=complex)
        values = np.empty(n_steps)
        singular = np.zeros(n_steps, dtype=bool)
        k1_new = np.empty(n_steps + 1)
        states[0] = psi0
        psi = states[0]
        on_arc = False
        for k in range(n_steps):
            K = switching_value(self.chi[k], psi, h1)
            k1_new[k] = K
            u_prop = None
            if self.beta > 0:
                u, sing = float(np.clip(K / (2.0 * self.beta), a, b)), False
            elif on_arc or abs(K) <= self.k1_tol:
                u, sing, on_arc = self._singular_choice(k, psi, K, entering=False)
            else:
                u, sing = (b if K > 0 else a), False
                u_prop = step_propagator(system, u, self.dt)
                k_next = switching_value(self.chi[k + 1], u_prop @ psi, h1)
                if k_next * K < 0 or abs(k_next) <= self.k1_tol:
                    choice = self._singular_choice(k, psi, K, entering=True)
                    if choice is not None:
                        u, sing, on_arc = choice
                        u_prop = None
            if theta != 1.0:
                u = self.u_old[k] + theta * (u - self.u_old[k])
                u_prop = None
            values[k] = u
            singular[k] = sing
            if u_prop is None:
                u_prop = step_propagator(system, u, self.dt)
            psi = u_prop @ psi
            states[k + 1] = psi
        k1_new[n_steps] = switching_value(self.chi[n_steps], psi, h1)
        return values, states, singular, k1_new


def krotov_improve_step(
    system: BilinearSystem,
    objective: Objective,
    control: ControlProgram,
    psi0,
    config: SingularConfig = SingularConfig(),
    mono_tol: float = MONO_TOL,
    damp_max: int = DAMP_MAX,
):
    """One backward/forward sweep pair.

    If the new total cost exceeds the old one by more than ``mono_tol`` the
    update is damped toward the old control with ``theta = 1/2, 1/4, ...``
    and the forward sweep is repeated.

    Returns
    -------
    (ControlProgram, KrotovStepReport)

    Raises
    ------
    MonotonicityFailure
        After ``damp_max`` halvings without restoring monotonicity, which
        usually means the grid is too coarse.
    """
    if not control.is_feasible(system.bounds):
        raise ValidationError("control violates bounds", "control")
    objective.require_psd("krotov")
    L = objective.terminal_op
    u_old = control.values
    dt = control.dt
    props = step_propagators(system, u_old, dt)
    traj0 = propagate_forward(system, control, psi0, props)
    i0 = terminal_cost(L, traj0.final)
    j0 = total_cost(i0, objective.beta, control)
    adj = propagate_backward(system, control, L @ traj0.final, props)
    k1_tol = config.resolve_k1_tol(system, L)
    warning = check_terminal_nonsingular(adj.states[-1], traj0.final, system, k1_tol)
    if warning:
        log.info(warning)

    sweep = _Sweep(system, objective.beta, adj.states, u_old, dt, config, k1_tol)
    theta = 1.0
    for attempt in range(damp_max + 1):
        values, states, singular, k1_new = sweep.run(traj0.states[0], theta)
        new_control = control.with_values(values)
        i1 = terminal_cost(L, states[-1])
        j1 = total_cost(i1, objective.beta, new_control)
        if j1 <= j0 + mono_tol:
            break
        log.info("J rose by %.3e at theta=%g, damping", j1 - j0, theta)
        theta *= 0.5
    else:
        raise MonotonicityFailure(
            f"J did not decrease after {damp_max} damping halvings (last rise {j1 - j0:.3e})"
        )

    drift = norm_drift(states)
    if drift > TOL_NORM:
        raise NormDrift(drift)
    if objective.beta == 0 and theta == 1.0:
        a, b = system.bounds
        on_bound = (values == a) | (values == b)
        assert np.all(on_bound | singular), "beta=0 control left the bang/singular structure"

    report = KrotovStepReport(
        J_before=j0,
        J_after=j1,
        I_before=i0,
        I_after=i1,
        energy_after=energy_integral(new_control),
        singular_fraction=float(np.mean(singular)),
        monotonicity_ok=True,
        damping_used=theta,
        damping_events=attempt,
        norm_drift=max(drift, traj0.max_norm_drift),
        k1_tol=k1_tol,
        terminal_warning=warning,
        k1_new=k1_new,
        singular_mask=singular,
    )
    return new_control, report
