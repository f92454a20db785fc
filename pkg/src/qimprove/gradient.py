"""Gradient-method improvement: adjoint pass, gradient assembly, projected
backtracking line search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    ControlProgram,
    energy_integral,
    k1_profile,
    propagate_backward,
    propagate_forward,
)
from .errors import NoImprovement, ValidationError
from .objectives import Objective, evaluate, terminal_cost, total_cost
from .operators import BilinearSystem, step_propagators


@dataclass(frozen=True)
class LineSearchConfig:
    eps0: float = 1.0
    shrink: float = 0.5
    max_trials: int = 30

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValidationError("eps0 must be positive", "eps0")
        if not 0 < self.shrink < 1:
            raise ValidationError("shrink must lie in (0, 1)", "shrink")
        if self.max_trials < 1:
            raise ValidationError("max_trials must be >= 1", "max_trials")


@dataclass
class IterationReport:
    I_before: float
    J_before: float
    I: float
    J: float
    energy: float
    norm_drift: float
    singular_fraction: float = 0.0
    trials: int = 0
    eps: float = 0.0
    gradient_norm: float = 0.0
    max_abs_k1: float = 0.0
    extra: dict = field(default_factory=dict)


def _switching_data(system, objective, control, psi0):
    props = step_propagators(system, control.values, control.dt)
    traj = propagate_forward(system, control, psi0, props)
    adj = propagate_backward(system, control, objective.terminal_op @ traj.final, props)
    return traj, k1_profile(adj, traj, system)


def interval_k1(k1_nodes, rule="trapezoid"):
    """Per-interval switching value from node values.

    ``"left"`` reads ``K1(t_k)``; ``"trapezoid"`` averages the two end nodes,
    which is second-order accurate for the interval mean of ``K1``.
    """
    if rule == "left":
        return k1_nodes[:-1]
    if rule == "trapezoid":
        return 0.5 * (k1_nodes[:-1] + k1_nodes[1:])
    raise ValueError(f"unknown rule {rule!r}")


def cost_gradient(
    system: BilinearSystem,
    objective: Objective,
    control: ControlProgram,
    psi0,
    rule="trapezoid",
) -> np.ndarray:
    """Discrete gradient ``dJ/du_k = (-K1_k + 2 beta u_k) dt``.

    The costate starts from ``chi(T) = L psi(T)``.
    """
    _, k1 = _switching_data(system, objective, control, psi0)
    return (-interval_k1(k1, rule) + 2.0 * objective.beta * control.values) * control.dt


def gradient_norm(g, dt) -> float:
    """L2 norm of the gradient density ``g / dt`` over ``[0, T]``."""
    return float(np.sqrt(np.sum((g / dt) ** 2) * dt))


def gradient_improve_step(
    system: BilinearSystem,
    objective: Objective,
    control: ControlProgram,
    psi0,
    config: LineSearchConfig = LineSearchConfig(),
    k1_tol: float = 1e-8,
    rule="trapezoid",
):
    """One projected steepest-descent step with backtracking.

    Tries ``eps = eps0, eps0*shrink, ...`` and accepts the first candidate
    ``clip(u - eps * g / dt, a, b)`` with a strictly smaller total cost.

    Returns
    -------
    (ControlProgram, IterationReport)

    Raises
    ------
    NoImprovement
        When ``max_trials`` candidates all fail; the attached report carries
        the gradient norm and the largest ``|K1|`` so that callers can tell
        stationarity from a singular regime.
    """
    if not control.is_feasible(system.bounds):
        raise ValidationError("control violates bounds", "control")
    a, b = system.bounds
    dt = control.dt
    traj, k1 = _switching_data(system, objective, control, psi0)
    i0 = terminal_cost(objective.terminal_op, traj.final)
    j0 = total_cost(i0, objective.beta, control)
    g = (-interval_k1(k1, rule) + 2.0 * objective.beta * control.values) * dt
    report = IterationReport(
        I_before=i0,
        J_before=j0,
        I=i0,
        J=j0,
        energy=energy_integral(control),
        norm_drift=traj.max_norm_drift,
        singular_fraction=float(np.mean(np.abs(k1) <= k1_tol)),
        gradient_norm=gradient_norm(g, dt),
        max_abs_k1=float(np.max(np.abs(k1))),
    )
    eps = config.eps0
    for trial in range(1, config.max_trials + 1):
        candidate = control.with_values(np.clip(control.values - eps * g / dt, a, b))
        i1, j1, traj1 = evaluate(system, objective, candidate, psi0)
        if j1 < j0:
            report.I, report.J = i1, j1
            report.energy = energy_integral(candidate)
            report.norm_drift = max(report.norm_drift, traj1.max_norm_drift)
            report.trials, report.eps = trial, eps
            return candidate, report
        eps *= config.shrink
    report.trials = config.max_trials
    raise NoImprovement(
        f"no decrease after {config.max_trials} trials "
        f"(gradient norm {report.gradient_norm:.3e}, max |K1| {report.max_abs_k1:.3e})",
        report,
    )
