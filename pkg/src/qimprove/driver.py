"""Iterate an improver from an initial control and record convergence rows."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dynamics import ControlProgram, energy_integral
from .errors import MonotonicityFailure, NoImprovement
from .gradient import LineSearchConfig, gradient_improve_step
from .krotov import SingularConfig, krotov_improve_step
from .objectives import Objective, evaluate
from .operators import BilinearSystem

log = logging.getLogger(__name__)

METHODS = ("krotov", "gradient")
ROW_FIELDS = ("iter", "I", "J", "energy", "norm_drift", "singular_fraction")


@dataclass(frozen=True)
class Problem:
    system: BilinearSystem
    objective: Objective
    psi0: np.ndarray
    control: ControlProgram

    def with_beta(self, beta):
        return replace(self, objective=self.objective.with_beta(beta))

    def with_control(self, control):
        return replace(self, control=control)


@dataclass(frozen=True)
class RunConfig:
    iterations: int = 100
    J_tol: float = 1e-10
    grad_tol: float = 1e-8
    singular: SingularConfig = SingularConfig()
    line_search: LineSearchConfig = LineSearchConfig()
    refine_on_failure: bool = False
    max_refinements: int = 3
    trace_controls: bool = False


@dataclass
class RunResult:
    method: str
    control: ControlProgram
    rows: list
    status: str  # converged | max_iterations | no_improvement | monotonicity_failure
    message: str = ""
    damping_events: list = field(default_factory=list)
    traces: list = field(default_factory=list)

    @property
    def J(self):
        return self.rows[-1]["J"]

    @property
    def I(self):
        return self.rows[-1]["I"]

    @property
    def ok(self):
        return self.status in ("converged", "max_iterations")


def _row(i, terminal, total, energy, drift, frac):
    return {"iter": i, "I": terminal, "J": total, "energy": energy, "norm_drift": drift, "singular_fraction": frac}


def run(problem: Problem, method: str, config: RunConfig = RunConfig()) -> RunResult:
    """Apply ``config.iterations`` improvement steps of ``method``.

    Stops early when ``|dJ| < J_tol`` or, for the gradient method, when the
    line search fails at a gradient norm below ``grad_tol``.  Failures are
    reported through ``status`` rather than raised.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    system, objective, psi0 = problem.system, problem.objective, problem.psi0
    objective.require_psd(method)
    control = problem.control
    i0, j0, traj = evaluate(system, objective, control, psi0)
    rows = [_row(0, i0, j0, energy_integral(control), traj.max_norm_drift, 0.0)]
    result = RunResult(method, control, rows, "max_iterations")
    if config.trace_controls:
        result.traces.append(control.values.tolist())
    refinements = 0
    it = 1
    while it <= config.iterations:
        try:
            if method == "krotov":
                new, rep = krotov_improve_step(system, objective, control, psi0, config.singular)
                row = _row(it, rep.I_after, rep.J_after, rep.energy_after, rep.norm_drift, rep.singular_fraction)
                if rep.damping_events:
                    result.damping_events.append((it, rep.damping_used))
            else:
                new, rep = gradient_improve_step(system, objective, control, psi0, config.line_search)
                row = _row(it, rep.I, rep.J, rep.energy, rep.norm_drift, rep.singular_fraction)
        except NoImprovement as exc:
            if exc.report is not None and exc.report.gradient_norm < config.grad_tol:
                result.status = "converged"
            else:
                result.status, result.message = "no_improvement", str(exc)
            break
        except MonotonicityFailure as exc:
            if config.refine_on_failure and refinements < config.max_refinements:
                refinements += 1
                control = control.refine(2)
                log.info("refining grid to N=%d after monotonicity failure", control.n_steps)
                continue
            result.status, result.message = "monotonicity_failure", str(exc)
            break
        change = abs(rows[-1]["J"] - row["J"])
        control = new
        rows.append(row)
        if config.trace_controls:
            result.traces.append(control.values.tolist())
        it += 1
        if change < config.J_tol:
            result.status = "converged"
            break
    result.control = control
    return result


def iterations_to_fraction(rows, target_J, fraction=0.9):
    """First iteration whose J achieves ``fraction`` of the improvement from
    ``rows[0]`` to ``target_J``; ``None`` if never reached."""
    j0 = rows[0]["J"]
    threshold = j0 - fraction * (j0 - target_J)
    for row in rows:
        if row["J"] <= threshold:
            return row["iter"]
    return None
