"""Energy-budget outer loop: tune the penalty weight beta so that the final
control meets ``z(T) <= cap``."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .driver import Problem, RunConfig, RunResult, run
from .errors import BracketFailure, QImproveError, ValidationError

log = logging.getLogger(__name__)


class InnerFailure(QImproveError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class BudgetResult:
    beta_star: float
    z_T: float
    result: RunResult
    status: str  # inactive | met
    bracket_history: list = field(default_factory=list)  # (beta, z_T) in evaluation order

    @property
    def control(self):
        return self.result.control


def _inner(problem, beta, method, config, history):
    res = run(problem.with_beta(beta), method, config)
    if not res.ok:
        raise InnerFailure(f"inner {method} run failed at beta={beta:g}: {res.message}", res)
    z = res.rows[-1]["energy"]
    history.append((beta, z))
    log.debug("beta=%.6g z(T)=%.6g J=%.6g", beta, z, res.J)
    return res, z


def optimize_with_cap(
    problem: Problem,
    cap: float,
    method: str = "krotov",
    config: RunConfig = RunConfig(iterations=300, J_tol=1e-13),
    cap_tol: float = 1e-3,
    beta0: float = None,
    ladder_factor: float = 4.0,
    max_ladder: int = 40,
    max_bisect: int = 40,
    noise_tol: float = 1e-6,
) -> BudgetResult:
    """Meet ``z(T) <= cap`` by adjusting a constant beta.

    The unconstrained problem (beta = 0) is solved first; if its energy is
    within the cap the constraint is inactive.  Otherwise beta climbs a
    geometric ladder until ``z(T) <= cap`` and is then bisected until
    ``|z(T) - cap| <= cap_tol * cap``.  Each inner run starts from the
    control of the previous one.

    Raises
    ------
    BracketFailure
        If ``z(T)`` grows with beta along the ladder by more than
        ``noise_tol * cap``, or bisection runs out of steps.
    InnerFailure
        If an inner optimization fails.
    """
    if not cap > 0:
        raise ValidationError(f"cap must be positive, got {cap}", "energy_cap")
    history = []
    res0, z0 = _inner(problem, 0.0, method, config, history)
    if z0 <= cap:
        return BudgetResult(0.0, z0, res0, "inactive", history)

    if beta0 is None:
        beta0 = 1e-4 * abs(res0.rows[0]["I"]) / max(z0, 1e-300)
        beta0 = max(beta0, 1e-12)
    lo, z_lo, res_lo = 0.0, z0, res0
    beta = beta0
    hi = None
    for _ in range(max_ladder):
        res, z = _inner(problem.with_control(res_lo.control), beta, method, config, history)
        if z > z_lo + noise_tol * cap:
            raise BracketFailure(f"z(T) increased from {z_lo:.6g} to {z:.6g} at beta={beta:g}", history)
        if z <= cap:
            hi, z_hi, res_hi = beta, z, res
            break
        lo, z_lo, res_lo = beta, z, res
        beta *= ladder_factor
    if hi is None:
        raise BracketFailure("beta ladder never brought z(T) under the cap", history)

    best_beta, best_z, best_res = hi, z_hi, res_hi
    for _ in range(max_bisect):
        if abs(best_z - cap) <= cap_tol * cap:
            return BudgetResult(best_beta, best_z, best_res, "met", history)
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        res, z = _inner(problem.with_control(res_lo.control), mid, method, config, history)
        if z > cap:
            lo, z_lo, res_lo = mid, z, res
        else:
            hi, z_hi, res_hi = mid, z, res
            best_beta, best_z, best_res = mid, z, res
        if abs(z - cap) < abs(best_z - cap) and z <= cap + cap_tol * cap:
            best_beta, best_z, best_res = mid, z, res
    if abs(best_z - cap) <= cap_tol * cap:
        return BudgetResult(best_beta, best_z, best_res, "met", history)
    raise BracketFailure(f"bisection did not reach |z(T) - cap| <= {cap_tol:g} * cap", history)
