"""Iterative control improvement for finite-dimensional bilinear Schroedinger
systems: gradient and Krotov global methods, singular arcs, energy budgets."""

__version__ = "0.1.0"

from .budget import BudgetResult, optimize_with_cap
from .driver import Problem, RunConfig, RunResult, run
from .dynamics import (
    AdjointTrajectory,
    ControlProgram,
    StateTrajectory,
    energy_integral,
    k1_profile,
    propagate_backward,
    propagate_forward,
)
from .gradient import LineSearchConfig, cost_gradient, gradient_improve_step
from .krotov import (
    KrotovStepReport,
    SingularConfig,
    SingularPolicy,
    check_terminal_nonsingular,
    krotov_improve_step,
    krotov_update_rule,
    singular_branches,
    singular_control,
)
from .objectives import (
    Objective,
    basis_projector,
    complement,
    evaluate,
    projector_from_states,
    terminal_cost,
    total_cost,
)
from .operators import (
    BilinearSystem,
    commutator,
    hamiltonian,
    pauli,
    step_propagator,
    step_propagators,
    validate_hermitian,
)
from .oracle import brute_force_bang_bang, fd_gradient, pulse_area_solution
