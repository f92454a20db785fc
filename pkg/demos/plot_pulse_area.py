"""
Population transfer by pulse area
=================================

A drift-free two-level system driven by ``u(t) sx`` transfers |0> to |1>
with probability ``sin^2(int u dt)``.  With ``u`` in [0, 1] and ``T = pi``
any control of area pi/2 is optimal.  The Krotov method finds one in a
single sweep, and exhaustive search over bang-bang sequences confirms the
optimum.
"""

import numpy as np

from qimprove import (
    BilinearSystem, ControlProgram, Objective, Problem, RunConfig,
    basis_projector, brute_force_bang_bang, pauli, pulse_area_solution, run,
)

sx, _, _ = pauli()
system = BilinearSystem(np.zeros((2, 2)), sx, bounds=(0.0, 1.0))
objective = Objective(basis_projector([1], 2))
psi0 = np.array([1, 0], dtype=complex)

# a weak constant pulse, far from optimal
control = ControlProgram.constant(np.pi, 10, 0.1)
problem = Problem(system, objective, psi0, control)

result = run(problem, "krotov", RunConfig(iterations=20))
for row in result.rows:
    print(f"iter {row['iter']:2d}  I = {row['I']:+.12f}")

u = result.control.values
print("control:", np.round(u, 4))
print("pulse area / (pi/2):", np.sum(u) * result.control.dt / (np.pi / 2))

area, reachable, I_opt = pulse_area_solution(1.0, np.pi)
oracle = brute_force_bang_bang(system, objective, psi0, np.pi, 10)
print(f"analytic optimum {I_opt}, oracle {oracle.J:.15f} "
      f"({oracle.n_optimal} optimal sequences), krotov {result.J:.15f}")
