"""
Meeting an energy budget
========================

The pulse energy ``z(T) = int u^2 dt`` is capped by tuning the penalty
weight ``beta``.  Larger ``beta`` gives a weaker pulse and a worse transfer.
Here the cap is half the energy of the unconstrained optimum.
"""

import numpy as np

from qimprove import (
    BilinearSystem, ControlProgram, Objective, Problem, RunConfig,
    basis_projector, energy_integral, optimize_with_cap, pauli, run,
)

sx, _, _ = pauli()
system = BilinearSystem(np.zeros((2, 2)), sx, bounds=(0.0, 1.0))
problem = Problem(system, Objective(basis_projector([1], 2)),
                  np.array([1, 0], dtype=complex), ControlProgram.constant(np.pi, 10, 0.1))
config = RunConfig(iterations=300, J_tol=1e-13)

free = run(problem, "krotov", config)
z_free = energy_integral(free.control)
cap = 0.5 * z_free
print(f"unconstrained: I={free.I:+.6f}  z(T)={z_free:.6f}  cap={cap:.6f}")

out = optimize_with_cap(problem, cap, "krotov", config)
print(f"beta*={out.beta_star:.5f}  z(T)={out.z_T:.6f}  I={out.result.I:+.6f}")
print("bracket history (beta, z):")
for beta, z in out.bracket_history:
    print(f"  {beta:10.5f}  {z:.6f}")

# the transfer probability for a given energy cannot beat sin^2 of the
# largest area the cap allows, sqrt(cap * T)
print("area bound:", np.sin(np.sqrt(cap * np.pi)) ** 2)
