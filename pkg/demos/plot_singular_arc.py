"""
Singular arcs on a detuned qubit
================================

With a drift ``sz / 2`` and penalty-free cost the Krotov update is bang-bang
wherever the switching function ``K1`` is nonzero.  Where ``K1`` vanishes
the control follows the singular value that keeps ``dK1/dt = 0``.  On such
arcs ``K1`` stays at the level of the grid error ``O(dt^2)``.
"""

import numpy as np

from qimprove import (
    BilinearSystem, ControlProgram, Objective, basis_projector,
    krotov_improve_step, pauli,
)

sx, _, sz = pauli()
system = BilinearSystem(sz / 2, sx, bounds=(-1.0, 1.0))
objective = Objective(basis_projector([1], 2))
psi0 = np.array([1, 0], dtype=complex)

for n_steps in (100, 200, 400):
    control = ControlProgram.constant(6.0, n_steps, 0.2)
    control, rep = krotov_improve_step(system, objective, control, psi0)
    mask = rep.singular_mask
    arc_k1 = np.abs(rep.k1_new[1:][mask])
    print(f"N={n_steps:3d}  I={rep.I_after:+.6f}  singular fraction={rep.singular_fraction:.2f}"
          f"  max |K1| on arcs={arc_k1.max():.2e}")

# show the bang / singular structure of the coarsest control
control = ControlProgram.constant(6.0, 60, 0.2)
control, rep = krotov_improve_step(system, objective, control, psi0)
for k in range(0, 60, 4):
    kind = "singular" if rep.singular_mask[k] else "bang"
    print(f"t={control.times[k]:5.2f}  u={control.values[k]:+.4f}  {kind}")
