"""
Gradient versus Krotov
======================

Both methods start from a weak pulse on the penalized pulse-area problem
(``beta = 0.01``).  The Krotov update makes most of its progress in the
first sweep; the gradient method needs a few line-searched steps.
"""

import numpy as np

from qimprove import (
    BilinearSystem, ControlProgram, Objective, Problem, RunConfig,
    basis_projector, pauli, run,
)
from qimprove.cli import comparison_table

sx, _, _ = pauli()
system = BilinearSystem(np.zeros((2, 2)), sx, bounds=(0.0, 1.0))
problem = Problem(system, Objective(basis_projector([1], 2), beta=0.01),
                  np.array([1, 0], dtype=complex), ControlProgram.constant(np.pi, 10, 0.05))

results = {m: run(problem, m, RunConfig(iterations=100)) for m in ("krotov", "gradient")}
for m, r in results.items():
    print(m, " ".join(f"{row['J']:+.4f}" for row in r.rows[:8]), "...")

for row in comparison_table(results):
    print(row)
