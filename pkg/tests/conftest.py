import numpy as np
import pytest

from qimprove import BilinearSystem, ControlProgram, Objective, Problem, basis_projector, pauli

SX, SY, SZ = pauli()
ID2 = np.eye(2, dtype=complex)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (a + a.conj().T) / 2
    return scale * h / np.linalg.norm(h, 2)


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_projector(rng, n, rank=1):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q[:, :rank] @ q[:, :rank].conj().T


def random_instance(rng, n, beta=0.0, horizon=None, n_steps=200, bounds=(-1.0, 1.0)):
    system = BilinearSystem(random_hermitian(rng, n), random_hermitian(rng, n), bounds)
    horizon = rng.uniform(2, 6) if horizon is None else horizon
    control = ControlProgram(horizon, rng.uniform(*bounds, n_steps))
    return Problem(system, Objective(random_projector(rng, n), beta), random_state(rng, n), control)


def pulse_area_problem(b=1.0, n_steps=10, u0=0.1, beta=0.0, horizon=np.pi):
    """Drift-free two-level transfer |0> -> |1> under H = u sx, u in [0, b]."""
    system = BilinearSystem(np.zeros((2, 2)), SX, (0.0, b))
    return Problem(system, Objective(basis_projector([1], 2), beta), KET0, ControlProgram.constant(horizon, n_steps, u0))


def detuned_problem(horizon=6.0, n_steps=100, u0=0.2):
    """h0 = sz/2, h1 = sx, u in [-1, 1], transfer |0> -> |1>."""
    system = BilinearSystem(SZ / 2, SX, (-1.0, 1.0))
    return Problem(system, Objective(basis_projector([1], 2)), KET0, ControlProgram.constant(horizon, n_steps, u0))


def three_level_problem(horizon=5.0, n_steps=200, u0=0.1):
    h0 = np.diag([0.0, 1.0, 2.2])
    h1 = np.array([[0, 1, 0], [1, 0, np.sqrt(2)], [0, np.sqrt(2), 0]])
    system = BilinearSystem(h0, h1, (-1.0, 1.0))
    return system, np.array([1, 0, 0], dtype=complex), ControlProgram.constant(horizon, n_steps, u0)


def arc_runs(mask, min_len=1):
    """Maximal runs ``(start, stop)`` of True entries with length >= min_len."""
    runs, start = [], None
    for i, m in enumerate(list(mask) + [False]):
        if m and start is None:
            start = i
        elif not m and start is not None:
            if i - start >= min_len:
                runs.append((start, i))
            start = None
    return runs


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance lines, printed in the terminal summary so they show without -s
ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
