import numpy as np
import pytest

from qimprove import RunConfig, optimize_with_cap
from qimprove.errors import ValidationError

from conftest import pulse_area_problem

FAST = RunConfig(iterations=60, J_tol=1e-12)


def test_inactive_when_cap_exceeds_max_energy():
    p = pulse_area_problem()
    out = optimize_with_cap(p, np.pi * 1.0**2, config=FAST)
    assert out.status == "inactive" and out.beta_star == 0.0
    assert out.result.I <= -0.999
    assert len(out.bracket_history) == 1


def test_met_cap():
    p = pulse_area_problem()
    cap = 0.5
    out = optimize_with_cap(p, cap, config=FAST)
    assert out.status == "met" and out.beta_star > 0
    assert abs(out.z_T - cap) <= 1e-3 * cap
    assert out.control.is_feasible(p.system.bounds)


def test_energy_decreases_with_beta():
    out = optimize_with_cap(pulse_area_problem(), 0.5, config=FAST)
    ordered = sorted(out.bracket_history)
    z = [zt for _, zt in ordered]
    assert all(z2 <= z1 + 1e-6 for z1, z2 in zip(z, z[1:]))


def test_small_cap_drives_control_toward_zero():
    cap = 1e-2
    out = optimize_with_cap(pulse_area_problem(), cap, config=FAST)
    assert abs(out.z_T - cap) <= 1e-3 * cap
    # z(T) = sum u_k^2 dt <= cap bounds a near-uniform control by sqrt(cap / T)
    assert np.max(out.control.values) <= 2 * np.sqrt(cap / np.pi)


def test_rejects_nonpositive_cap():
    with pytest.raises(ValidationError):
        optimize_with_cap(pulse_area_problem(), 0.0)
