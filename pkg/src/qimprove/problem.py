"""JSON problem files.

Complex arrays are stored as separate ``*_re`` / ``*_im`` real arrays; the
imaginary part may be omitted.  Example::

    {
      "schema": 1,
      "dim": 2,
      "h0_re": [[0, 0], [0, 0]],
      "h1_re": [[0, 1], [1, 0]],
      "psi0_re": [1, 0],
      "objective": {"target_state_indices": [1], "beta": 0.0},
      "control": {"a": 0, "b": 1, "T": 3.141592653589793, "N": 10,
                  "init": {"type": "constant", "value": 0.1}},
      "method": "krotov",
      "iterations": 20
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .driver import METHODS, Problem, RunConfig
from .dynamics import ControlProgram, TOL_PSI0
from .errors import ParseError, ValidationError
from .gradient import LineSearchConfig
from .krotov import SingularConfig, SingularPolicy
from .objectives import Objective, basis_projector, complement
from .operators import BilinearSystem

SCHEMA_VERSION = 1


@dataclass
class ProblemBundle:
    problem: Problem
    method: str  # krotov | gradient | both
    config: RunConfig
    energy_cap: Optional[float]
    seed: Optional[int]
    echo: dict  # the parsed file, for report headers


def _get(d, key, field, kind=None, default=...):
    if key not in d:
        if default is ...:
            raise ParseError(f"missing field {field!r}", field)
        return default
    value = d[key]
    if kind is not None and not isinstance(value, kind):
        raise ParseError(f"field {field!r} has the wrong type", field)
    return value


def _real_array(d, key, field, shape):
    raw = _get(d, key, field)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {field!r} is not a numeric array", field) from exc
    if arr.shape != shape:
        raise ValidationError(f"field {field!r} has shape {arr.shape}, expected {shape}", field)
    return arr


def _complex_array(d, stem, shape):
    re = _real_array(d, stem + "_re", stem + "_re", shape)
    im = _real_array(d, stem + "_im", stem + "_im", shape) if stem + "_im" in d else 0.0
    return re + 1j * im


def _positive(value, field):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ValidationError(f"field {field!r} must be a positive number", field)
    return float(value)


def _initial_control(block, a, b, horizon, n_steps):
    init = _get(block, "init", "control.init", dict, {"type": "constant", "value": 0.0})
    kind = _get(init, "type", "control.init.type", str)
    seed = None
    if kind == "constant":
        value = float(_get(init, "value", "control.init.value", (int, float)))
        values = np.full(n_steps, value)
    elif kind == "random":
        seed = int(_get(init, "seed", "control.init.seed", int))
        amplitude = float(_get(init, "amplitude", "control.init.amplitude", (int, float), 1.0))
        if not 0 < amplitude <= 1:
            raise ValidationError("control.init.amplitude must lie in (0, 1]", "control.init.amplitude")
        rng = np.random.default_rng(seed)
        values = a + amplitude * (b - a) * rng.random(n_steps)
    elif kind == "provided":
        values = np.asarray(_get(init, "values", "control.init.values", list), dtype=float)
        if values.shape != (n_steps,):
            raise ValidationError(f"control.init.values needs {n_steps} entries", "control.init.values")
    else:
        raise ParseError(f"unknown control.init.type {kind!r}", "control.init.type")
    if np.any(values < a) or np.any(values > b):
        raise ValidationError("initial control violates [a, b]", "control.init")
    return ControlProgram(horizon, values), seed


def load_problem(data: dict[str, Any]) -> ProblemBundle:
    """Validate a decoded problem file and build the run bundle."""
    if not isinstance(data, dict):
        raise ParseError("problem file must hold a JSON object")
    schema = _get(data, "schema", "schema", int, SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema {schema}", "schema")
    n = _get(data, "dim", "dim", int)
    if n < 1:
        raise ValidationError("dim must be >= 1", "dim")

    h0 = _complex_array(data, "h0", (n, n))
    h1 = _complex_array(data, "h1", (n, n))
    psi0 = _complex_array(data, "psi0", (n,))
    if abs(np.vdot(psi0, psi0).real - 1.0) > TOL_PSI0:
        raise ValidationError("psi0 not normalized", "psi0")

    ctrl = _get(data, "control", "control", dict)
    a = float(_get(ctrl, "a", "control.a", (int, float)))
    b = float(_get(ctrl, "b", "control.b", (int, float)))
    if not a < b:
        raise ValidationError(f"control bounds need a < b, got [{a}, {b}]", "control.a")
    horizon = _positive(_get(ctrl, "T", "control.T"), "control.T")
    n_steps = _get(ctrl, "N", "control.N", int)
    if n_steps < 1:
        raise ValidationError("control.N must be >= 1", "control.N")
    system = BilinearSystem(h0, h1, (a, b))
    control, seed = _initial_control(ctrl, a, b, horizon, n_steps)

    obj = _get(data, "objective", "objective", dict)
    if "target_state_indices" in obj:
        idx = _get(obj, "target_state_indices", "objective.target_state_indices", list)
        if any(not isinstance(i, int) or not 0 <= i < n for i in idx):
            raise ValidationError("target index out of range", "objective.target_state_indices")
        L = basis_projector(idx, n)
    elif "L_re" in obj:
        L = _complex_array(obj, "L", (n, n))
    else:
        raise ParseError("objective needs target_state_indices or L_re", "objective")
    if _get(obj, "complement", "objective.complement", bool, False):
        L = complement(L)
    beta = float(_get(obj, "beta", "objective.beta", (int, float), 0.0))
    cap = _get(obj, "energy_cap", "objective.energy_cap", (int, float, type(None)), None)
    if cap is not None:
        cap = _positive(cap, "objective.energy_cap")
    objective = Objective(L, beta, cap)

    method = _get(data, "method", "method", str, "krotov")
    if method not in METHODS + ("both",):
        raise ValidationError(f"unknown method {method!r}", "method")
    iterations = _get(data, "iterations", "iterations", int, 100)
    if iterations < 0:
        raise ValidationError("iterations must be >= 0", "iterations")
    stop = _get(data, "stop", "stop", dict, {})
    J_tol = _positive(_get(stop, "J_tol", "stop.J_tol", default=1e-10), "stop.J_tol")
    grad_tol = _positive(_get(stop, "grad_tol", "stop.grad_tol", default=1e-8), "stop.grad_tol")
    sing = _get(data, "singular", "singular", dict, {})
    k1_tol = _get(sing, "k1_tol", "singular.k1_tol", default=None)
    if k1_tol is not None:
        k1_tol = _positive(k1_tol, "singular.k1_tol")
    denom_tol = _positive(_get(sing, "denom_tol", "singular.denom_tol", default=1e-12), "singular.denom_tol")
    policy = _get(sing, "policy", "singular.policy", str, SingularPolicy.STAY_UNTIL_SATURATION.value)
    try:
        policy = SingularPolicy(policy)
    except ValueError as exc:
        raise ValidationError(f"unknown singular policy {policy!r}", "singular.policy") from exc
    ls = _get(data, "line_search", "line_search", dict, {})
    line_search = LineSearchConfig(
        eps0=_positive(_get(ls, "eps0", "line_search.eps0", default=1.0), "line_search.eps0"),
        shrink=float(_get(ls, "shrink", "line_search.shrink", (int, float), 0.5)),
        max_trials=_get(ls, "max_trials", "line_search.max_trials", int, 30),
    )
    config = RunConfig(
        iterations=iterations,
        J_tol=J_tol,
        grad_tol=grad_tol,
        singular=SingularConfig(k1_tol, denom_tol, policy),
        line_search=line_search,
    )
    return ProblemBundle(Problem(system, objective, psi0, control), method, config, cap, seed, data)


def parse_problem(path) -> ProblemBundle:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return load_problem(data)
