import copy
import csv
import json

import numpy as np
import pytest

from qimprove import basis_projector
from qimprove.cli import comparison_table, main
from qimprove.driver import ROW_FIELDS, RunResult
from qimprove.errors import ParseError, ValidationError
from qimprove.krotov import SingularPolicy
from qimprove.problem import load_problem, parse_problem

BASE = {
    "schema": 1,
    "dim": 2,
    "h0_re": [[0, 0], [0, 0]],
    "h1_re": [[0, 1], [1, 0]],
    "psi0_re": [1, 0],
    "objective": {"target_state_indices": [1]},
    "control": {"a": 0, "b": 1, "T": np.pi, "N": 10, "init": {"type": "constant", "value": 0.1}},
    "method": "krotov",
    "iterations": 5,
}


def problem(**changes):
    data = copy.deepcopy(BASE)
    for key, value in changes.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    return data


def with_objective(obj):
    data = problem()
    data["objective"] = obj
    return data


def write(tmp_path, data, name="prob.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_defaults():
    bundle = load_problem(problem())
    p = bundle.problem
    assert p.objective.beta == 0.0 and bundle.energy_cap is None
    assert bundle.config.iterations == 5
    assert bundle.config.singular.policy is SingularPolicy.STAY_UNTIL_SATURATION
    assert bundle.config.singular.k1_tol is None
    np.testing.assert_array_equal(p.control.values, 0.1)
    np.testing.assert_array_equal(p.objective.terminal_op, basis_projector([1], 2))


def test_complement_flag():
    bundle = load_problem(problem(objective={"complement": True}))
    np.testing.assert_array_equal(bundle.problem.objective.terminal_op, basis_projector([0], 2))


def test_explicit_operator_with_imaginary_part():
    obj = {"L_re": [[0.5, 0], [0, 0.5]], "L_im": [[0, 0.5], [-0.5, 0]]}
    bundle = load_problem(with_objective(obj))
    assert bundle.problem.objective.terminal_op[0, 1] == 0.5j


def test_random_init_is_seeded():
    init = {"type": "random", "seed": 7, "amplitude": 0.5}
    first = load_problem(problem(control={"init": init}))
    second = load_problem(problem(control={"init": init}))
    np.testing.assert_array_equal(first.problem.control.values, second.problem.control.values)
    assert first.seed == 7
    assert np.all(first.problem.control.values <= 0.5)


@pytest.mark.parametrize(
    "changes, field",
    [
        ({"psi0_re": [0.5, 0]}, "psi0"),
        ({"h1_re": [[0, 1], [0, 0]]}, "h1"),
        ({"control": {"a": 1, "b": 0}}, "control.a"),
        ({"control": {"N": 0}}, "control.N"),
        ({"control": {"init": {"type": "constant", "value": 2.0}}}, "control.init"),
        ({"objective": {"beta": -1.0}}, "beta"),
        ({"objective": {"energy_cap": 0}}, "objective.energy_cap"),
        ({"objective": {"target_state_indices": [2]}}, "objective.target_state_indices"),
        ({"method": "newton"}, "method"),
        ({"singular": {"policy": "sideways"}}, "singular.policy"),
    ],
)
def test_validation_errors_name_field(changes, field):
    with pytest.raises(ValidationError) as info:
        load_problem(problem(**changes))
    assert field in (info.value.field or "") or field in str(info.value)


def test_psi0_message():
    with pytest.raises(ValidationError, match="psi0 not normalized"):
        load_problem(problem(psi0_re=[0.5, 0]))


def test_complement_requires_projector():
    with pytest.raises(ValueError):
        load_problem(with_objective({"L_re": [[0.5, 0], [0, 0]], "complement": True}))


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        parse_problem(bad)
    with pytest.raises(ParseError):
        parse_problem(tmp_path / "missing.json")
    with pytest.raises(ParseError):
        load_problem({k: v for k, v in BASE.items() if k != "dim"})


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_optimize_outputs(tmp_path, capsys):
    path = write(tmp_path, problem())
    assert main(["optimize", str(path), "--out", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["exit_status"] == 0 and report["method"] == "krotov"
    assert report["iterations"][-1]["I"] <= -0.999
    assert set(report["header"]) == {"timestamp", "version"}
    rows = read_csv(tmp_path / "out" / "convergence.csv")
    assert rows[0] == list(ROW_FIELDS)
    assert len(rows) == len(report["iterations"]) + 1


def test_zero_iterations(tmp_path):
    path = write(tmp_path, problem(iterations=0))
    assert main(["optimize", str(path), "--out", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert len(report["iterations"]) == 1
    assert report["final_control"] == [0.1] * 10


def test_deterministic_modulo_header(tmp_path):
    path = write(tmp_path, problem(method="gradient", control={"init": {"type": "random", "seed": 3}}))
    reports = []
    for name in ("a", "b"):
        assert main(["optimize", str(path), "--out", str(tmp_path / name)]) == 0
        report = json.loads((tmp_path / name / "report.json").read_text())
        report.pop("header")
        reports.append(report)
    assert reports[0] == reports[1]
    assert (tmp_path / "a" / "convergence.csv").read_text() == (tmp_path / "b" / "convergence.csv").read_text()


def test_invalid_input_exit_code(tmp_path, capsys):
    path = write(tmp_path, problem(psi0_re=[0.5, 0]))
    assert main(["optimize", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "psi0" in capsys.readouterr().err
    assert main(["check", str(write(tmp_path, with_objective({"L_re": [[-1, 0], [0, 0]]}), "neg.json"))]) == 2


def test_no_improvement_exit_code(tmp_path):
    # one enormous trial step saturates the control at u = 1, which undoes the transfer
    data = problem(method="gradient", line_search={"eps0": 1e6, "max_trials": 1})
    out = tmp_path / "out"
    assert main(["optimize", str(write(tmp_path, data)), "--out", str(out)]) == 3
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "no_improvement" and report["exit_status"] == 3


def test_oracle_budget_exit_code(tmp_path):
    path = write(tmp_path, problem(control={"N": 30}))
    assert main(["oracle", str(path), "--out", str(tmp_path / "o")]) == 5


def test_oracle_single_level(tmp_path):
    path = write(tmp_path, problem())
    assert main(["oracle", str(path), "--levels", "0", "--out", str(tmp_path / "o")]) == 0
    payload = json.loads((tmp_path / "o" / "oracle.json").read_text())
    assert payload["best_control"] == [0.0] * 10
    assert payload["best_J"] == 0.0 and payload["n_optimal"] == 1


def test_oracle_gap_against_report(tmp_path):
    path = write(tmp_path, problem())
    main(["optimize", str(path), "--out", str(tmp_path / "k")])
    assert main(["oracle", str(path), "--report", str(tmp_path / "k" / "report.json"), "--out", str(tmp_path / "o")]) == 0
    payload = json.loads((tmp_path / "o" / "oracle.json").read_text())
    assert payload["best_J"] == pytest.approx(-1.0, abs=1e-12)
    assert abs(payload["gap"]) <= 1e-6


def test_compare_and_method_both(tmp_path, capsys):
    data = problem(method="both", objective={"beta": 0.01}, control={"init": {"type": "constant", "value": 0.05}}, iterations=20)
    path = write(tmp_path, data)
    assert main(["optimize", str(path), "--out", str(tmp_path / "both")]) == 0
    table = json.loads((tmp_path / "both" / "comparison.json").read_text())["table"]
    assert [row["method"] for row in table] == ["krotov", "gradient"]
    assert (tmp_path / "both" / "krotov" / "report.json").exists()
    assert main(["compare", str(path), "--out", str(tmp_path / "cmp")]) == 0
    assert "to 90%" in capsys.readouterr().out


def test_comparison_table_target():
    rows_a = [{"iter": 0, "J": 0.0}, {"iter": 1, "J": -0.95}, {"iter": 2, "J": -1.0}]
    rows_b = [{"iter": 0, "J": 0.0}, {"iter": 1, "J": -0.5}, {"iter": 2, "J": -0.8}]
    table = comparison_table({
        "krotov": RunResult("krotov", None, rows_a, "converged"),
        "gradient": RunResult("gradient", None, rows_b, "max_iterations"),
    })
    assert table[0]["iterations_to_90pct"] == 1
    assert table[1]["iterations_to_90pct"] is None


def test_trace_controls_and_refine_flag(tmp_path):
    path = write(tmp_path, problem(iterations=2))
    out = tmp_path / "out"
    assert main(["optimize", str(path), "--out", str(out), "--trace-controls", "--refine-on-failure"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["control_traces"]) == len(report["iterations"])


def test_energy_cap_reports_beta(tmp_path):
    path = write(tmp_path, problem(objective={"energy_cap": 0.5}, iterations=60, stop={"J_tol": 1e-12}))
    out = tmp_path / "out"
    assert main(["optimize", str(path), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["beta_star"] > 0
    assert abs(report["z_T"] - 0.5) <= 1e-3 * 0.5
    assert report["bracket_history"]


def test_check_command(tmp_path, capsys):
    assert main(["check", str(write(tmp_path, problem()))]) == 0
    out = capsys.readouterr().out
    assert "initial I=" in out and "PSD: True" in out
