"""Command line entry point: ``qimprove optimize|compare|oracle|check``.

Exit codes: 0 success, 2 invalid input, 3 monotonicity failure or no
improvement, 4 bracket failure in the energy-budget loop, 5 oracle budget
exceeded.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .budget import InnerFailure, optimize_with_cap
from .driver import ROW_FIELDS, iterations_to_fraction, run
from .dynamics import energy_integral, propagate_backward
from .errors import BracketFailure, BudgetExceeded, ParseError, ValidationError
from .krotov import check_terminal_nonsingular
from .objectives import evaluate
from .oracle import brute_force_bang_bang
from .problem import SCHEMA_VERSION, parse_problem

EXIT_OK, EXIT_INVALID, EXIT_IMPROVER, EXIT_BRACKET, EXIT_BUDGET = 0, 2, 3, 4, 5

log = logging.getLogger("qimprove")


def _header():
    return {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(), "version": __version__}


def _write_json(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_convergence_csv(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROW_FIELDS)
        for row in rows:
            writer.writerow([row[k] for k in ROW_FIELDS])


def _exit_for(result):
    return EXIT_OK if result.ok else EXIT_IMPROVER


def _report(bundle, result, exit_status, **extra):
    payload = {
        "header": _header(),
        "schema": SCHEMA_VERSION,
        "config_echo": bundle.echo,
        "method": result.method,
        "status": result.status,
        "message": result.message,
        "seed": bundle.seed,
        "iterations": result.rows,
        "final_control": result.control.values.tolist(),
        "damping_events": [list(e) for e in result.damping_events],
        "exit_status": exit_status,
    }
    if result.traces:
        payload["control_traces"] = result.traces
    payload.update(extra)
    return payload


def _run_one(bundle, method, out_dir):
    problem, config = bundle.problem, bundle.config
    if bundle.energy_cap is not None:
        try:
            br = optimize_with_cap(problem, bundle.energy_cap, method, config)
        except BracketFailure as exc:
            _write_json(out_dir / "report.json", {
                "header": _header(), "schema": SCHEMA_VERSION, "config_echo": bundle.echo,
                "method": method, "status": "bracket_failure", "message": str(exc),
                "bracket_history": exc.history, "exit_status": EXIT_BRACKET,
            })
            print(f"{method}: bracket failure: {exc}", file=sys.stderr)
            return EXIT_BRACKET, None
        except InnerFailure as exc:
            result = exc.result
            code = EXIT_IMPROVER
            _write_json(out_dir / "report.json", _report(bundle, result, code))
            write_convergence_csv(out_dir / "convergence.csv", result.rows)
            print(f"{method}: {exc}", file=sys.stderr)
            return code, result
        result = br.result
        code = _exit_for(result)
        payload = _report(bundle, result, code, beta_star=br.beta_star, z_T=br.z_T,
                          budget_status=br.status, bracket_history=br.bracket_history)
    else:
        result = run(problem, method, config)
        code = _exit_for(result)
        payload = _report(bundle, result, code)
    _write_json(out_dir / "report.json", payload)
    write_convergence_csv(out_dir / "convergence.csv", result.rows)
    status = f"{method}: {result.status}, iterations={len(result.rows) - 1}, I={result.I:.12g}, J={result.J:.12g}"
    print(status if code == EXIT_OK else f"{status} ({result.message})")
    return code, result


def comparison_table(results, fraction=0.9):
    """Iterations each method needs to reach ``fraction`` of the best final
    improvement over both runs."""
    target = min(r.J for r in results.values())
    table = []
    for method, r in results.items():
        table.append({
            "method": method,
            "J_initial": r.rows[0]["J"],
            "J_final": r.J,
            "iterations": len(r.rows) - 1,
            "iterations_to_90pct": iterations_to_fraction(r.rows, target, fraction),
            "status": r.status,
        })
    return table


def _print_table(table):
    print(f"{'method':<10}{'J_initial':>14}{'J_final':>14}{'iters':>7}{'to 90%':>8}  status")
    for row in table:
        reach = "-" if row["iterations_to_90pct"] is None else str(row["iterations_to_90pct"])
        print(f"{row['method']:<10}{row['J_initial']:>14.8f}{row['J_final']:>14.8f}"
              f"{row['iterations']:>7}{reach:>8}  {row['status']}")


def _out_dir(args):
    return Path(args.out) if args.out else Path(Path(args.file).stem + "_out")


def _compare(bundle, out_dir):
    results = {}
    codes = []
    for method in ("krotov", "gradient"):
        code, result = _run_one(bundle, method, out_dir / method)
        codes.append(code)
        if result is not None:
            results[method] = result
    if len(results) == 2:
        table = comparison_table(results)
        _print_table(table)
        _write_json(out_dir / "comparison.json", {"header": _header(), "schema": SCHEMA_VERSION, "table": table})
    return max(codes)


def cmd_optimize(args):
    bundle = parse_problem(args.file)
    config = replace(bundle.config, trace_controls=args.trace_controls, refine_on_failure=args.refine_on_failure)
    bundle.config = config
    out_dir = _out_dir(args)
    if bundle.method == "both":
        return _compare(bundle, out_dir)
    code, _ = _run_one(bundle, bundle.method, out_dir)
    return code


def cmd_compare(args):
    bundle = parse_problem(args.file)
    return _compare(bundle, _out_dir(args))


def cmd_oracle(args):
    bundle = parse_problem(args.file)
    problem = bundle.problem
    levels = args.levels if args.levels else list(problem.system.bounds)
    n_steps = args.n if args.n else problem.control.n_steps
    try:
        res = brute_force_bang_bang(problem.system, problem.objective, problem.psi0,
                                    problem.control.horizon, n_steps, levels)
    except BudgetExceeded as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    payload = {
        "header": _header(),
        "schema": SCHEMA_VERSION,
        "config_echo": bundle.echo,
        "levels": sorted(float(x) for x in levels),
        "n_steps": n_steps,
        "best_control": res.control.values.tolist(),
        "best_J": res.J,
        "n_optimal": res.n_optimal,
        "exit_status": EXIT_OK,
    }
    print(f"oracle: best J={res.J:.12g}, optima={res.n_optimal}, control={res.control.values.tolist()}")
    if args.report:
        method_report = json.loads(Path(args.report).read_text())
        j_method = method_report["iterations"][-1]["J"]
        payload["J_method"] = j_method
        payload["gap"] = j_method - res.J
        print(f"gap J_method - J_oracle = {payload['gap']:.3e}")
    _write_json(_out_dir(args) / "oracle.json", payload)
    return EXIT_OK


def cmd_check(args):
    bundle = parse_problem(args.file)
    p = bundle.problem
    i0, j0, traj = evaluate(p.system, p.objective, p.control, p.psi0)
    adj = propagate_backward(p.system, p.control, p.objective.terminal_op @ traj.final)
    k1_tol = bundle.config.singular.resolve_k1_tol(p.system, p.objective.terminal_op)
    warning = check_terminal_nonsingular(adj.states[-1], traj.final, p.system, k1_tol)
    psd = p.objective.is_psd()
    print(f"dim={p.system.dim} N={p.control.n_steps} T={p.control.horizon:g} bounds={list(p.system.bounds)}")
    print(f"initial I={i0:.12g} J={j0:.12g} energy={energy_integral(p.control):.12g}")
    print(f"max norm drift={traj.max_norm_drift:.3e}")
    print(f"terminal operator PSD: {psd}")
    if not psd and bundle.method in ("krotov", "both"):
        print("error: krotov requires a positive semidefinite terminal operator", file=sys.stderr)
        return EXIT_INVALID
    if warning:
        print(f"warning: {warning}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="qimprove", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run the configured improver(s)")
    p.add_argument("file")
    p.add_argument("--out")
    p.add_argument("--trace-controls", action="store_true", help="store the control after every iteration")
    p.add_argument("--refine-on-failure", action="store_true", help="double N when damping cannot restore monotonicity")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="run both methods and tabulate convergence")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="exhaustive search over level sequences")
    p.add_argument("file")
    p.add_argument("--levels", type=float, nargs="+")
    p.add_argument("--n", type=int)
    p.add_argument("--report", help="optimize report.json to compare against")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("check", help="validate a problem file and print diagnostics")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        field = getattr(exc, "field", None)
        print(f"invalid problem{f' ({field})' if field else ''}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
