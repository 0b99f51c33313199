"""Command-line front end.

Subcommands
-----------
example1     minimum error, optimal Lambda and both lower bounds for the
             four-state qubit example
figure1      spectral-bound curves over t (columns: t, objective_mu0star,
             objective_mu0avg)
bell-sweep   Bell codes over a noise grid (columns: family, n_qubits, M,
             param, pe_solver, pe_qp_formula, meta_converse, alpha_single,
             closed_form, status, max_deviation, error)
certify      quasi-perfect certificate for a channel/code descriptor pair
solve        optimal POVM and optimality report for an M-ary problem file

Exit codes: 0 success, 1 certification negative, 2 input error,
3 solver non-convergence.  ``CQMETA_THREADS`` caps the worker threads of
bell-sweep; rows are always written in grid order.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .binary import alpha_beta
from .channel import (
    InputDistribution,
    bell_code_n,
    code_problem,
    depolarize,
    erase,
    erasure_mu0,
    meta_converse,
    pe_of_code,
)
from .datasets import example1_average_state, example1_problem
from .descriptors import DescriptorError, build, complex_pairs, load_json, load_problem, parse_matrix
from .errors import ConvergenceError, DecoderUnavailableError, InvariantError, NotSymmetricError
from .mary import (
    error_probability,
    mu0_star,
    solve_optimal_povm,
    theorem1_value,
    tight_spectrum_argmax,
    tight_spectrum_breakpoints,
    tight_spectrum_objective,
)
from .qp import certify, qp_error_probability

SCHEMA = 1
EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NONCONVERGED = 0, 1, 2, 3
FIGURE1_T_MAX = 1.2
MU_SPECS = ("uniform", "average", "mu0star", "erasure")
FAMILIES = ("ideal", "depolarizing", "erasure")


def fmt(x):
    """12 significant digits; booleans and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return "" if x is None else str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(format(x, ".12g")) if math.isfinite(x) else str(x)
    return x


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json(obj):
    return json.dumps(_jsonable({"schema": SCHEMA, **obj}), indent=2) + "\n"


def _key_values(obj, fmt_name):
    if fmt_name == "json":
        return _json(obj)
    return _csv(["key", "value"], [(k, v) for k, v in obj.items() if not isinstance(v, (list, dict))])


def _threads():
    try:
        return max(1, int(os.environ.get("CQMETA_THREADS", "1")))
    except ValueError:
        return 1


def cmd_example1(args):
    problem = example1_problem()
    povm, report, iters = solve_optimal_povm(problem, tol=args.tol, strict=True)
    eps = error_probability(problem, povm)
    mu, c0 = mu0_star(problem, povm)
    avg = example1_average_state()
    ts_star, t_star = tight_spectrum_argmax(problem, mu)
    ts_avg, t_avg = tight_spectrum_argmax(problem, avg)
    obj = {
        "epsilon_star": eps,
        "hykl_passed": report.passed,
        "hykl_max_residual": report.max_residual,
        "iterations": iters,
        "c0_star": c0,
        "mu0_star_00": mu[0, 0].real,
        "mu0_star_01_re": mu[0, 1].real,
        "mu0_star_01_im": mu[0, 1].imag,
        "mu0_star_11": mu[1, 1].real,
        "alpha_mu0_star": theorem1_value(problem, mu),
        "alpha_avg_state": theorem1_value(problem, avg),
        "tight_spectrum_mu0_star": ts_star,
        "tight_spectrum_mu0_star_t": t_star,
        "tight_spectrum_avg_state": ts_avg,
        "tight_spectrum_avg_state_t": t_avg,
    }
    _emit(_key_values(obj, args.format), args.out)
    return EXIT_OK


def figure1_rows(steps):
    problem = example1_problem()
    povm, _, _ = solve_optimal_povm(problem, strict=True)
    mu, _ = mu0_star(problem, povm)
    avg = example1_average_state()
    ts = set(np.linspace(0.0, FIGURE1_T_MAX, steps).tolist())
    for m in (mu, avg):
        ts.update(t for t in tight_spectrum_breakpoints(problem, m) if t <= FIGURE1_T_MAX)
    merged = []
    for t in sorted(ts):
        if not merged or t - merged[-1] > 1e-9:
            merged.append(t)
    return [
        (t, tight_spectrum_objective(problem, mu, t), tight_spectrum_objective(problem, avg, t))
        for t in merged
    ]


def cmd_figure1(args):
    if args.grid < 2:
        raise DescriptorError("figure1 needs --grid >= 2")
    rows = figure1_rows(args.grid)
    header = ["t", "objective_mu0star", "objective_mu0avg"]
    if args.format == "json":
        _emit(_json({"columns": header, "rows": rows}), args.out)
    else:
        _emit(_csv(header, rows), args.out)
    return EXIT_OK


def closed_form(family, n_qubits, M, param):
    d = 2**n_qubits
    if family == "ideal":
        return 1.0 - d / M
    return 1.0 - (d * (1.0 - param) + param) / M


def bell_row(family, n_qubits, M, param, tol=1e-8):
    """One bell-sweep row; parameter errors are reported in the ``error`` column."""
    base = [family, n_qubits, M, param]
    try:
        channel, code = bell_code_n(n_qubits, M)
        d = 2**n_qubits
        if family == "depolarizing":
            channel, mu = depolarize(channel, param), np.eye(d) / d
        elif family == "erasure":
            channel, mu = erase(channel, param), erasure_mu0(d, param)
        else:
            mu = np.eye(d) / d
        pe, _ = pe_of_code(channel, code, tol=tol)
        cert = certify(channel, code, mu)
        qp = qp_error_probability(channel, code, cert.t_bar, mu)
        mc = meta_converse(channel, InputDistribution.from_code(code), mu, M)
        single = alpha_beta(channel[code.codewords[0]], mu, 1.0 / M)[0]
        ref = closed_form(family, n_qubits, M, param)
        dev = max(abs(v - ref) for v in (pe, qp, mc, single))
        return base + [pe, qp, mc, single, ref, cert.status, dev, ""]
    except (ValueError, ConvergenceError, NotSymmetricError) as exc:
        return base + [None] * 7 + [str(exc)]


BELL_COLUMNS = [
    "family", "n_qubits", "M", "param", "pe_solver", "pe_qp_formula", "meta_converse",
    "alpha_single", "closed_form", "status", "max_deviation", "error",
]


def _parse_list(text, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise DescriptorError(f"cannot parse list {text!r}") from exc


def _param_grid(args):
    if args.family == "ideal":
        return [0.0]
    if args.params:
        return _parse_list(args.params, float)
    return np.linspace(0.0, args.param_max, args.grid).tolist()


def cmd_bell_sweep(args):
    Ms = _parse_list(args.M, int)
    grid = [(m, p) for m in Ms for p in _param_grid(args)]
    jobs = [(args.family, args.n_qubits, m, p, args.tol) for m, p in grid]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda j: bell_row(*j), jobs))
    if args.format == "json":
        _emit(_json({"columns": BELL_COLUMNS, "rows": rows}), args.out)
    else:
        _emit(_csv(BELL_COLUMNS, rows), args.out)
    return EXIT_OK if all(r[-1] == "" for r in rows) else EXIT_INPUT


def resolve_mu(spec, channel, code, tol=1e-8):
    """Auxiliary state from a name in MU_SPECS or a path to a JSON matrix."""
    d = channel.output_dim
    if spec == "uniform":
        return np.eye(d) / d
    if spec == "average":
        return sum(channel[x] for x in code.codewords) / code.M
    if spec == "mu0star":
        povm, _, _ = solve_optimal_povm(code_problem(channel, code), tol=tol, strict=True)
        return mu0_star(code_problem(channel, code), povm)[0]
    if spec == "erasure":
        # the flag weight of any output is the erasure probability
        eps = float(next(iter(channel.outputs.values()))[-1, -1].real)
        return erasure_mu0(d - 1, eps)
    desc = load_json(spec)
    return parse_matrix(desc["matrix"] if isinstance(desc, dict) else desc)


def cmd_certify(args):
    if not args.channel or not args.code:
        raise DescriptorError("certify needs --channel and --code")
    channel, code = build(load_json(args.channel), load_json(args.code))
    mu = resolve_mu(args.mu, channel, code, args.tol)
    cert = certify(channel, code, mu)
    obj = cert.to_dict()
    obj["M"] = code.M
    if args.format == "json":
        _emit(_json(obj), args.out)
    else:
        _emit(_key_values(obj, "csv"), args.out)
    return EXIT_OK if cert.status != "neither" else EXIT_NEGATIVE


def cmd_solve(args):
    if args.problem:
        problem = load_problem(args.problem)
    elif args.channel and args.code:
        channel, code = build(load_json(args.channel), load_json(args.code))
        problem = code_problem(channel, code)
    else:
        raise DescriptorError("solve needs a problem file or --channel and --code")
    povm, report, iters = solve_optimal_povm(problem, tol=args.tol)
    obj = {
        "epsilon": error_probability(problem, povm),
        "iterations": iters,
        "hykl_passed": report.passed,
        "hykl_max_residual": report.max_residual,
        "self_adjoint_residual": report.self_adjoint_residual,
        "stationarity_residuals": list(report.stationarity_residuals),
        "psd_residuals": list(report.psd_residuals),
        "povm": [complex_pairs(e) for e in povm.elements],
    }
    _emit(_key_values(obj, args.format), args.out)
    return EXIT_OK if report.passed else EXIT_NONCONVERGED


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cqmeta",
        description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, fmt, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--out", help="write output here instead of stdout")
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--tol", type=float, default=1e-8, help="optimality tolerance")
        return p

    p = command("example1", "csv", help="four-state qubit example")
    p.set_defaults(func=cmd_example1)

    p = command("figure1", "csv", help="spectral-bound curves")
    p.add_argument("--grid", type=int, default=121, help="number of evenly spaced t values")
    p.set_defaults(func=cmd_figure1)

    p = command("bell-sweep", "csv", aliases=["bell_sweep"], help="Bell code sweep")
    p.add_argument("--family", choices=FAMILIES, default="ideal")
    p.add_argument("--n-qubits", type=int, default=2)
    p.add_argument("--M", default="4,8", help="comma-separated code sizes")
    p.add_argument("--params", help="comma-separated noise parameters")
    p.add_argument("--grid", type=int, default=5, help="grid steps on [0, --param-max]")
    p.add_argument("--param-max", type=float, default=0.9)
    p.set_defaults(func=cmd_bell_sweep)

    p = command("certify", "json", help="quasi-perfect certificate")
    p.add_argument("--channel", help="channel descriptor (JSON)")
    p.add_argument("--code", help="code descriptor (JSON)")
    p.add_argument("--mu", default="uniform", help=f"one of {MU_SPECS} or a JSON matrix file")
    p.set_defaults(func=cmd_certify)

    p = command("solve", "json", help="optimal POVM for an M-ary problem")
    p.add_argument("problem", nargs="?", help='problem file {"states": [...], "priors": [...]}')
    p.add_argument("--channel", help="channel descriptor (JSON)")
    p.add_argument("--code", help="code descriptor (JSON)")
    p.set_defaults(func=cmd_solve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DescriptorError, InvariantError, KeyError) as exc:
        print(f"cqmeta: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"cqmeta: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (NotSymmetricError, DecoderUnavailableError) as exc:
        print(f"cqmeta: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    sys.exit(main())
