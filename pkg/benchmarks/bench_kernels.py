#!/usr/bin/env python3
"""Compare the compiled and numpy kernel backends.

Each case is timed on both backends with the same inputs; the outputs
are compared too, so a speedup never hides a wrong answer.

    python benchmarks/bench_kernels.py [--repeat 20] [--out results.csv]
"""

import argparse
import csv
import sys
import time

import numpy as np

from cqmeta import kernels
from cqmeta.binary import Pencil
from cqmeta.channel import InputDistribution, bell_code_n, erase, erasure_mu0, p_mu_blocks, pw_blocks
from cqmeta.datasets import example1_problem
from cqmeta.herm import ABS_ZERO_TOL, REL_ZERO_TOL


def random_states(rng, d, M):
    out = []
    for _ in range(M):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        r = g @ g.conj().T
        out.append(r / np.trace(r).real)
    return out


def stats_case(n_qubits, M, eps):
    channel, code = bell_code_n(n_qubits, M)
    channel = erase(channel, eps)
    P = InputDistribution.from_code(code)
    pencil = Pencil(pw_blocks(P, channel), p_mu_blocks(P, erasure_mu0(2**n_qubits, eps)))
    t = 0.5 * pencil.breakpoints()[-1]
    args = (pencil._stacks0, pencil._stacks1, t, REL_ZERO_TOL, ABS_ZERO_TOL)
    return f"threshold_stats N={n_qubits} M={M} erasure", kernels.threshold_stats, args


def fixed_point_case(name, R, n_iter):
    M, d = R.shape[0], R.shape[1]
    pi = np.stack([np.eye(d, dtype=complex) / M] * M)
    args = (np.ascontiguousarray(R, dtype=complex), pi, n_iter, 1e-12, ABS_ZERO_TOL)
    return f"fixed_point {name} x{n_iter}", kernels.fixed_point, args


def cases():
    rng = np.random.default_rng(7)
    yield stats_case(2, 8, 0.2)
    yield stats_case(3, 24, 0.2)
    yield stats_case(4, 32, 0.2)
    yield fixed_point_case("example1", example1_problem().weighted, 100)
    R = np.stack(random_states(rng, 4, 5)) / 5
    yield fixed_point_case("random d=4 M=5", R, 100)
    channel, code = bell_code_n(3, 16)
    R = np.stack([channel[x] / code.M for x in code.codewords])
    yield fixed_point_case("bell N=3 M=16", R, 50)


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--out", help="also write the table as CSV")
    args = ap.parse_args(argv)

    if "cython" not in kernels.BACKENDS:
        print("compiled backend not built; only the numpy backend is available", file=sys.stderr)
        return 1
    rows = []
    previous = kernels.backend_name()
    try:
        for name, fn, fargs in cases():
            kernels.use_backend("python")
            t_py, out_py = best_time(fn, fargs, args.repeat)
            kernels.use_backend("cython")
            t_cy, out_cy = best_time(fn, fargs, args.repeat)
            diff = float(np.max(np.abs(np.asarray(out_py) - np.asarray(out_cy))))
            rows.append((name, t_py * 1e3, t_cy * 1e3, t_py / t_cy, diff))
    finally:
        kernels.use_backend(previous)

    print(f"{'case':<42}{'python ms':>11}{'cython ms':>11}{'speedup':>9}{'max diff':>11}")
    for name, tp, tc, sp, diff in rows:
        print(f"{name:<42}{tp:>11.3f}{tc:>11.3f}{sp:>9.2f}{diff:>11.1e}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "python_ms", "cython_ms", "speedup", "max_abs_diff"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
