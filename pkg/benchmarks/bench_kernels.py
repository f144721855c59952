"""Numba kernels against their numpy twins.

Times each kernel in-process, then times one end-to-end IRWA solve twice in
fresh interpreters, once with EXACTPEN_DISABLE_NUMBA set so the whole
package runs on the numpy path.

    python3 benchmarks/bench_kernels.py [--repeat 50] [--nnz 200000]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from exactpen import _kernels

SOLVE_SNIPPET = """
import time
from exactpen import _kernels
from exactpen.bench.generators import gen_l1svm
from exactpen.bench.io import problem_from_dict
from exactpen.bench.solvers import build_solver, family_params
doc = gen_l1svm(0, 0)
p = problem_from_dict(doc)
solve = build_solver("irwa-eqineq", family_params(doc, "irwa-eqineq"), track_dual=False)
solve(p)  # compile and warm caches
t0 = time.perf_counter()
rep = solve(p)
print(_kernels.backend(), time.perf_counter() - t0, rep.iterations)
"""


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_table(nnz, repeat):
    rng = np.random.default_rng(0)
    n = max(nnz // 20, 1)
    rows = rng.integers(0, n, nnz)
    cols = rng.integers(0, n, nnz)
    vals = rng.standard_normal(nnz)
    x = rng.standard_normal(n)
    offsets = np.concatenate([[0], np.sort(rng.choice(np.arange(1, nnz), n - 1, replace=False)), [nnz]])
    v, w = rng.standard_normal(nnz), rng.standard_normal(nnz)
    cases = {
        "coo_matvec": (rows, cols, vals, x, n),
        "coo_rmatvec": (rows, cols, vals, x, n),
        "segment_norms": (v, offsets),
        "segment_dots": (v, w, offsets),
    }
    print(f"{'kernel':<15}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}")
    for name, args in cases.items():
        ref = getattr(_kernels, f"{name}_numpy")
        t_np = best_of(lambda: ref(*args), repeat)
        if not _kernels.HAVE_NUMBA:
            print(f"{name:<15}{t_np * 1e3:11.3f}{'n/a':>11}{'':>9}")
            continue
        fast = getattr(_kernels, f"{name}_numba")
        fast(*args)  # compile
        if not np.allclose(fast(*args), ref(*args), rtol=1e-12, atol=1e-12):
            raise SystemExit(f"{name}: numba and numpy disagree")
        t_nb = best_of(lambda: fast(*args), repeat)
        print(f"{name:<15}{t_np * 1e3:11.3f}{t_nb * 1e3:11.3f}{t_np / t_nb:8.1f}x")


def end_to_end():
    print("\nIRWA on the default SVM instance (fresh process per backend)")
    for disable in ("0", "1"):
        env = dict(os.environ, EXACTPEN_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:<6} {float(out[1]):.3f} s  ({out[2]} iterations)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--nnz", type=int, default=200_000)
    args = ap.parse_args()
    print(f"active backend: {_kernels.backend()}\n")
    kernel_table(args.nnz, args.repeat)
    end_to_end()


if __name__ == "__main__":
    main()
