"""Compare the compiled and pure-Python eigensolver kernels.

    python benchmarks/bench_eigen.py [--sizes 100 200 400] [--repeat 3]

Matrices are mesh operators of the star3 builtin, so the timings are for
the matrices the package actually solves.  numpy's LAPACK ``eigh`` is
listed as a reference point only.
"""

import argparse
import time

import numpy as np

from qgheat import eigen
from qgheat.graph import builtin_graph
from qgheat.mesh import assemble_h0


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400, 800])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    g = builtin_graph("star3")
    backends = eigen.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is timed")
    print(f"{'n':>6} {'mode':>8} " + " ".join(f"{b:>10}" for b in backends) + f" {'lapack':>10}  speedup")
    for size in args.sizes:
        a = assemble_h0(g, 3.0 / size).matrix
        for vectors in (False, True):
            times = {
                b: best_of(lambda b=b: eigen.eigh(a, vectors=vectors, backend=b), args.repeat)
                for b in backends
            }
            ref = best_of(lambda: np.linalg.eigh(a) if vectors else np.linalg.eigvalsh(a), args.repeat)
            speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
            mode = "vectors" if vectors else "values"
            print(
                f"{a.shape[0]:>6} {mode:>8} "
                + " ".join(f"{times[b]:>10.4f}" for b in backends)
                + f" {ref:>10.4f}  {speed:6.1f}x"
            )
        w = {b: eigen.eigh(a, vectors=False, backend=b)[0] for b in backends}
        if len(w) == 2:
            assert np.allclose(w["compiled"], w["python"], atol=1e-9 * np.max(np.abs(w["python"])))


if __name__ == "__main__":
    main()
