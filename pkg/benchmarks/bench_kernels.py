"""Timing comparison of the NumPy and compiled kernel backends.

Runs each hot kernel on identical inputs through both implementations and
prints best-of-k wall times plus the speedup factor.  The compiled loops
win on solver-sized vectors where call overhead and temporaries dominate;
NumPy's vectorized transcendentals take over on very long vectors, so the
elementwise kernels are timed at two sizes.  Usage:

    python3 benchmarks/bench_kernels.py [--repeats 7]
"""

import argparse
import time

import numpy as np

from entromin import _kernels_py as kpy
from entromin.experiments import gen_instance
from entromin.wavelets import daubechies_taps, qmf

try:
    from entromin import _kernels as kcy
except ImportError:
    kcy = None


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()
    rows = []

    def bench(label, name, call_args):
        t_py = best_of(lambda: getattr(kpy, name)(*call_args), args.repeats)
        t_cy = None if kcy is None else \
            best_of(lambda: getattr(kcy, name)(*call_args), args.repeats)
        rows.append((label, t_py, t_cy))

    rng = np.random.default_rng(0)
    for n in (1000, 200_000):
        x = rng.normal(size=n) * 2
        tau = rng.normal(size=n)
        bench(f"penalty_value l1  n={n}", "penalty_value",
              (x, kpy.KIND_L1, 1.0, 2.0))
        bench(f"penalty_value sef n={n}", "penalty_value",
              (x, kpy.KIND_SEF, 1.1, 2.0))
        bench(f"weight_vec sef    n={n}", "weight_vec",
              (x, kpy.KIND_SEF, 1.1, 2.0, 1e-12))
        bench(f"weight_vec ref    n={n}", "weight_vec",
              (x, kpy.KIND_REF, 1.1, 1.1, 1e-12))
        bench(f"soft_threshold    n={n}", "soft_threshold_vec", (x, tau))

    h = daubechies_taps(4)
    g = qmf(h)
    mat = rng.normal(size=(256, 256))
    bench("dwt_cols 256x256", "dwt_cols", (mat, h, g))

    # one continuation phase of the dense-path solver on real instances
    for N, M, S in ((200, 100, 15), (1000, 400, 40)):
        x_true, A, y = gen_instance(N, M, S, 7)
        G = A.matrix.T @ A.matrix
        b = A.matrix.T @ y
        kappa = 1.01 * 2.0 * float(np.linalg.eigvalsh(G)[-1])
        for label, kind, p in (("l1", kpy.KIND_L1, 1.0),
                               ("sef", kpy.KIND_SEF, 1.1)):
            bench(f"solve_phase {label} M={M} N={N}", "solve_phase_dense",
                  (G, b, float(y @ y), np.zeros(N), 0.05, kappa, kind, p,
                   2.0, 1e-12, 30, 10, 1e-6, 1e-4, True))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}} {'python':>10} {'cython':>10} {'speedup':>8}")
    for label, t_py, t_cy in rows:
        if t_cy is None:
            print(f"{label:<{width}} {t_py * 1e3:>8.3f}ms {'-':>10} {'-':>8}")
        else:
            print(f"{label:<{width}} {t_py * 1e3:>8.3f}ms {t_cy * 1e3:>8.3f}ms "
                  f"{t_py / t_cy:>7.2f}x")
    if kcy is None:
        print("\ncompiled backend not built; only the NumPy timings above")


if __name__ == "__main__":
    main()
