"""Time every kernel under the numba and pure-numpy implementations.

    python benchmarks/bench_kernels.py [--repeat 3]

Both implementations are called directly (numba_impl / numpy_impl), so one
process covers both backends; the first numba call is a warm-up.
"""

import argparse
import time

import numpy as np

from apfronts import _kernels as K
from apfronts.coeff import CoefficientField


def cases(n):
    rng = np.random.default_rng(0)
    f = CoefficientField.periodic(1.0, c_mean=1.0, c_terms=[(0.5, 1, 0.0)])
    h = 0.05
    x = h * np.arange(n)
    ah = f.a(x[:-1] + 0.5 * h)
    c = f.c(x)
    d = c[1:-1] - (ah[:-1] + ah[1:]) / h**2
    e = ah[1:-1] / h**2
    lo, hi = K._gershgorin(d, e)
    lower = -rng.random(n)
    upper = -rng.random(n)
    diag = 3.0 + rng.random(n)
    rhs = rng.random(n)
    vals = np.cos(x) + np.cos(np.sqrt(2) * x)
    shifts = np.arange(1, 2001)
    u0 = 1.0 / (1.0 + np.exp(x - x.mean()))
    steps = 200
    bnd = np.ones(steps + 1)
    right = np.zeros(steps + 1)
    return {
        "max_eig": (lambda m: m.max_eig(d, e, lo, hi, 60 if m is K.numba_impl else 12)),
        "thomas": (lambda m: m.thomas(lower, diag, upper, rhs)),
        "cyclic_thomas": (lambda m: m.cyclic_thomas(lower, diag, upper, rhs)),
        "ratio_sweep": (lambda m: m.ratio_sweep(ah, c, 2.0, h * h)),
        "shoot": (lambda m: m.shoot(ah, c, 1.0, h * h, 1.0)),
        "ap_scan": (lambda m: m.ap_scan(vals, shifts, 0, n - 2001, np.inf)),
        "march": (lambda m: m.march(u0, ah, c, 0.01 / h**2, 0.01, steps, 0.0, False, bnd, right, 50,
                                    np.zeros(0), np.zeros(0), 0.0, 0.0, 0.0)),
    }


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':15s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>9s}")
    for name, call in cases(args.n).items():
        call(K.numba_impl)  # compile
        tn = timeit(lambda: call(K.numba_impl), args.repeat)
        tp = timeit(lambda: call(K.numpy_impl), args.repeat)
        print(f"{name:15s} {1e3 * tn:12.3f} {1e3 * tp:12.3f} {tp / tn:9.1f}")


if __name__ == "__main__":
    main()
