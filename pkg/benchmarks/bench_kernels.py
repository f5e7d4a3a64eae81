"""Timing comparison of the numba and pure-numpy kernel backends.

Runs each hot kernel on representative shapes (ICU-model sized rule bases,
tens of thousands of rows), checks that the two implementations agree, and
prints best-of-N wall times with the speedup.  Run with the default
environment so the numba backend is importable; under IT2FIS_NO_NUMBA=1 the
script degrades to timing the numpy path alone.

    python3 benchmarks/bench_kernels.py --rows 20000 --repeats 7
"""

import argparse
import time

import numpy as np

from it2fis import kernels


def best_of(fn, args, repeats):
    fn(*args)  # warm-up: JIT compile / fault pages
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def agree(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(x, y, rtol=1e-10, atol=1e-12, equal_nan=True)
               for x, y in zip(a, b))


def build_cases(rows, rules, features, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(rows, features))
    means = rng.normal(size=(rules, features))
    sig_up = rng.uniform(0.8, 2.0, (rules, features))
    sig_lo = sig_up * rng.uniform(0.6, 0.9, (rules, features))
    cons = rng.uniform(1.0, 2.0, rules)
    order = np.argsort(cons, kind="stable")
    y = rng.uniform(1.0, 2.0, rows)

    up = rng.uniform(0.0, 1.0, (rows, rules))
    lo = up * rng.uniform(0.0, 1.0, (rows, rules))
    cents = np.sort(rng.uniform(1.0, 2.0, rules))

    centers = rng.normal(size=(8, features))
    d2 = kernels.sq_distances_np(X, centers)
    n_query = max(rows // 100, 1)
    queries = rng.normal(size=(n_query, features))
    qd2 = kernels.sq_distances_np(queries, X)

    return [
        ("sq_distances", f"{rows}x{features} vs 8", (X, centers)),
        ("fcm_memberships", f"{rows}x8 m=2", (d2, 2.0)),
        ("log_firing", f"{rows}x{rules}x{features}", (X, means, sig_up)),
        ("km_batch", f"{rows}x{rules}", (lo, up, cents)),
        ("t1_epoch", f"{rows}x{rules}x{features}", (X, y, means, sig_up, cons)),
        ("it2_epoch", f"{rows}x{rules}x{features}",
         (X, y, means, sig_lo, sig_up, cons, order)),
        ("topk_select", f"{n_query}x{rows} k=5", (qd2, 5)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--rules", type=int, default=5)
    ap.add_argument("--features", type=int, default=27)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    cases = build_cases(args.rows, args.rules, args.features, args.seed)
    have_numba = kernels.NUMBA_ACTIVE

    print(f"backend available: numpy{' + numba' if have_numba else ' only'}")
    header = f"{'kernel':<16} {'shape':<20} {'numpy':>10}"
    if have_numba:
        header += f" {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, shape, call_args in cases:
        fn_np = getattr(kernels, name + "_np")
        t_np = best_of(fn_np, call_args, args.repeats)
        line = f"{name:<16} {shape:<20} {t_np * 1e3:9.2f}ms"
        if have_numba:
            fn_nb = getattr(kernels, name + "_nb")
            if not agree(fn_np(*call_args), fn_nb(*call_args)):
                raise SystemExit(f"{name}: backends disagree")
            t_nb = best_of(fn_nb, call_args, args.repeats)
            line += f" {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
