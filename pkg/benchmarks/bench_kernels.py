"""Benchmark the jitted kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_kernels.py

Both code paths are always timed from this script (it imports the private
implementations directly), so the ECRA_SIM_NO_NUMBA environment variable
does not need to be set. Results use process CPU time.
"""
import time

import numpy as np

from ecra_sim import _kernels


def bench(fn, *args, repeat=5):
    fn(*args)                      # warm-up (triggers JIT compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.process_time()
        out = fn(*args)
        best = min(best, time.process_time() - t0)
    return best, out


def main():
    rng = np.random.default_rng(0)
    osf, n_sw = 4, 32
    n = 400_000                    # one 100-packet window at n_s=1000
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    s = rng.choice([-1.0, 1.0], size=n_sw)
    occ = rng.integers(0, 5, size=n).astype(np.float64)

    cases = [
        ("corr_scan", _kernels._corr_scan_np, (y, s, osf)),
        ("tap_mean", _kernels._tap_mean_np, (occ, n_sw, osf)),
    ]
    print(f"{'kernel':<12} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for name, np_fn, args in cases:
        t_np, out_np = bench(np_fn, *args)
        if _kernels.USE_NUMBA:
            nb_fn = getattr(_kernels, f"_{name}_nb")
            nb_args = tuple(np.ascontiguousarray(a) if isinstance(a, np.ndarray)
                            else a for a in args)
            t_nb, out_nb = bench(nb_fn, *nb_args)
            assert np.allclose(out_np, out_nb), f"{name}: paths disagree"
            print(f"{name:<12} {t_np*1e3:>8.2f}ms {t_nb*1e3:>8.2f}ms "
                  f"{t_np/t_nb:>7.2f}x")
        else:
            print(f"{name:<12} {t_np*1e3:>8.2f}ms {'n/a':>10} {'n/a':>8}")


if __name__ == "__main__":
    main()
