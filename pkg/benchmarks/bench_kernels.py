"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat R]

Both implementations are imported directly, so the env flag does not matter here.
"""
import argparse
import time

import numpy as np

from unsharp_clt import _kernels
from unsharp_clt.states import ansatz_cut, dicke_superposition
from unsharp_clt.trine import trine_povm


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.symmetric_trial_numba is None:
        raise SystemExit("numba is not importable; nothing to compare")
    povm = trine_povm()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'size':>10}{'numpy [ms]':>14}{'numba [ms]':>14}{'speedup':>10}")
    for n in (64, 256, 1024, 2048):
        state = dicke_superposition(n, ansatz_cut(n, 1 / 3))
        u = rng.random(2 * n)
        args_ = (state.coeffs, povm.kraus, povm.effects, u)
        _kernels.symmetric_trial_numba(*args_)  # compile / load cache
        t_np = best_of(lambda: _kernels.symmetric_trial_numpy(*args_), args.repeat)
        t_nb = best_of(lambda: _kernels.symmetric_trial_numba(*args_), args.repeat)
        print(f"{'symmetric':<12}{n:>10}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{t_np / t_nb:>10.1f}")
    for n in (10**3, 10**5):
        p = np.tile(povm.effects[:, 0, 0].real, (n, 1))
        p /= p.sum(axis=1, keepdims=True)
        u = rng.random(n)
        _kernels.categorical_numba(p, u)
        t_np = best_of(lambda: _kernels.categorical_numpy(p, u), args.repeat)
        t_nb = best_of(lambda: _kernels.categorical_numba(p, u), args.repeat)
        print(f"{'categorical':<12}{n:>10}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
