"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is warmed up once (numba compiles on first call) and the best of
``--repeat`` runs is reported.
"""

import argparse
import time

import numpy as np

from sparsemd import _accel
from sparsemd.kernels import _numpy as npk


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    W, B = 64, 2000
    masks = rng.random((B, W)) < 0.25
    masks[:, 0] = True
    vals = np.where(masks, rng.standard_normal((B, W)) + 1j * rng.standard_normal((B, W)), 0)
    packets = rng.random(2_000_000) < 0.02
    T = 0.27e-3
    times = np.sort(rng.uniform(0, 200_000 * T, 100_000))
    return {
        "iht_batch (2000 x W=64, omega=3)": lambda k: k.iht_batch(vals, masks, 3, 1.0, 1e-4, 200),
        "injection_run (2e6 slots, M_s=8)": lambda k: k.injection_run(packets, 8, 64),
        "slot_assign (1e5 samples, 2e5 slots)": lambda k: k.slot_assign(times, T, 200_000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"numpy": npk}
    if _accel.HAVE_NUMBA:
        from sparsemd.kernels import _numba

        impls["numba"] = _numba
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s}" + "".join(f"{name:>12s}" for name in impls) + "     speedup")
    for label, run in cases(rng).items():
        t = {name: best_of(lambda: run(mod), args.repeat) for name, mod in impls.items()}
        speed = f"{t['numpy'] / t['numba']:10.1f}x" if "numba" in t else ""
        print(f"{label:40s}" + "".join(f"{t[n] * 1e3:10.2f}ms" for n in impls) + f"  {speed}")


if __name__ == "__main__":
    main()
