"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_accel.py [--repeat N]

Both dicts are importable regardless of MOLLIFY_NO_NUMBA, so one process
times both. The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from mollify._accel import HAVE_NUMBA, NUMBA_KERNELS, NUMPY_KERNELS


def cases(rng):
    c = lambda n: rng.normal(size=n) + 1j * rng.normal(size=n)  # noqa: E731
    z = rng.uniform(-1, 1, 100_000).astype(complex)
    x = rng.uniform(-1, 1, 100_000)
    ys = np.linspace(-1, 1, 201)
    ws = rng.normal(size=201).astype(complex)
    a = c(6)
    a[0] = 0
    return {
        "horner (deg 40, 1e5 pts)": ("horner", (c(41), z)),
        "comp_horner (deg 40, 1e5 pts)": ("comp_horner", (rng.normal(size=41), x)),
        "aberth (deg 30)": ("aberth", (c(31), np.exp(2j * np.pi * (np.arange(30) + 0.25) / 30) * 1.5, 500, 1e-14)),
        "taylor_shift (deg 60)": ("taylor_shift", (c(61), 0.3 + 0.2j)),
        "translate_sum (201 nodes, 2000 pts)": (
            "translate_sum", (np.array([1 / np.pi + 0j]), np.array([1, 0, 1], dtype=complex), ys, ws, z[:2000])),
        "reexpand (J 5, mmax 400)": ("reexpand", (a, 0.4 + 0.1j, 400)),
        "inverse_power_taylor (M 5, N 400)": ("inverse_power_taylor", (c(6), 2.5 + 1j, 1.0, 400)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for label, (name, argv) in cases(rng).items():
        NUMBA_KERNELS[name](*[np.copy(v) if isinstance(v, np.ndarray) else v for v in argv])  # compile
        t = {}
        for tag, table in (("numpy", NUMPY_KERNELS), ("numba", NUMBA_KERNELS)):
            fn = table[name]

            def call():
                fn(*[np.copy(v) if isinstance(v, np.ndarray) else v for v in argv])

            n, _ = timeit.Timer(call).autorange()
            t[tag] = min(timeit.repeat(call, number=n, repeat=args.repeat)) / n * 1e3
        print(f"{label:40s} {t['numpy']:10.3f} {t['numba']:10.3f} {t['numpy'] / t['numba']:7.1f}x")


if __name__ == "__main__":
    main()
