"""Time the numba kernels against their numpy references.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both variants are imported in one process; the numba ones are warmed up
once so compilation is excluded.  Outputs are also compared.
"""
import argparse
import timeit

import numpy as np

from symgabor import _accel, _kernels as K


def cases(rng):
    x = rng.uniform(-8, 8, size=(2048, 1))
    c = rng.normal(size=2048) + 1j * rng.normal(size=2048)
    y = rng.uniform(-4, 4, size=(2048, 1))
    yield "nudft 2048x2048", lambda f: f(x, c, y, 1.0), K.nudft_numpy, K.nudft_jit

    a = np.array([0.0, 1.0, 2.0])
    b = np.array([1.0, 2.0, 3.0])
    co = np.array([1.0, 0.5, -0.25], complex)
    nu = np.array([0.0, 0.5, -1.0])
    grid = np.arange(-12, 13, dtype=float)
    ms, ns = np.meshgrid(grid, grid / 2)
    ms, ns = ms.ravel(), ns.ravel()
    yield f"box_gram_axis {ms.size} pts", lambda f: f(a, b, co, nu, ms, ns), K.box_gram_axis_numpy, K.box_gram_axis_jit

    n, L = 128, 8.0
    t = -L + np.arange(n) * (2 * L / n)
    ax = [t, t]
    g = np.exp(-np.pi * (t[:, None] ** 2 + t[None, :] ** 2))
    f = rng.normal(size=(n, n)) + 0j
    sh = rng.integers(0, n, size=(200, 2))
    md = rng.integers(-4, 5, size=(200, 2)).astype(float)
    cell = (2 * L / n) ** 2
    yield "frame_apply 128^2 x 200 atoms", lambda fn: fn(f, g, sh, md, ax, cell), K.frame_apply_numpy, K.frame_apply_jit


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    print(f"numba active: {_accel.USE_NUMBA}")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, call, ref, fast in cases(rng):
        r0 = call(ref)
        if not _accel.USE_NUMBA:
            t = min(timeit.repeat(lambda: call(ref), number=1, repeat=args.repeat))
            print(f"{name:34s} {1e3 * t:11.2f} {'-':>11s} {'-':>8s} {'-':>10s}")
            continue
        r1 = call(fast)
        t0 = min(timeit.repeat(lambda: call(ref), number=1, repeat=args.repeat))
        t1 = min(timeit.repeat(lambda: call(fast), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(r0) - np.asarray(r1))))
        print(f"{name:34s} {1e3 * t0:11.2f} {1e3 * t1:11.2f} {t0 / t1:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
