"""Compare the compiled kernels with their numpy fallbacks.

Times each kernel on inputs shaped like real workloads, then times the
library paths that use them (self-convolution, the inverse Fourier
density and a return-amplitude sweep) under each backend.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]
"""
import argparse
import math
import timeit

import numpy as np

from scramble_bound import continuum, kernels
from scramble_bound.operators import RegularizedDOS


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_cases(quick):
    rng = np.random.default_rng(0)
    sizes = (80, 320, 1280) if quick else (80, 320, 1280, 5120)
    for n in sizes:
        nodes = np.linspace(0.0, 4.1, n)
        weights = np.full(n, 4.1 / n)
        yield f"double_exp_sum n={n}", "double_exp_sum", (nodes, weights, 1.0, 4.0)
        yield f"shifted_fourier_sum n={n}", "shifted_fourier_sum", (nodes, weights, 1.0, 1.2, 9.0)
    for d, m in ((64, 2001), (256, 2001)) if not quick else ((64, 2001),):
        e = np.sort(rng.normal(size=d))
        w = rng.random(d)
        t = np.linspace(0.0, 40.0, m)
        yield f"spectral_sum d={d} m={m}", "spectral_sum", (e, w / w.sum(), t, np.full(m, 0.1))


def pipeline_cases(quick):
    profile = continuum.ContinuumProfile.build(math.pi)
    times = np.linspace(0.0, 20.0, 51 if quick else 201)
    energies = np.linspace(0.0, 20.0, 41 if quick else 161)
    rng = np.random.default_rng(1)
    d = 256
    w = rng.random(d)
    dos = RegularizedDOS(rng.normal(size=d), w / w.sum())
    grid = np.linspace(0.0, 40.0, 2001)
    yield "self_convolution", lambda: continuum.self_convolution(times, profile)
    yield "inverse_fourier_dos", lambda: continuum.inverse_fourier_dos(energies, profile)
    yield "char function d=256", lambda: dos.char(grid, 0.1)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats (best is kept)")
    parser.add_argument("--quick", action="store_true", help="smaller inputs")
    args = parser.parse_args(argv)

    if kernels.compiled is None:
        print("compiled extension not available; only the numpy fallback can be timed")
        return 1
    backends = {"python": kernels.fallback, "cython": kernels.compiled}

    print(f"{'kernel':34s} {'numpy [us]':>12s} {'cython [us]':>12s} {'speedup':>8s}")
    for label, name, call_args in kernel_cases(args.quick):
        times = {}
        for key, mod in backends.items():
            fn = getattr(mod, name)
            once = best_of(lambda: fn(*call_args), 1, 1)
            # enough calls per repeat to fill about 50 ms
            number = max(1, int(0.05 / max(once, 1e-7)))
            times[key] = best_of(lambda: fn(*call_args), args.repeat, number)
        py, cy = times["python"], times["cython"]
        print(f"{label:34s} {py * 1e6:12.1f} {cy * 1e6:12.1f} {py / cy:8.2f}")

    print()
    print(f"{'library path':34s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    saved = kernels._impl
    try:
        for label, fn in pipeline_cases(args.quick):
            times = {}
            for key, mod in backends.items():
                kernels._impl = mod
                fn()
                times[key] = best_of(fn, max(1, args.repeat // 2), 1)
            py, cy = times["python"], times["cython"]
            print(f"{label:34s} {py * 1e3:12.1f} {cy * 1e3:12.1f} {py / cy:8.2f}")
    finally:
        kernels._impl = saved
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
