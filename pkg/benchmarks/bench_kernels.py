"""Time the compiled and numpy kernels on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 200]

Also checks that both backends return bitwise identical results.
"""

import argparse
import math
import timeit

import numpy as np

from nsflab import _kernels, coupling as cpl, initial
from nsflab.flow import _kernel_views
from nsflab.grid import TorusGrid


def cases():
    spec1 = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (1,)),))
    spec2 = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(0.5, (1, 1)),))
    for n in (64, 256):
        g = TorusGrid((n,), (2 * math.pi,))
        yield f"1d n={n}", g, initial.random_map(g, seed=1), cpl.sample(spec1, g, 0.0)
    for n in (32, 64):
        g = TorusGrid((n, n), (2 * math.pi,) * 2)
        yield f"2d n={n}x{n}", g, initial.random_map(g, seed=1, modes=2), cpl.sample(spec2, g, 0.0)


def bench(backend, views, eps, repeat):
    u3, f2, df3, h0, h1 = views
    m = df3.shape[0]
    out, tau = np.empty_like(u3), np.empty_like(u3)
    timer = timeit.Timer(lambda: backend.rhs(u3, f2, df3, h0, h1, m, eps, out, tau))
    best = min(timer.repeat(5, repeat)) / repeat
    return best, out.copy()


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=200)
    args = p.parse_args(argv)
    if _kernels.compiled is None:
        print("compiled kernels unavailable; only the fallback can be timed")
    print(f"{'case':<14}{'numpy [us]':>12}{'compiled [us]':>15}{'speedup':>10}  identical")
    for name, grid, u, fs in cases():
        views = _kernel_views(u, fs, grid)
        t_py, r_py = bench(_kernels.fallback, views, 0.1, args.repeat)
        if _kernels.compiled is None:
            print(f"{name:<14}{t_py * 1e6:>12.1f}")
            continue
        t_c, r_c = bench(_kernels.compiled, views, 0.1, args.repeat)
        same = np.array_equal(r_py, r_c)
        print(f"{name:<14}{t_py * 1e6:>12.1f}{t_c * 1e6:>15.1f}{t_py / t_c:>10.1f}  {same}")


if __name__ == "__main__":
    main()
