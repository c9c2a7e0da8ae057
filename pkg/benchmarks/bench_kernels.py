"""Compare the compiled and numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--n 32 64] [--repeat 7]

Prints the best-of-``repeat`` time per call for each kernel and the full
nonlinear evaluation, one row per (kernel, n), plus the speedup.
"""
import argparse
import timeit

import numpy as np

from cnse import kernels, spectral
from cnse.calming import CalmingFunction
from cnse.nonlinear import NonlinearForm, evaluate
from cnse.spectral import Grid


def _cases(grid, rng):
    u = rng.standard_normal((3,) + grid.shape)
    g = rng.standard_normal((3, 3) + grid.shape)
    c = spectral.fft_forward(u, grid)
    mask = grid.modes.dealias
    rot = NonlinearForm("rotational", CalmingFunction("rational1", 0.1))
    adv = NonlinearForm("advective", CalmingFunction("rational1", 0.1))
    cases = {f"calm[{k}]": (lambda k=k: kernels.calm(k, 0.1, u)) for k in (1, 2, 3, 4)}
    cases.update({
        "lamb": lambda: kernels.lamb(u, u),
        "advect": lambda: kernels.advect(u, g),
        "max_norm": lambda: kernels.max_norm(u),
        "project": lambda: kernels.project_masked(c, grid, mask),
        "curl": lambda: kernels.curl(c, grid),
        "gradient": lambda: kernels.gradient(c, grid),
        "B rotational": lambda: evaluate(rot, c, grid),
        "B advective": lambda: evaluate(adv, c, grid),
    })
    return cases


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64])
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)

    names = sorted(kernels.BACKENDS)
    if "cython" not in names:
        print("compiled backend not built; only the numpy fallback is available")
    start = kernels.backend_name()
    print(f"{'kernel':<14} {'n':>4} " + " ".join(f"{b + ' [ms]':>14}" for b in names) + f" {'speedup':>8}")
    for n in args.n:
        grid = Grid(n, 3)
        rng = np.random.default_rng(0)
        cases = _cases(grid, rng)
        for label, fn in cases.items():
            times = {}
            for b in names:
                kernels.use_backend(b)
                number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-6)))
                times[b] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number * 1e3
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{label:<14} {n:>4} " + " ".join(f"{times[b]:>14.3f}" for b in names) + f" {speed:>8.2f}")
    kernels.use_backend(start)


if __name__ == "__main__":
    main()
