"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import time

import numpy as np

from thinlens import (EllipseGeometry, PointMassLens, RadialLens, IsothermalProfile,
                      UniformEllipseLens, solve_all)
from thinlens import kernels
from thinlens._pykernels import initial_roots


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n_points, seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-3, 3, n_points) + 1j * rng.uniform(-3, 3, n_points)
    starts = z[: max(n_points // 20, 16)]
    ell = UniformEllipseLens(EllipseGeometry(2.0, 1.0), 2.0, 0.05)
    pts = PointMassLens(tuple((0.2, complex(*xy)) for xy in rng.uniform(-1, 1, (5, 2))), 0.1)
    iso = RadialLens(1.0, IsothermalProfile(0.2), 0.2)
    coeffs = rng.normal(size=27) + 1j * rng.normal(size=27)
    out = {}
    for name, lens in (("ellipse", ell), ("5 masses", pts), ("isothermal", iso)):
        plan = lens.plan()
        out[f"evaluate / {name}"] = lambda plan=plan: kernels.evaluate(plan, z)
        out[f"newton / {name}"] = lambda plan=plan: kernels.newton_multistart(plan, starts, 0.1)
    out["aberth / degree 26"] = lambda: kernels.aberth(coeffs, initial_roots(coeffs))
    out["solve_all / ellipse"] = lambda: solve_all(ell, 0.02 + 0.01j)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if kernels.compiled_backend is None:
        raise SystemExit("compiled kernels are not built; run `python3 setup.py build_ext --inplace`")
    before = kernels.BACKEND
    rows = {}
    for backend in ("python", "cython"):
        kernels.use(backend)
        for name, fn in cases(args.points, args.seed).items():
            fn()  # warm up
            rows.setdefault(name, {})[backend] = best_of(fn, args.repeat)
    kernels.use(before)
    print(f"{'kernel':<24}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, t in rows.items():
        print(f"{name:<24}{1e3 * t['python']:>14.3f}{1e3 * t['cython']:>14.3f}"
              f"{t['python'] / t['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
