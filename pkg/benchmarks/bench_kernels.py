"""Time the compiled bellow integral against the numpy fallback.

Run from the repository root after building:
  python3 benchmarks/bench_kernels.py
"""

import argparse
import math
import timeit

from pneumodel import _kernels_py, lisper
from pneumodel.domain import DEG, KPA, LisperGeometry, MaterialParams

try:
    from pneumodel import _kernels
except ImportError:
    _kernels = None


def kernel_args(p=50.0 * KPA, theta=45.0 * DEG):
    g, m = LisperGeometry(), MaterialParams()
    rest = lisper.rest_geometry(g, m)
    sol = lisper.solve_bellow_geometry(g, m, p)
    alpha = lisper.bending_half_angle(g, theta)
    return (g.l_base, g.h2, g.h2, alpha, g.d_bellow_wall, m.e_silicone, m.poisson,
            rest.theta3, rest.l_wall_new, rest.r_new, sol.theta3, sol.l_wall_new, sol.r_new)


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args()

    base = kernel_args()
    backends = [("numpy", _kernels_py)] + ([("compiled", _kernels)] if _kernels else [])
    print(f"{'n':>6} " + " ".join(f"{name:>12}" for name, _ in backends) + "  speedup  max|diff|")
    for n in (256, 1024, 8192):
        times, vals = [], []
        for _, mod in backends:
            times.append(best_of(lambda: mod.bellow_f3d(*base, n), args.repeat, args.number))
            vals.append(mod.bellow_f3d(*base, n))
        speed = times[0] / times[-1] if len(times) > 1 else math.nan
        diff = max(abs(v - vals[0]) for v in vals)
        cells = " ".join(f"{t * 1e6:10.2f}us" for t in times)
        print(f"{n:>6} {cells}  {speed:7.1f}  {diff:.2e}")
    if _kernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
