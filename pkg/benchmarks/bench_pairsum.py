"""Time the entropy dissipation with the compiled pair sum, the numpy pair sum and the FFT path.

    python3 benchmarks/bench_pairsum.py --N 8 12 16 --repeat 3
"""
import argparse
import time

from landau_lab import functionals as fn, kernels
from landau_lab.grid import make_grid, maxwellian


def _best(fun, repeat):
    best, value = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fun()
        best = min(best, time.perf_counter() - t0)
    return best, value


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--L", type=float, default=6.0)
    args = ap.parse_args(argv)

    try:
        kernels.get_backend("compiled")
        have_compiled = True
    except ImportError:
        have_compiled = False

    print(f"threads={kernels.thread_count()} compiled={'yes' if have_compiled else 'no'}")
    print(f"{'N':>4} {'compiled[s]':>12} {'python[s]':>12} {'fft[s]':>10} {'speedup':>8} {'|pairs-fft|':>12}")
    for N in args.N:
        grid = make_grid(args.L, N, -3.0)
        f = maxwellian(grid, 0.4) + 0.3 * maxwellian(grid, 1.5, [1.0, 0.0, 0.0])
        t_py, d_py = _best(lambda: fn.entropy_dissipation(f, grid, "pairs", backend="python"), args.repeat)
        t_fft, d_fft = _best(lambda: fn.entropy_dissipation(f, grid, "fft"), args.repeat)
        if have_compiled:
            t_c, d_c = _best(lambda: fn.entropy_dissipation(f, grid, "pairs", backend="compiled"), args.repeat)
            assert abs(d_c - d_py) <= 1e-10 * abs(d_py)
            c_col, speed = f"{t_c:12.4f}", f"{t_py / t_c:8.1f}"
        else:
            c_col, speed = f"{'-':>12}", f"{'-':>8}"
        print(f"{N:>4} {c_col} {t_py:12.4f} {t_fft:10.4f} {speed} {abs(d_py - d_fft):12.3e}")


if __name__ == "__main__":
    main()
