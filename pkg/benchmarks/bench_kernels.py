"""Compare the compiled and pure-numpy offset-sum kernels.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from oblab import _kernels_py
from oblab.grid import Grid2
from oblab.mollify import MollifierKernel

try:
    from oblab import _kernels
except ImportError:
    _kernels = None


def bench(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    for ny, ell in ((129, 0.1), (257, 0.05)):
        grid = Grid2(Lx=1.0, Ly=2.0, nx=ny - 1, ny=ny)
        k = MollifierKernel(grid, ell)
        f = rng.standard_normal((2, ny, grid.nx))
        print(f"grid {grid.nx}x{ny}, ell={ell}, stencil {len(k.w)} offsets")
        for name, backend in (("numpy ", _kernels_py), ("cython", _kernels)):
            if backend is None:
                print(f"  {name}: extension not built")
                continue
            ts = bench(backend.shift_sum, f, k.di, k.dj, k.w, k.ilo, k.ihi)
            tt = bench(backend.tau_increment, f, f, k.di, k.dj, k.w, k.ilo, k.ihi)
            tg = bench(backend.grad_increment, f, k.di, k.dj, k.vx, k.vy, k.ilo, k.ihi)
            print(f"  {name}: shift_sum {ts*1e3:8.2f} ms   "
                  f"tau {tt*1e3:8.2f} ms   grad {tg*1e3:8.2f} ms")


if __name__ == "__main__":
    main()
