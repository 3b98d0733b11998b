"""Numba vs numpy timing for the two hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n-xi 257] [--n-theta 128] [--n-v 257]

Prints the best-of-``repeat`` wall time per call for each backend, the speedup,
and the largest difference between the backends' outputs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from kacspec._accel import HAVE_NUMBA
from kacspec.collision import VelocityGrid, build_quadrature, collision_rhs, velocity_space_collision
from kacspec.spectral import CrossSectionParams, FourierGrid, SpectralState


def best_time(fn, repeat: int) -> float:
    fn()  # warm-up (numba compile, caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(name, make, repeat):
    out_nb = make("numba")()
    out_np = make("numpy")()
    t_nb = best_time(make("numba"), repeat)
    t_np = best_time(make("numpy"), repeat)
    diff = float(np.max(np.abs(out_nb - out_np)))
    print(f"{name:<22} numba {t_nb * 1e3:9.3f} ms   numpy {t_np * 1e3:9.3f} ms   "
          f"speedup {t_np / t_nb:6.1f}x   max|diff| {diff:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-xi", type=int, default=257)
    ap.add_argument("--n-theta", type=int, default=128)
    ap.add_argument("--n-v", type=int, default=257)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is unavailable or disabled (KACSPEC_DISABLE_NUMBA); nothing to compare")

    p = CrossSectionParams(s=0.75, theta_cut=1e-4)
    q = build_quadrature(p, args.n_theta)
    grid = FourierGrid(32.0, args.n_xi)
    for label, fn in (("gaussian", lambda x: np.exp(-0.5 * x * x)), ("laplace", lambda x: 1.0 / (1.0 + x * x))):
        st = SpectralState.from_function(grid, fn)
        bench(f"bobylev rhs {label}", lambda b, st=st: (lambda: collision_rhs(st, q, p, backend=b)),
              args.repeat)

    vg = VelocityGrid(12.0, args.n_v if args.n_v % 2 else args.n_v + 1)
    f = np.exp(-0.5 * vg.nodes ** 2) / np.sqrt(2 * np.pi)
    bench("velocity collision", lambda b: (lambda: velocity_space_collision(f, vg, q, p, backend=b)),
          max(1, args.repeat // 2))


if __name__ == "__main__":
    main()
