"""Timing comparison of the compiled grid sweep against the numpy fallback.

Run as a script:  python3 benchmarks/bench_grid.py [--dt 0.002] [--repeat 5]
The job is a three-measurement weak correlator on a warm two-level system
with a long backaction window, which is the shape that dominates real use.
"""

import argparse
import time

import numpy as np

from weaknoise import hilbert
from weaknoise._grid import GRID_BACKEND, grid_sweep_reference
from weaknoise.correlator import WeakCorrelatorRequest, weak_correlator_grid
from weaknoise.kernel import equilibrium


def build_request(dt: float) -> WeakCorrelatorRequest:
    H = hilbert.tls_hamiltonian(1.0)
    rho = hilbert.tls_thermal(1.0, 0.8)
    sx, sz = hilbert.sigma_x(), hilbert.sigma_z()
    obs = ((sx, -1.0), (sz, 0.0), (sx, 1.5))  # even sigma_x count, nonzero value
    return WeakCorrelatorRequest(H, rho, obs, equilibrium(0.6), dt, (-20.0, 20.0))


def time_backend(req: WeakCorrelatorRequest, backend, repeat: int) -> tuple:
    val = weak_correlator_grid(req, backend=backend)  # warm-up, also the value
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        weak_correlator_grid(req, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return val, best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dt", type=float, default=0.002)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    req = build_request(args.dt)
    n_events = 3 * int(round((req.window[1] - req.window[0]) / req.dt)) + 3
    print(f"active backend: {GRID_BACKEND}; ~{n_events} sweep events")

    v_active, t_active = time_backend(req, None, args.repeat)
    v_ref, t_ref = time_backend(req, grid_sweep_reference, args.repeat)

    print(f"active    : {t_active * 1e3:9.2f} ms   value {v_active:.15g}")
    print(f"reference : {t_ref * 1e3:9.2f} ms   value {v_ref:.15g}")
    print(f"difference: {abs(v_active - v_ref):.3e}")
    if GRID_BACKEND == "python":
        print("extension not built; both runs used the numpy reference")
    else:
        print(f"speedup   : {t_ref / t_active:.1f}x")


if __name__ == "__main__":
    main()
