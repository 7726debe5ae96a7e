"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 128] [--repeat 20]

The kernel table calls both implementations in one process. The end-to-end
rows (one Nehari solve, 50 Euler steps) run in subprocesses so the
LANELAB_DISABLE_NUMBA flag is seen at import time, as it would be in use.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lanelab import _kernels

END_TO_END = """
import time
from lanelab import euler, lane_emden, spectral
grid = spectral.make_grid({n})
lane_emden.solve_ground_state(2.0, spectral.make_grid(16))  # compile / warm up
t0 = time.perf_counter()
sol = lane_emden.solve_ground_state(2.0, grid)
t1 = time.perf_counter()
state = euler.FlowState(0.0, spectral.dealias(spectral.forward(sol.omega)))
ctrl = euler.StepControl(t_end=1e9)
for _ in range(50):
    state = euler.step(state, ctrl)
t2 = time.perf_counter()
print(t1 - t0, t2 - t1)
"""


def kernel_cases(n, rng):
    u = rng.standard_normal((n, n))
    levels = np.linspace(-2, 2, 64)
    return {
        "signed_power": (u, 2.0),
        "abs_power_sum": (u, 1.5),
        "advect": (u, u[::-1], u.T, u[:, ::-1]),
        "count_above": (u, levels),
        "sorted_l1": (u, u.T),
    }


def best(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def end_to_end(n, disable):
    env = dict(os.environ, LANELAB_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(n=n)], env=env,
                         capture_output=True, text=True, check=True)
    return [float(x) for x in out.stdout.split()]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        sys.exit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, case in kernel_cases(args.n, rng).items():
        fast = _kernels.NUMBA[name]
        fast(*case)  # compile
        t_np = best(_kernels.NUMPY[name], case, args.repeat)
        t_nb = best(fast, case, args.repeat)
        print(f"{name:<16}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.2f}")

    np_solve, np_steps = end_to_end(args.n, disable=True)
    nb_solve, nb_steps = end_to_end(args.n, disable=False)
    print(f"{'ground state':<16}{1e3 * np_solve:>12.1f}{1e3 * nb_solve:>12.1f}"
          f"{np_solve / nb_solve:>10.2f}")
    print(f"{'50 Euler steps':<16}{1e3 * np_steps:>12.1f}{1e3 * nb_steps:>12.1f}"
          f"{np_steps / nb_steps:>10.2f}")


if __name__ == "__main__":
    main()
