"""Compare the compiled and pure-Python phase-lock loops.

    python benchmarks/bench_lock.py [--seconds 10] [--dt 1e-3] [--runs 20]
"""

import argparse
import time

import numpy as np

from biphoton_sim import _kernels
from biphoton_sim.lock import DriftModel, setpoint_for_phi


def timed(loop, envs, sp, dt):
    t0 = time.perf_counter()
    for env in envs:
        loop(sp.mismatch_nm + 30.0, 0.0, env, sp.discriminant, sp.slope, sp.lambda_p_nm, 0.5, 5.0, dt, 50.0)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=10.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--runs", type=int, default=20)
    args = ap.parse_args()

    sp = setpoint_for_phi(-np.pi / 2, 810.0, 532.0)
    n = int(round(args.seconds / args.dt))
    drift = DriftModel(50.0, 100.0, 30.0)
    envs = [drift.offsets(n, args.dt, np.random.default_rng(s)) for s in range(args.runs)]

    print(f"{args.runs} runs x {n} steps")
    t_py = timed(_kernels.lock_loop_py, envs, sp, args.dt)
    print(f"pure python : {t_py:8.3f} s")
    if not _kernels.HAS_NUMBA:
        print("numba       : unavailable (or BIPHOTON_NO_NUMBA set)")
        return
    t0 = time.perf_counter()
    _kernels.lock_loop(sp.mismatch_nm, 0.0, envs[0][:10], sp.discriminant, sp.slope, sp.lambda_p_nm,
                       0.5, 5.0, args.dt, 50.0)
    print(f"numba warmup: {time.perf_counter() - t0:8.3f} s (compile or cache load)")
    t_nb = timed(_kernels.lock_loop, envs, sp, args.dt)
    print(f"numba       : {t_nb:8.3f} s  ({t_py / t_nb:.0f}x)")


if __name__ == "__main__":
    main()
