"""Hot loops, compiled with numba unless ``BIPHOTON_NO_NUMBA`` is set.

The pure-Python versions stay importable as ``*_py`` so the benchmark can
compare both paths in one process.
"""

import math
import os

import numpy as np

_DISABLE = os.environ.get("BIPHOTON_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLE:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def lock_step_py(piezo, integrator, env, setpoint_disc, slope, lambda_p, kp, ki, dt, i_max):
    """One controller update: measure, form the error, move the piezo.

    Returns (new_piezo, new_integrator, measured_mismatch, i1, error_nm).
    """
    m = env + piezo
    i1 = math.cos(math.pi * m / lambda_p) ** 2
    i2 = 1.0 - i1
    # normalized photodiode difference cancels pump power
    disc = (i1 - i2) / (i1 + i2)
    err = (disc - setpoint_disc) / slope
    integrator = integrator + err * dt
    if integrator > i_max:
        integrator = i_max
    elif integrator < -i_max:
        integrator = -i_max
    piezo = piezo - (kp * err + ki * integrator)
    return piezo, integrator, m, i1, err


def lock_loop_py(piezo0, integrator0, env, setpoint_disc, slope, lambda_p, kp, ki, dt, i_max):
    """Run the loop over a precomputed environmental offset sequence.

    Returns arrays (mismatch, i1, piezo) sampled at each measurement and the
    final integrator.  Same arithmetic as ``lock_step_py``, inlined so the
    compiled loop has no call overhead.
    """
    n = env.shape[0]
    mismatch = np.empty(n)
    i1 = np.empty(n)
    piezo = np.empty(n)
    p = piezo0
    integ = integrator0
    for k in range(n):
        piezo[k] = p
        m = env[k] + p
        a = math.cos(math.pi * m / lambda_p) ** 2
        disc = (a - (1.0 - a)) / (a + (1.0 - a))
        err = (disc - setpoint_disc) / slope
        integ = integ + err * dt
        if integ > i_max:
            integ = i_max
        elif integ < -i_max:
            integ = -i_max
        p = p - (kp * err + ki * integ)
        mismatch[k] = m
        i1[k] = a
    return mismatch, i1, piezo, integ


if HAS_NUMBA:
    lock_step = numba.njit(cache=True)(lock_step_py)
    lock_loop = numba.njit(cache=True)(lock_loop_py)
else:
    lock_step = lock_step_py
    lock_loop = lock_loop_py
