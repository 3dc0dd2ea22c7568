"""Active stabilization of the output phase through the pump Mach-Zehnder.

The pump crosses the same net path mismatch (-dL_i + dL_s) as the photon
pairs, so holding the pump fringe holds the pair phase.  The discriminant
is the normalized difference of the two photodiodes; a PI law, applied as
a piezo increment per update, closes the loop.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .source import SourceConfig, wrap_phase

PHASE_BAND_RAD = 0.05
SLOPE_TOL = 1e-6


class LockError(RuntimeError):
    pass


@dataclass(frozen=True)
class DriftModel:
    random_walk_nm_per_sqrt_s: float = 50.0
    sine_amplitude_nm: float = 100.0
    sine_period_s: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if self.random_walk_nm_per_sqrt_s < 0 or self.sine_amplitude_nm < 0:
            raise ValueError("drift amplitudes must be non-negative")
        if self.sine_period_s <= 0:
            raise ValueError("sine_period_s must be positive")

    def sine(self, t):
        return self.sine_amplitude_nm * np.sin(2 * np.pi * np.asarray(t) / self.sine_period_s)

    def offsets(self, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
        """Environmental offset at t = 0, dt, ..., (n-1) dt, starting from 0."""
        steps = rng.standard_normal(n - 1) * self.random_walk_nm_per_sqrt_s * math.sqrt(dt)
        walk = np.concatenate(([0.0], np.cumsum(steps)))
        return walk + self.sine(np.arange(n) * dt)


@dataclass(frozen=True)
class LockGains:
    # piezo increment per update, in nm per nm of error
    kp: float = 0.5
    # nm per (nm s) of accumulated error, per update
    ki: float = 5.0
    integrator_limit: float = 50.0


@dataclass(frozen=True)
class Setpoint:
    mismatch_nm: float
    intensity_1: float
    intensity_2: float
    lambda_p_nm: float

    @property
    def discriminant(self) -> float:
        return self.intensity_1 - self.intensity_2

    @property
    def slope(self) -> float:
        """d(discriminant)/d(mismatch) at the setpoint, per nm."""
        return -2 * np.pi / self.lambda_p_nm * np.sin(2 * np.pi * self.mismatch_nm / self.lambda_p_nm)

    @property
    def lockable(self) -> bool:
        return abs(np.sin(2 * np.pi * self.mismatch_nm / self.lambda_p_nm)) > SLOPE_TOL


@dataclass(frozen=True)
class LockState:
    piezo_position_nm: float
    environmental_offset_nm: float
    intensity_1: float
    intensity_2: float
    integrator: float = 0.0
    time_s: float = 0.0

    @property
    def mismatch_nm(self) -> float:
        return self.piezo_position_nm + self.environmental_offset_nm

    @classmethod
    def at(cls, piezo_nm: float, env_nm: float, lambda_p_nm: float, **kw) -> "LockState":
        i1, i2 = mzi_intensities(piezo_nm + env_nm, lambda_p_nm)
        return cls(piezo_nm, env_nm, i1, i2, **kw)


def mzi_intensities(mismatch_nm, lambda_p_nm: float):
    if lambda_p_nm <= 0:
        raise ValueError("pump wavelength must be positive")
    i1 = np.cos(np.pi * np.asarray(mismatch_nm, dtype=float) / lambda_p_nm) ** 2
    if np.ndim(i1) == 0:
        i1 = float(i1)
    return i1, 1.0 - i1


def setpoint_for_phi(target_phi_rad: float, lambda_s_nm: float, lambda_p_nm: float) -> Setpoint:
    if abs(target_phi_rad) > np.pi:
        raise ValueError(f"target phase must lie in [-pi, pi], got {target_phi_rad}")
    m = target_phi_rad * lambda_s_nm / (2 * np.pi)
    i1, i2 = mzi_intensities(m, lambda_p_nm)
    return Setpoint(m, i1, i2, lambda_p_nm)


def error_signal(state: LockState, setpoint: Setpoint) -> float:
    """Mismatch error in nm inferred from the photodiodes, linearized at the setpoint.

    Positive means the mismatch sits above the setpoint on the locked fringe side.
    """
    if not setpoint.lockable:
        raise LockError("unlockable setpoint: fringe slope vanishes at the extremum")
    disc = (state.intensity_1 - state.intensity_2) / (state.intensity_1 + state.intensity_2)
    return (disc - setpoint.discriminant) / setpoint.slope


def controller_step(state: LockState, gains: LockGains, dt_s: float, drift: DriftModel,
                    setpoint: Setpoint, rng: np.random.Generator | None = None) -> LockState:
    """Advance the drift by one step, read the photodiodes, move the piezo."""
    if dt_s <= 0:
        raise ValueError("dt must be positive")
    if not setpoint.lockable:
        raise LockError("unlockable setpoint: fringe slope vanishes at the extremum")
    if rng is None:
        rng = np.random.default_rng(drift.seed)
    t = state.time_s + dt_s
    env = (state.environmental_offset_nm
           + drift.random_walk_nm_per_sqrt_s * math.sqrt(dt_s) * rng.standard_normal()
           + float(drift.sine(t) - drift.sine(state.time_s)))
    piezo, integ, *_ = _kernels.lock_step(
        state.piezo_position_nm, state.integrator, env, setpoint.discriminant, setpoint.slope,
        setpoint.lambda_p_nm, gains.kp, gains.ki, dt_s, gains.integrator_limit,
    )
    return LockState.at(piezo, env, setpoint.lambda_p_nm, integrator=integ, time_s=t)


def coarse_acquire(state: LockState, setpoint: Setpoint, estimate_error_nm: float,
                   rng: np.random.Generator) -> LockState:
    """Jump the piezo onto the setpoint using an absolute mismatch estimate.

    The estimate stands in for the broadband white-light pre-alignment, which
    locates the equal-arm point only to within ``estimate_error_nm``.
    """
    estimate = state.mismatch_nm + estimate_error_nm * rng.standard_normal()
    piezo = state.piezo_position_nm + setpoint.mismatch_nm - estimate
    return LockState.at(piezo, state.environmental_offset_nm, setpoint.lambda_p_nm,
                        integrator=0.0, time_s=state.time_s)


@dataclass
class LockTrace:
    time_s: np.ndarray
    mismatch_nm: np.ndarray
    phi_rad: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    target_phi: float
    settle_s: float = 1.0

    def phase_error(self) -> np.ndarray:
        return wrap_phase(self.phi_rad - self.target_phi)

    def settled(self) -> np.ndarray:
        return self.time_s >= self.settle_s

    def in_band_fraction(self, band: float = PHASE_BAND_RAD) -> float:
        err = self.phase_error()[self.settled()]
        return float(np.mean(np.abs(err) < band)) if err.size else 0.0

    def summary(self) -> dict:
        err = self.phase_error()[self.settled()]
        if not err.size:
            err = self.phase_error()
        return {
            "phi_mean": float(self.target_phi + np.mean(err)),
            "phi_std": float(np.std(err)),
            "in_band_fraction": self.in_band_fraction(),
        }

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_s", "mismatch_nm", "phi_rad", "i1", "i2"])
            for row in zip(self.time_s, self.mismatch_nm, self.phi_rad, self.i1, self.i2):
                w.writerow([f"{v:.9g}" for v in row])
        return path


def run_lock(cfg: SourceConfig, gains: LockGains, drift: DriftModel, duration_s: float,
             dt_s: float, seed: int | None = None, *, initial_mismatch_nm: float | None = None,
             target_phi: float = -np.pi / 2, prealign_error_nm: float = 20.0,
             settle_s: float = 1.0) -> LockTrace:
    """Closed-loop run from an arbitrary starting mismatch.

    The loop first jumps onto the setpoint with the pre-alignment estimate,
    then locks the pump fringe.  Identical seeds give identical traces.
    """
    if not duration_s >= dt_s > 0:
        raise ValueError("need duration >= dt > 0")
    sp = setpoint_for_phi(target_phi, cfg.lambda_s_nm, cfg.lambda_p_nm)
    if not sp.lockable:
        raise LockError("unlockable setpoint: fringe slope vanishes at the extremum")
    seed = drift.seed if seed is None else seed
    acquire_rng, drift_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    m0 = cfg.mismatch_nm if initial_mismatch_nm is None else initial_mismatch_nm
    n = max(1, int(round(duration_s / dt_s)))
    env = drift.offsets(n, dt_s, drift_rng)
    state = coarse_acquire(LockState.at(m0, 0.0, cfg.lambda_p_nm), sp, prealign_error_nm, acquire_rng)
    mismatch, i1, _, _ = _kernels.lock_loop(
        state.piezo_position_nm, 0.0, env, sp.discriminant, sp.slope, cfg.lambda_p_nm,
        gains.kp, gains.ki, dt_s, gains.integrator_limit,
    )
    phi = wrap_phase(2 * np.pi / cfg.lambda_s_nm * mismatch)
    return LockTrace(np.arange(n) * dt_s, mismatch, np.atleast_1d(phi), i1, 1.0 - i1, target_phi, settle_s)
