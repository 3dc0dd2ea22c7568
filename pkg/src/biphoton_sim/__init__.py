"""Entangled photon pairs from one nonlinear crystal pumped along two paths
(810 nm signal, 1550 nm idler): states, detection statistics, phase lock."""

from .detection import (
    CountRecord,
    DetectorConfig,
    coincidence_probabilities,
    expected_rates,
    fringe_scan,
    qber,
    simulate_counts,
    spectral_brightness,
    visibility,
)
from .lock import DriftModel, LockGains, LockState, run_lock
from .source import SourceConfig, effective_state, ideal_state, output_phase
from .states import BiPhotonMixedState, BiPhotonPureState, joint_probability, mixture, pure_from_amplitudes

__version__ = "0.1.0"

__all__ = [
    "BiPhotonMixedState",
    "BiPhotonPureState",
    "CountRecord",
    "DetectorConfig",
    "DriftModel",
    "LockGains",
    "LockState",
    "SourceConfig",
    "coincidence_probabilities",
    "effective_state",
    "expected_rates",
    "fringe_scan",
    "ideal_state",
    "joint_probability",
    "mixture",
    "output_phase",
    "pure_from_amplitudes",
    "qber",
    "run_lock",
    "simulate_counts",
    "spectral_brightness",
    "visibility",
]
