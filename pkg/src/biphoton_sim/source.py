"""Emitted two-photon state and auxiliary source physics."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .states import BiPhotonMixedState, BiPhotonPureState, mixture, pure_from_amplitudes

FOUR_LN2 = 4.0 * np.log(2.0)
ENERGY_TOL_NM = 1e-7


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SourceConfig:
    lambda_p_nm: float = 532.0
    lambda_s_nm: float = 810.0
    lambda_i_nm: float = 1550.0
    # -202.5 nm net mismatch sets the output phase to -pi/2 at 810 nm
    delta_L_s_nm: float = -202.5
    delta_L_i_nm: float = 0.0
    pump_power_mw: float = 1.2
    # pi/8 balances the two pump arms
    pump_hwp_angle_rad: float = np.pi / 8
    bandwidth_i_nm: float = 0.8
    crystal_length_mm: float = 50.0
    waist_radius_um: float = 125.0
    # signal photons entering the port network per mW; with eta_s = 0.6 this
    # gives 3e5 detected 810 nm singles at 1.2 mW
    pair_rate_coeff: float = 2.5e5 / 0.6
    strict: bool = False

    def __post_init__(self):
        for name in ("lambda_p_nm", "lambda_s_nm", "lambda_i_nm", "bandwidth_i_nm",
                     "crystal_length_mm", "waist_radius_um"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.pump_power_mw < 0:
            raise ConfigError(f"pump_power_mw must be non-negative, got {self.pump_power_mw}")
        if self.pair_rate_coeff < 0:
            raise ConfigError(f"pair_rate_coeff must be non-negative, got {self.pair_rate_coeff}")
        if self.strict:
            res = energy_conservation_residual(self.lambda_p_nm, self.lambda_s_nm, self.lambda_i_nm)
            if abs(res) > ENERGY_TOL_NM:
                raise ConfigError(f"energy conservation residual {res:.3e} nm^-1 exceeds {ENERGY_TOL_NM}")

    @property
    def mismatch_nm(self) -> float:
        """Net path mismatch (-dL_i + dL_s) seen by the pump Mach-Zehnder."""
        return self.delta_L_s_nm - self.delta_L_i_nm

    @property
    def balance_angle(self) -> float:
        """Polarization angle of the pump after its HWP; pi/4 is balanced."""
        return 2.0 * self.pump_hwp_angle_rad

    def replace(self, **changes) -> "SourceConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return SourceConfig(**values)


def wrap_phase(phi):
    """Wrap to (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), 2 * np.pi)
    return float(w) if np.ndim(w) == 0 else w


def output_phase(cfg: SourceConfig) -> float:
    return wrap_phase(2 * np.pi / cfg.lambda_s_nm * cfg.mismatch_nm)


def ideal_state(phi: float, balance_angle: float = np.pi / 4,
                signal_basis=("H", "V")) -> BiPhotonPureState:
    """cos(b)|H_s H_i> + e^{i phi} sin(b)|V_s V_i>; b = pi/4 is the balanced case.

    ``signal_basis`` names the two signal modes: the ports H/V they reach, or
    the interferometer paths when the port network is applied afterwards.
    """
    amps = np.zeros((2, 2), dtype=complex)
    amps[0, 0] = np.cos(balance_angle)
    amps[1, 1] = np.exp(1j * phi) * np.sin(balance_angle)
    return pure_from_amplitudes(signal_basis, ("H", "V"), amps)


def coherence_length_nm(lambda_nm: float, bandwidth_nm: float) -> float:
    if lambda_nm <= 0 or bandwidth_nm <= 0:
        raise ValueError("wavelength and bandwidth must be positive")
    return lambda_nm ** 2 / bandwidth_nm


def coherence_weight(mismatch_nm, coherence_length_nm: float):
    """Gaussian two-photon coherence with FWHM equal to the coherence length."""
    if coherence_length_nm <= 0:
        raise ValueError("coherence length must be positive")
    mu = np.exp(-FOUR_LN2 * (np.asarray(mismatch_nm, dtype=float) / coherence_length_nm) ** 2)
    return float(mu) if np.ndim(mu) == 0 else mu


def source_coherence_weight(cfg: SourceConfig) -> float:
    l_c = coherence_length_nm(cfg.lambda_i_nm, cfg.bandwidth_i_nm)
    return coherence_weight(cfg.mismatch_nm, l_c)


def effective_state(cfg: SourceConfig, signal_basis=("H", "V"), phi: float | None = None) -> BiPhotonMixedState:
    """Emitted state with partial temporal distinguishability.

    The coherent part carries weight mu; the remainder is the classical
    |HH>/|VV> mixture, i.e. only the cross term of the pure state decays.
    ``phi`` overrides the phase derived from the path mismatches.
    """
    if phi is None:
        phi = output_phase(cfg)
    mu = source_coherence_weight(cfg)
    b = cfg.balance_angle
    coherent = ideal_state(phi, b, signal_basis)
    hh = pure_from_amplitudes(signal_basis, ("H", "V"), [[1, 0], [0, 0]])
    vv = pure_from_amplitudes(signal_basis, ("H", "V"), [[0, 0], [0, 1]])
    comps = [(mu, coherent), ((1 - mu) * np.cos(b) ** 2, hh), ((1 - mu) * np.sin(b) ** 2, vv)]
    return mixture([(w, s) for w, s in comps if w > 0])


def energy_conservation_residual(lambda_p: float, lambda_s: float, lambda_i: float) -> float:
    """1/lp - 1/ls - 1/li in nm^-1 (zero when pump frequency = signal + idler)."""
    if min(lambda_p, lambda_s, lambda_i) <= 0:
        raise ValueError("wavelengths must be positive")
    return 1.0 / lambda_p - 1.0 / lambda_s - 1.0 / lambda_i


def rayleigh_range_mm(waist_radius_um: float, lambda_nm: float) -> float:
    if waist_radius_um <= 0 or lambda_nm <= 0:
        raise ValueError("waist and wavelength must be positive")
    w0_mm = waist_radius_um * 1e-3
    return np.pi * w0_mm ** 2 / (lambda_nm * 1e-6)


def singles_rate(cfg: SourceConfig) -> float:
    """Signal photon rate (s^-1) entering the port network.

    The two pump arms share the pump power, so their sum does not depend on
    the HWP setting; imbalance only skews the state amplitudes.
    """
    return cfg.pair_rate_coeff * cfg.pump_power_mw
