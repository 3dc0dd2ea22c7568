"""Click probabilities, count-rate model, Monte Carlo counting and metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optics import hwp, signal_port_network
from .source import SourceConfig, effective_state, singles_rate
from .states import (
    PORT_LABELS,
    BiPhotonMixedState,
    State,
    StateError,
    as_mixed,
    reduced_idler,
    transform,
)

PORTS = PORT_LABELS
OUTCOMES = ("transmit", "reflect")


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    eta_s: float = 0.6
    eta_i: float = 0.18
    gate_ns: float = 2.5
    # uncorrelated photon flux at the idler APD; with the default gate and
    # efficiencies this yields 0.5e3 s^-1 accidentals per port
    uncorrelated_idler_rate_hz: float = 500.0 / (7.5e4 * 0.18 * 2.5e-9)
    # fiber coupling, isolator and 100 m SMF transmission of the idler arm;
    # sets the peak true coincidence rate to 1.05e4 s^-1 per port
    idler_transmission: float = 7.0 / 9.0
    thz_per_nm: float = 0.125

    def __post_init__(self):
        for name in ("eta_s", "eta_i", "idler_transmission"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.gate_ns <= 0:
            raise ValueError(f"gate_ns must be positive, got {self.gate_ns}")
        if self.uncorrelated_idler_rate_hz < 0:
            raise ValueError("uncorrelated_idler_rate_hz must be non-negative")
        if self.thz_per_nm <= 0:
            raise ValueError("thz_per_nm must be positive")

    @property
    def accidental_probability(self) -> float:
        """Probability that one gate holds an uncorrelated idler click."""
        # gate last, so halving it halves the result bit-exactly
        return self.eta_i * self.uncorrelated_idler_rate_hz * 1e-9 * self.gate_ns


@dataclass
class CountRecord:
    """Per-port rates (s^-1), ports ordered H, V, D, A.

    ``coincidences`` are raw gated coincidences (true plus accidental);
    ``accidentals`` is the separately measured accidental rate.
    """

    singles_s: np.ndarray
    coincidences: np.ndarray
    accidentals: np.ndarray
    duration_s: float = 0.0
    pump_power_mw: float = 0.0
    analyzer_angle_rad: float = 0.0
    true_coincidences: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("singles_s", "coincidences", "accidentals"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.true_coincidences is None:
            self.true_coincidences = self.coincidences - self.accidentals
        self.true_coincidences = np.asarray(self.true_coincidences, dtype=float)

    def port(self, name: str) -> dict:
        k = PORTS.index(name)
        return {
            "singles_s": float(self.singles_s[k]),
            "coincidences": float(self.coincidences[k]),
            "accidentals": float(self.accidentals[k]),
        }

    def conditional_probability(self) -> tuple[np.ndarray, float]:
        """R_c/R_s both per port and against the aggregate signal singles."""
        with np.errstate(divide="ignore", invalid="ignore"):
            per_port = np.where(self.singles_s > 0, self.coincidences / self.singles_s, 0.0)
        total = self.singles_s.sum()
        return per_port, float(self.coincidences.mean() / total) if total > 0 else 0.0


def analyzer_projectors(hwp_angle_rad: float) -> tuple[np.ndarray, np.ndarray]:
    """Idler polarizations sent to the PBS transmit and reflect ports."""
    u = hwp(hwp_angle_rad).matrix
    # hwp is real symmetric, so the preimage of H/V is just its rows
    return u[0].copy(), u[1].copy()


def port_state(state: State) -> State:
    """Push a path-basis state through the three-splitter network."""
    if tuple(state.signal_basis) == PORTS:
        return state
    if len(state.signal_basis) != 2:
        raise StateError(f"cannot map signal basis {state.signal_basis} onto the four ports")
    return transform(state, signal=(signal_port_network(), PORTS))


def coincidence_probabilities(state: State, hwp_angle: float) -> np.ndarray:
    """4x2 table P(port, analyzer outcome); columns are PBS transmit, reflect."""
    if tuple(state.signal_basis) != PORTS or tuple(state.idler_basis) != ("H", "V"):
        raise StateError(
            f"expected signal ports {PORTS} and idler (H, V), got "
            f"{state.signal_basis} x {state.idler_basis}"
        )
    u = hwp(hwp_angle).matrix
    analyzed = transform(state, idler=(u, ("H", "V")))
    return as_mixed(analyzed).probabilities()


def source_port_state(cfg: SourceConfig, phi: float | None = None) -> BiPhotonMixedState:
    return port_state(effective_state(cfg, signal_basis=("path1", "path2"), phi=phi))


def expected_rates(cfg: SourceConfig, det: DetectorConfig, hwp_angle: float,
                   phi: float | None = None) -> CountRecord:
    table = coincidence_probabilities(source_port_state(cfg, phi), hwp_angle)
    marginal = table.sum(axis=1)
    singles = singles_rate(cfg) * det.eta_s * marginal
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(marginal > 0, table[:, 0] / marginal, 0.0)
    true = singles * det.eta_i * det.idler_transmission * cond
    acc = singles * det.accidental_probability
    return CountRecord(singles, true + acc, acc, 0.0, cfg.pump_power_mw, hwp_angle, true)


def simulate_counts(cfg: SourceConfig, det: DetectorConfig, hwp_angle: float,
                    duration_s: float, seed, phi: float | None = None) -> CountRecord:
    """Counting experiment of length ``duration_s`` seeded by ``seed``.

    Signal clicks are Poisson; each click opens an idler gate that holds a
    true coincidence, an accidental, or nothing (multinomial).  Accidentals
    are also estimated from an independent run of random triggers at the
    signal rate, as done with a randomly triggered InGaAs APD.
    """
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    ref = expected_rates(cfg, det, hwp_angle, phi)
    n_singles = rng.poisson(ref.singles_s * duration_s)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_true = np.where(ref.singles_s > 0, ref.true_coincidences / ref.singles_s, 0.0)
    p_acc = det.accidental_probability
    n_true = np.empty(4, dtype=np.int64)
    n_acc = np.empty(4, dtype=np.int64)
    for k in range(4):
        n_true[k], n_acc[k], _ = rng.multinomial(n_singles[k], [p_true[k], p_acc, 1.0 - p_true[k] - p_acc])
    n_random = rng.binomial(rng.poisson(ref.singles_s * duration_s), p_acc)
    return CountRecord(
        n_singles / duration_s,
        (n_true + n_acc) / duration_s,
        n_random / duration_s,
        duration_s,
        cfg.pump_power_mw,
        hwp_angle,
        n_true / duration_s,
    )


def point_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent per-point seeds derived from a master seed and the index."""
    return np.random.SeedSequence(seed).spawn(n)


def fringe_scan(cfg: SourceConfig, det: DetectorConfig, angles, duration_per_point: float,
                seed: int, phi: float | None = None) -> list[CountRecord]:
    angles = list(angles)
    if not angles:
        raise ValueError("empty angle list")
    seeds = point_seeds(seed, len(angles))
    return [simulate_counts(cfg, det, a, duration_per_point, s, phi) for a, s in zip(angles, seeds)]


def analytic_scan(cfg: SourceConfig, det: DetectorConfig, angles, phi: float | None = None) -> list[CountRecord]:
    return [expected_rates(cfg, det, a, phi) for a in angles]


def fit_fringe(angles, rates) -> tuple[float, float, float]:
    """Least-squares fit of ``a + b cos(4 theta - delta)``; returns (a, b, delta).

    A HWP analyzer rotates the measured polarization by 2 theta, so Malus
    fringes go as cos(4 theta): period pi/2, extrema pi/4 apart.
    """
    angles = np.asarray(angles, dtype=float)
    design = np.column_stack([np.ones_like(angles), np.cos(4 * angles), np.sin(4 * angles)])
    (a, c, s), *_ = np.linalg.lstsq(design, np.asarray(rates, dtype=float), rcond=None)
    return float(a), float(np.hypot(c, s)), float(np.arctan2(s, c))


def fringe_visibility(angles, rates) -> float:
    a, b, _ = fit_fringe(angles, rates)
    return b / a if a > 0 else 0.0


def interference_contrast(state: State, port: str = "D") -> float:
    """Phase-insensitive idler coherence 2|rho_HV|/tr(rho) behind one port."""
    rho = reduced_idler(state, port)
    tr = np.real(np.trace(rho))
    return float(2 * abs(rho[0, 1]) / tr) if tr > 0 else 0.0


def visibility(r_c: float, r_a: float) -> float:
    if r_c < 0 or r_a < 0:
        raise MetricError("rates must be non-negative")
    if r_c + r_a <= 0:
        raise MetricError("visibility undefined for zero rates")
    return (r_c - r_a) / (r_c + r_a)


def qber(r_c, r_a) -> float:
    """Mean of R_a/R_c over the ports."""
    r_c = np.asarray(r_c, dtype=float)
    r_a = np.asarray(r_a, dtype=float)
    if r_c.shape != r_a.shape or r_c.size == 0:
        raise MetricError("need matching, non-empty coincidence and accidental rates")
    if np.any(r_c <= 0):
        raise MetricError("zero coincidence rate on a port")
    return float(np.mean(r_a / r_c))


def spectral_brightness(r_c_per_port: float, eta_s: float, eta_i: float, p_mw: float,
                        bandwidth_nm: float, thz_per_nm: float = 0.125, n_ports: int = 4) -> float:
    """Fiber-coupled pair rate per THz per mW, in s^-1 THz^-1 mW^-1."""
    if min(r_c_per_port, eta_s, eta_i, p_mw, bandwidth_nm, thz_per_nm) <= 0:
        raise MetricError("brightness inputs must be positive")
    return n_ports * r_c_per_port / (eta_s * eta_i) / p_mw / (thz_per_nm * bandwidth_nm)
