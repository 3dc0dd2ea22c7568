"""Two-photon states on a small labelled mode space.

Signal modes are either the two interferometer paths (``path1``, ``path2``)
or detector ports drawn from ``H, V, D, A``.  Idler modes are polarizations
from ``H, V, D, A``.  Amplitudes are stored densely as a (signal, idler)
complex matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

SIGNAL_PATHS = ("path1", "path2")
PORT_LABELS = ("H", "V", "D", "A")
IDLER_LABELS = ("H", "V", "D", "A")

NORM_TOL = 1e-10
RESCALE_TRIGGER = 1e-6


class StateError(ValueError):
    """Invalid state construction or transformation."""


def _check_basis(basis: Sequence[str], side: str) -> tuple[str, ...]:
    basis = tuple(basis)
    if not basis:
        raise StateError(f"empty {side} basis")
    if len(set(basis)) != len(basis):
        raise StateError(f"duplicate labels in {side} basis: {basis}")
    if side == "signal":
        paths = set(basis) <= set(SIGNAL_PATHS)
        ports = set(basis) <= set(PORT_LABELS)
        if not (paths or ports):
            raise StateError(f"signal basis mixes paths and ports or has unknown labels: {basis}")
    elif not set(basis) <= set(IDLER_LABELS):
        raise StateError(f"unknown idler labels: {basis}")
    return basis


@dataclass(frozen=True)
class BiPhotonPureState:
    signal_basis: tuple[str, ...]
    idler_basis: tuple[str, ...]
    amplitudes: np.ndarray
    correction: float = 1.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))

    def amplitude(self, signal_mode: str, idler_mode: str) -> complex:
        i, j = _index(self, signal_mode, idler_mode)
        return complex(self.amplitudes[i, j])


@dataclass(frozen=True)
class BiPhotonMixedState:
    """Convex combination of pure states sharing one pair of bases."""

    weights: tuple[float, ...]
    states: tuple[BiPhotonPureState, ...]

    @property
    def signal_basis(self) -> tuple[str, ...]:
        return self.states[0].signal_basis

    @property
    def idler_basis(self) -> tuple[str, ...]:
        return self.states[0].idler_basis

    @property
    def components(self) -> list[tuple[float, BiPhotonPureState]]:
        return list(zip(self.weights, self.states))

    def probabilities(self) -> np.ndarray:
        return sum(w * s.probabilities() for w, s in self.components)


State = Union[BiPhotonPureState, BiPhotonMixedState]


def _index(state: State, signal_mode: str, idler_mode: str) -> tuple[int, int]:
    try:
        return state.signal_basis.index(signal_mode), state.idler_basis.index(idler_mode)
    except ValueError:
        raise StateError(
            f"mode ({signal_mode!r}, {idler_mode!r}) not in bases "
            f"{state.signal_basis} x {state.idler_basis}"
        ) from None


def pure_from_amplitudes(signal_basis, idler_basis, amplitudes) -> BiPhotonPureState:
    """Build a normalized pure state.

    Inputs whose norm is off by more than 1e-6 are rescaled and the factor
    is kept in ``correction``; a zero-norm input is rejected.
    """
    signal_basis = _check_basis(signal_basis, "signal")
    idler_basis = _check_basis(idler_basis, "idler")
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.shape != (len(signal_basis), len(idler_basis)):
        raise StateError(
            f"amplitude shape {amps.shape} does not match bases "
            f"({len(signal_basis)}, {len(idler_basis)})"
        )
    norm = float(np.sqrt(np.sum(np.abs(amps) ** 2)))
    if norm == 0.0 or not np.isfinite(norm):
        raise StateError("degenerate state")
    correction = 1.0
    if abs(norm - 1.0) > RESCALE_TRIGGER:
        correction = norm
    # always divide so sub-trigger drift does not accumulate
    return BiPhotonPureState(signal_basis, idler_basis, amps / norm, correction)


def _check_isometry(u: np.ndarray, n_in: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[1] != n_in or u.shape[0] < n_in:
        raise StateError(f"element of shape {u.shape} cannot act on {n_in} modes")
    if np.max(np.abs(u.conj().T @ u - np.eye(n_in))) > NORM_TOL:
        raise StateError("non-unitary element")
    return u


def apply_signal_transform(state: BiPhotonPureState, u, new_signal_basis) -> BiPhotonPureState:
    """Left-multiply the amplitude table by ``u`` and relabel the signal modes.

    Column ``k`` of ``u`` is the image of old signal mode ``k``.  Besides
    square unitaries, isometries (more output ports than input modes, with
    orthonormal columns) are accepted, e.g. the three-splitter port network.
    """
    u = _check_isometry(u, len(state.signal_basis))
    new_signal_basis = _check_basis(new_signal_basis, "signal")
    if len(new_signal_basis) != u.shape[0]:
        raise StateError("new signal basis length does not match element output")
    return BiPhotonPureState(new_signal_basis, state.idler_basis, u @ state.amplitudes)


def apply_idler_transform(state: BiPhotonPureState, u, new_idler_basis) -> BiPhotonPureState:
    u = _check_isometry(u, len(state.idler_basis))
    new_idler_basis = _check_basis(new_idler_basis, "idler")
    if len(new_idler_basis) != u.shape[0]:
        raise StateError("new idler basis length does not match element output")
    return BiPhotonPureState(state.signal_basis, new_idler_basis, state.amplitudes @ u.T)


def transform(state: State, signal=None, idler=None) -> State:
    """Apply ``(u, basis)`` pairs to each side of a pure or mixed state."""
    if isinstance(state, BiPhotonMixedState):
        return BiPhotonMixedState(state.weights, tuple(transform(s, signal, idler) for s in state.states))
    if signal is not None:
        state = apply_signal_transform(state, *signal)
    if idler is not None:
        state = apply_idler_transform(state, *idler)
    return state


def joint_probability(state: State, signal_mode: str, idler_mode: str) -> float:
    i, j = _index(state, signal_mode, idler_mode)
    return float(state.probabilities()[i, j])


def mixture(components) -> BiPhotonMixedState:
    components = list(components)
    if not components:
        raise StateError("empty mixture")
    weights = np.array([float(w) for w, _ in components])
    states = tuple(s for _, s in components)
    if np.any(weights < 0):
        raise StateError("negative mixture weight")
    if weights.sum() <= 0:
        raise StateError("mixture weights sum to zero")
    first = states[0]
    for s in states[1:]:
        if s.signal_basis != first.signal_basis or s.idler_basis != first.idler_basis:
            raise StateError("mixture components have different bases")
    weights = weights / weights.sum()
    return BiPhotonMixedState(tuple(float(w) for w in weights), states)


def as_mixed(state: State) -> BiPhotonMixedState:
    if isinstance(state, BiPhotonMixedState):
        return state
    return BiPhotonMixedState((1.0,), (state,))


def overlap(a: BiPhotonPureState, b: BiPhotonPureState) -> float:
    """|<a|b>|; equals 1 for states equal up to a global phase."""
    if a.signal_basis != b.signal_basis or a.idler_basis != b.idler_basis:
        raise StateError("overlap of states on different bases")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def reduced_idler(state: State, signal_mode: str) -> np.ndarray:
    """Unnormalized idler density matrix conditioned on one signal mode."""
    i = state.signal_basis.index(signal_mode)
    rho = np.zeros((len(state.idler_basis),) * 2, dtype=complex)
    for w, s in as_mixed(state).components:
        row = s.amplitudes[i]
        rho += w * np.outer(row, row.conj())
    return rho
