"""Jones matrices and mode maps for the optical elements of the source.

Conventions (frozen, tests depend on them):

* lossless beam splitter ``[[r, i t], [i t, r]]`` so the transmitted
  amplitude leads the reflected one by pi/2;
* half-wave plate as the reflection ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]``
  with no extra global phase;
* quarter-wave plate ``diag(1, i)`` with its fast axis horizontal.

All matrices act on column vectors ordered (H, V) or (port 1, port 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

UNITARY_TOL = 1e-12


class ElementError(ValueError):
    pass


@dataclass(frozen=True)
class ElementSpec:
    kind: str
    parameters: dict
    matrix: np.ndarray
    routes: dict = field(default_factory=dict)

    def apply(self, jones) -> np.ndarray:
        return self.matrix @ np.asarray(jones, dtype=complex)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))) < tol)


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def symmetric_bs(r: float) -> ElementSpec:
    if not 0.0 < r < 1.0:
        raise ElementError(f"reflection amplitude must lie in (0, 1), got {r}")
    t = np.sqrt(1.0 - r * r)
    u = np.array([[r, 1j * t], [1j * t, r]], dtype=complex)
    return ElementSpec("symmetric_bs", {"r": r, "t": t}, u)


def hwp(theta: float) -> ElementSpec:
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    u = np.array([[c, s], [s, -c]], dtype=complex)
    return ElementSpec("hwp", {"theta": theta}, u)


def qwp(theta: float) -> ElementSpec:
    u = _rotation(-theta) @ np.diag([1.0, 1j]) @ _rotation(theta)
    return ElementSpec("qwp", {"theta": theta}, u)


def pbs() -> ElementSpec:
    """Polarizing splitter as a routing: H is transmitted, V reflected."""
    return ElementSpec(
        "pbs", {}, np.eye(2, dtype=complex), routes={"H": "transmit", "V": "reflect"}
    )


def pbs_route(jones) -> dict[str, complex]:
    """Amplitudes leaving each port of the PBS for an (H, V) Jones vector."""
    h, v = np.asarray(jones, dtype=complex)
    return {"transmit": complex(h), "reflect": complex(v)}


def phase_shift(lambda_nm: float, delta_L_nm: float) -> complex:
    """Phase factor exp(i 2 pi dL / lambda) for an arm length difference."""
    if lambda_nm <= 0:
        raise ElementError(f"wavelength must be positive, got {lambda_nm}")
    return complex(np.exp(2j * np.pi * delta_L_nm / lambda_nm))


def phase_element(lambda_nm: float, delta_L_nm: float) -> ElementSpec:
    f = phase_shift(lambda_nm, delta_L_nm)
    return ElementSpec(
        "phase_shift",
        {"lambda_nm": lambda_nm, "delta_L_nm": delta_L_nm},
        np.diag([1.0, f]).astype(complex),
    )


# idler H/V -> D/A change of basis: H = (D - A)/sqrt2, V = (D + A)/sqrt2
HV_TO_DA = np.array([[1.0, 1.0], [-1.0, 1.0]], dtype=complex) / np.sqrt(2)
DA_TO_HV = HV_TO_DA.conj().T


@lru_cache(maxsize=None)
def signal_port_network() -> np.ndarray:
    """4x2 isometry from the two signal paths onto the detector ports.

    Each path meets a 50-50 splitter; the reflected output goes straight to
    detector H (path 1) or V (path 2), the transmitted outputs recombine on
    a third 50-50 splitter feeding D and A.  Rows are ordered H, V, D, A.
    """
    bs = symmetric_bs(1 / np.sqrt(2)).matrix
    r, t = bs[0, 0], bs[1, 0]
    out = np.zeros((4, 2), dtype=complex)
    out[0, 0] = r
    out[1, 1] = r
    out[2:, :] = t * bs
    out.setflags(write=False)
    return out
