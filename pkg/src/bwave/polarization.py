"""Polarization states, Jones operators and projective two-channel measurement.

Basis convention: index 0 is H, index 1 is V. An analyzer at angle ``theta``
(radians, counterclockwise from H) sends ``cos(theta)|H> + sin(theta)|V>`` to
its transmission channel ``"T"`` and the orthogonal state to ``"R"``.

Two-photon amplitudes are stored as a 2x2 array ``amps[i1, i2]`` so that the
flat order is (HH, HV, VH, VV) with photon 1 first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "NORM_TOL",
    "UNITARY_TOL",
    "NonUnitaryError",
    "DegenerateCollapseError",
    "SinglePhotonState",
    "TwoPhotonState",
    "NQubitState",
    "JonesOperator",
    "canonical_angle",
    "linear_state",
    "analyzer_state",
    "singlet",
    "product_state",
    "apply_jones_to_photon",
    "joint_probability",
    "channel_probability",
    "collapse_on_first_detection",
    "make_element",
    "hwp",
    "rotator",
    "pockels_rotator",
    "custom_unitary",
    "ghz_state",
    "measure_qubit",
    "same_up_to_phase",
]

NORM_TOL = 1e-12
UNITARY_TOL = 1e-9

Channel = Literal["T", "R"]
CHANNELS: tuple[Channel, Channel] = ("T", "R")


class NonUnitaryError(ValueError):
    """Raised when a matrix offered as an optical element is not unitary."""


class DegenerateCollapseError(ValueError):
    """Raised when conditioning on a measurement branch of zero probability."""


def _check_normalized(amps: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(amps)):
        raise ValueError(f"{what} has non-finite amplitudes")
    norm = float(np.sum(np.abs(amps) ** 2))
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{what} is not normalized (|psi|^2 = {norm!r})")


def _normalize(amps: np.ndarray) -> np.ndarray:
    return amps / np.sqrt(np.sum(np.abs(amps) ** 2))


@dataclass(frozen=True, eq=False)
class SinglePhotonState:
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(2)
        _check_normalized(amps, "SinglePhotonState")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def amp_h(self) -> complex:
        return complex(self.amps[0])

    @property
    def amp_v(self) -> complex:
        return complex(self.amps[1])


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(2, 2)
        _check_normalized(amps, "TwoPhotonState")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    def amp(self, label: str) -> complex:
        """Amplitude by basis label, e.g. ``state.amp("VH")``."""
        idx = {"H": 0, "V": 1}
        return complex(self.amps[idx[label[0]], idx[label[1]]])


@dataclass(frozen=True, eq=False)
class NQubitState:
    """Pure state of ``n`` qubits, qubit 1 being the most significant bit."""

    n: int
    amps: np.ndarray

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"only 1 to 3 qubits are supported, got n={self.n}")
        amps = np.array(self.amps, dtype=complex).reshape(2**self.n)
        _check_normalized(amps, "NQubitState")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)


@dataclass(frozen=True, eq=False)
class JonesOperator:
    """A 2x2 unitary acting on one photon's polarization."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"Jones matrix must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonUnitaryError("Jones matrix has non-finite entries")
        if not np.allclose(m.conj().T @ m, np.eye(2), rtol=0, atol=UNITARY_TOL):
            raise NonUnitaryError("Jones matrix is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def adjoint(self) -> JonesOperator:
        return JonesOperator(self.m.conj().T)

    def __matmul__(self, other: JonesOperator) -> JonesOperator:
        return JonesOperator(self.m @ other.m)

    def apply(self, state: SinglePhotonState) -> SinglePhotonState:
        return SinglePhotonState(_normalize(self.m @ state.amps))


IDENTITY = JonesOperator(np.eye(2))


def canonical_angle(theta: float) -> float:
    """Map an analyzer angle into [0, pi); orientations are defined mod pi."""
    return float(np.mod(theta, np.pi))


def linear_state(theta: float) -> SinglePhotonState:
    """Linear polarization ``cos(theta)|H> + sin(theta)|V>``."""
    return SinglePhotonState([np.cos(theta), np.sin(theta)])


def analyzer_state(theta: float, channel: Channel) -> np.ndarray:
    """Vector projected onto by the given analyzer channel."""
    if channel == "T":
        return np.array([np.cos(theta), np.sin(theta)], dtype=complex)
    if channel == "R":
        return np.array([-np.sin(theta), np.cos(theta)], dtype=complex)
    raise ValueError(f"channel must be 'T' or 'R', got {channel!r}")


def singlet() -> TwoPhotonState:
    """(|V>|H> - |H>|V>)/sqrt(2)."""
    s = 1 / np.sqrt(2)
    return TwoPhotonState([[0, -s], [s, 0]])


def product_state(first: SinglePhotonState, second: SinglePhotonState) -> TwoPhotonState:
    return TwoPhotonState(np.outer(first.amps, second.amps))


def apply_jones_to_photon(state: TwoPhotonState, photon: int, u: JonesOperator) -> TwoPhotonState:
    """Act with ``u`` on one tensor factor; the other photon is untouched."""
    if not isinstance(u, JonesOperator):
        u = JonesOperator(u)
    if photon == 1:
        amps = u.m @ state.amps
    elif photon == 2:
        amps = state.amps @ u.m.T
    else:
        raise ValueError(f"photon must be 1 or 2, got {photon!r}")
    return TwoPhotonState(_normalize(amps))


def joint_probability(state: TwoPhotonState, a: float, ch1: Channel, b: float, ch2: Channel) -> float:
    """Born probability of photon 1 in channel ``ch1`` at ``a`` and photon 2 in ``ch2`` at ``b``."""
    amp = analyzer_state(a, ch1).conj() @ state.amps @ analyzer_state(b, ch2).conj()
    return float(abs(amp) ** 2)


def channel_probability(state: SinglePhotonState, theta: float, channel: Channel) -> float:
    return float(abs(analyzer_state(theta, channel).conj() @ state.amps) ** 2)


def collapse_on_first_detection(
    state: TwoPhotonState, a: float, channel: Channel
) -> tuple[float, SinglePhotonState]:
    """Probability of photon 1 landing in ``channel`` and photon 2's conditional state."""
    partner = analyzer_state(a, channel).conj() @ state.amps
    prob = float(np.sum(np.abs(partner) ** 2))
    if prob <= NORM_TOL:
        raise DegenerateCollapseError(
            f"branch ({channel} at {a!r} rad) has probability {prob!r}; no conditional state"
        )
    return prob, SinglePhotonState(partner / np.sqrt(prob))


def same_up_to_phase(psi, phi, tol: float = 1e-9) -> bool:
    """True when ``|<psi|phi>| = 1`` within ``tol``."""
    psi = getattr(psi, "amps", psi)
    phi = getattr(phi, "amps", phi)
    overlap = np.vdot(np.ravel(psi), np.ravel(phi))
    return abs(abs(overlap) - 1.0) <= tol


# -- optical elements ---------------------------------------------------------


def rotator(theta: float) -> JonesOperator:
    """Polarization rotator: |phi> -> |phi + theta>."""
    c, s = np.cos(theta), np.sin(theta)
    return JonesOperator([[c, -s], [s, c]])


def hwp(theta: float) -> JonesOperator:
    """Half-wave plate with fast axis at ``theta``: reflects polarization about that axis."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return JonesOperator([[c, s], [s, -c]])


def pockels_rotator(theta_pc: float) -> JonesOperator:
    """Active action of a Pockels cell wired as a rotator (idle action is the identity)."""
    return rotator(theta_pc)


def custom_unitary(m) -> JonesOperator:
    return JonesOperator(m)


_ELEMENT_KINDS = {
    "hwp": hwp,
    "rotator": rotator,
    "pockels": pockels_rotator,
    "custom": custom_unitary,
}


def make_element(kind: str, param) -> JonesOperator:
    """Build a Jones operator by kind name: ``hwp``, ``rotator``, ``pockels`` or ``custom``."""
    try:
        factory = _ELEMENT_KINDS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown element kind {kind!r}; expected one of {sorted(_ELEMENT_KINDS)}") from None
    return factory(param)


# -- qubit registers ----------------------------------------------------------


def ghz_state() -> NQubitState:
    """(|000> + |111>)/sqrt(2)."""
    amps = np.zeros(8, dtype=complex)
    amps[0] = amps[7] = 1 / np.sqrt(2)
    return NQubitState(3, amps)


def measure_qubit(state: NQubitState, qubit: int) -> dict[int, tuple[float, NQubitState | None]]:
    """Computational-basis measurement of one qubit (1-based).

    Returns ``{outcome: (probability, post-measurement state of the remaining
    qubits)}``. The conditional state is ``None`` for a zero-probability
    outcome, or when no qubits remain.
    """
    if not 1 <= qubit <= state.n:
        raise ValueError(f"qubit must be in 1..{state.n}, got {qubit}")
    tensor = state.amps.reshape((2,) * state.n)
    out = {}
    for outcome in (0, 1):
        rest = np.take(tensor, outcome, axis=qubit - 1).ravel()
        prob = float(np.sum(np.abs(rest) ** 2))
        cond = None
        if state.n > 1 and prob > NORM_TOL:
            cond = NQubitState(state.n - 1, rest / np.sqrt(prob))
        out[outcome] = (prob, cond)
    return out
