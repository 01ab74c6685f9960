"""Dense statevector primitives for the three circuit families.

Amplitudes are double-precision complex over ``2**k`` basis states with
little-endian ordering (qubit 0 is the least significant index bit).
Rotation gates follow the half-angle convention, e.g.

    RY(t) = [[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]],

so ``RY(pi)|0> = |1>`` with a real positive amplitude.  Only
probabilities and real expectations are consumed downstream, so the
global phase convention is irrelevant.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "StateVector",
    "GateSpec",
    "zero_state",
    "plus_state",
    "apply_gate",
    "apply_ry",
    "apply_rx",
    "apply_h",
    "apply_cz",
    "apply_diagonal_phase",
    "probabilities",
    "sample_counts",
]

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)


class StateVector:
    """Thin wrapper pairing an amplitude array with its qubit count.

    Gate application returns a new instance; the amplitude buffer of an
    existing instance is never mutated.
    """

    __slots__ = ("k", "amps")

    def __init__(self, amps: np.ndarray, k: int | None = None, copy: bool = True):
        amps = np.array(amps, dtype=complex, copy=copy)
        if k is None:
            k = int(amps.size).bit_length() - 1
        if amps.shape != (1 << k,):
            raise ValueError(f"expected {1 << k} amplitudes, got shape {amps.shape}")
        self.k = k
        self.amps = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def zero_state(k: int) -> StateVector:
    amps = np.zeros(1 << k, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps, k, copy=False)


def plus_state(k: int) -> StateVector:
    amps = np.full(1 << k, 2.0 ** (-k / 2.0), dtype=complex)
    return StateVector(amps, k, copy=False)


def _check_target(s: StateVector, target: int):
    if not 0 <= target < s.k:
        raise ValueError(f"qubit index {target} out of range for k={s.k}")


def _apply_1q(s: StateVector, matrix: np.ndarray, target: int) -> StateVector:
    a = s.amps.reshape(1 << (s.k - target - 1), 2, 1 << target)
    out = np.einsum("ab,xbk->xak", matrix, a)
    return StateVector(out.reshape(-1), s.k, copy=False)


def apply_ry(s: StateVector, angle: float, target: int) -> StateVector:
    _check_target(s, target)
    c, d = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return _apply_1q(s, np.array([[c, -d], [d, c]], dtype=complex), target)


def apply_rx(s: StateVector, angle: float, target: int) -> StateVector:
    _check_target(s, target)
    c, d = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return _apply_1q(s, np.array([[c, -1j * d], [-1j * d, c]], dtype=complex), target)


def apply_h(s: StateVector, target: int) -> StateVector:
    _check_target(s, target)
    return _apply_1q(s, _H, target)


def apply_cz(s: StateVector, control: int, target: int) -> StateVector:
    _check_target(s, control)
    _check_target(s, target)
    if control == target:
        raise ValueError("control and target must differ")
    idx = np.arange(1 << s.k)
    mask = ((idx >> control) & 1).astype(bool) & ((idx >> target) & 1).astype(bool)
    out = s.amps.copy()
    out[mask] *= -1.0
    return StateVector(out, s.k, copy=False)


def apply_diagonal_phase(s: StateVector, gamma: float, energies: np.ndarray) -> StateVector:
    """Multiply each amplitude by ``exp(-i * gamma * E_q)``."""
    energies = np.asarray(energies, dtype=float)
    if energies.shape != s.amps.shape:
        raise ValueError(f"need {s.amps.size} energies, got shape {energies.shape}")
    return StateVector(s.amps * np.exp(-1j * gamma * energies), s.k, copy=False)


class GateSpec:
    """Declarative gate description for the generic dispatcher.

    Kinds: ``ry(angle, target)``, ``rx(angle, target)``, ``h(target)``,
    ``cz(control, target)``, ``diagonal_phase(gamma, energies)``.
    """

    __slots__ = ("kind", "qubits", "angle", "energies")

    def __init__(self, kind: str, qubits: tuple[int, ...] = (), angle: float = 0.0, energies=None):
        self.kind = kind
        self.qubits = tuple(qubits)
        self.angle = angle
        self.energies = energies


def apply_gate(s: StateVector, g: GateSpec) -> StateVector:
    """Apply one gate described by a :class:`GateSpec`."""
    if g.kind == "ry":
        return apply_ry(s, g.angle, g.qubits[0])
    if g.kind == "rx":
        return apply_rx(s, g.angle, g.qubits[0])
    if g.kind == "h":
        return apply_h(s, g.qubits[0])
    if g.kind == "cz":
        return apply_cz(s, g.qubits[0], g.qubits[1])
    if g.kind == "diagonal_phase":
        return apply_diagonal_phase(s, g.angle, g.energies)
    raise ValueError(f"unknown gate kind {g.kind!r}")


def probabilities(s: StateVector) -> np.ndarray:
    return np.abs(s.amps) ** 2


def sample_counts(s: StateVector, n_shots: int, rng: np.random.Generator) -> dict[str, int]:
    """Multinomial shot counts over basis states.

    Sampling inverts the cumulative probability table, so results are
    reproducible for a fixed generator state.  Keys are bitstrings of the
    sampled states; only observed states appear.
    """
    if n_shots < 1:
        raise ValueError(f"n_shots must be positive, got {n_shots}")
    probs = probabilities(s)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    draws = rng.random(n_shots)
    states = np.searchsorted(cdf, draws, side="right")
    values, counts = np.unique(states, return_counts=True)
    return {format(int(v), f"0{s.k}b"): int(c) for v, c in zip(values, counts)}
