"""Two-qubit states and entanglement measures.

Basis ordering is {|ee>, |eg>, |ge>, |gg>} everywhere in this package, and
amplitude tuples (a, b, c, d) refer to that order.  Qubit A is the left
letter, qubit B the right one.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "BellLabel",
    "TwoQubitPure",
    "DensityMatrix4",
    "bell_state",
    "concurrence_pure",
    "concurrence_mixed",
    "purity",
    "fidelity_to",
]

_SQRT2 = np.sqrt(2.0)

# sigma_y (x) sigma_y, the spin-flip conjugation used by the Wootters formula
_YY = np.zeros((4, 4), dtype=np.complex128)
_YY[0, 3] = -1.0
_YY[1, 2] = 1.0
_YY[2, 1] = 1.0
_YY[3, 0] = -1.0
_YY.setflags(write=False)


class BellLabel(Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"


_BELL_AMPS = {
    BellLabel.PHI_PLUS: np.array([1, 0, 0, 1], dtype=np.complex128) / _SQRT2,
    BellLabel.PHI_MINUS: np.array([1, 0, 0, -1], dtype=np.complex128) / _SQRT2,
    BellLabel.PSI_PLUS: np.array([0, 1, 1, 0], dtype=np.complex128) / _SQRT2,
    BellLabel.PSI_MINUS: np.array([0, 1, -1, 0], dtype=np.complex128) / _SQRT2,
}


def _as_amplitudes(state) -> np.ndarray:
    if isinstance(state, TwoQubitPure):
        return state.amplitudes
    amps = np.asarray(state, dtype=np.complex128)
    if amps.shape != (4,):
        raise ValueError(f"expected 4 amplitudes, got shape {amps.shape}")
    return amps


def _as_density(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix4):
        return rho.matrix
    if isinstance(rho, TwoQubitPure):
        return rho.density()
    mat = np.asarray(rho, dtype=np.complex128)
    if mat.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {mat.shape}")
    return mat


@dataclass(frozen=True)
class TwoQubitPure:
    """Pure two-qubit state; unit norm is enforced at construction."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"state norm {norm!r} is not 1 within 1e-9")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> "TwoQubitPure":
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityMatrix4:
    """Two-qubit density matrix; Hermiticity, unit trace and positivity
    (within 1e-8) are validated at construction."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {mat.shape}")
        if not np.allclose(mat, mat.conj().T, atol=1e-8):
            raise ValueError("density matrix is not Hermitian within 1e-8")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > 1e-8:
            raise ValueError(f"density matrix trace {tr!r} is not 1 within 1e-8")
        if np.linalg.eigvalsh(mat).min() < -1e-8:
            raise ValueError("density matrix has an eigenvalue below -1e-8")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_pure(cls, state: TwoQubitPure) -> "DensityMatrix4":
        return cls(state.density())


def bell_state(label: BellLabel) -> TwoQubitPure:
    return TwoQubitPure(_BELL_AMPS[label].copy())


def concurrence_pure(state) -> float:
    """Concurrence 2|ad - bc| of a pure state (a, b, c, d).

    For states with b = c = 0 this reduces exactly to 2|ad|.
    """
    a, b, c, d = _as_amplitudes(state)
    return 2.0 * abs(a * d - b * c)


def _concurrence_rho(rho: np.ndarray) -> float:
    """Wootters concurrence of a raw 4x4 density matrix (no validation).

    The four roots are computed as singular values of sqrt(rho) YY
    conj(sqrt(rho)) rather than square roots of eigenvalues of the product
    rho * rho_tilde; the latter loses half the digits on the near-zero
    eigenvalues while singular values stay accurate to machine precision.
    """
    evals, evecs = np.linalg.eigh(rho)
    root = (evecs * np.sqrt(np.maximum(evals, 0.0))) @ evecs.conj().T
    sv = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    return max(0.0, sv[0] - sv[1] - sv[2] - sv[3])


def concurrence_mixed(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    Rejects non-Hermitian or non-unit-trace input (via DensityMatrix4
    validation when a raw array is passed).
    """
    if not isinstance(rho, DensityMatrix4):
        rho = DensityMatrix4(_as_density(rho))
    return _concurrence_rho(rho.matrix)


def purity(rho) -> float:
    """tr(rho^2); equals 1 exactly for projectors onto pure states."""
    mat = _as_density(rho)
    return float(np.einsum("ij,ji->", mat, mat).real)


def fidelity_to(state: TwoQubitPure, rho) -> float:
    """Fidelity <psi|rho|psi> of a density matrix against a pure target."""
    amps = _as_amplitudes(state)
    mat = _as_density(rho)
    return float((amps.conj() @ mat @ amps).real)
