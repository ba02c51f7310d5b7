"""Feedback operations conditioned on the measurement record.

Photon counting uses bang-bang pi-pulses: a single-qubit flip after one
click re-entangles the post-jump state, and a collective flip after every
other no-click interval recycles the deterministic decay (measure, flip,
measure is proportional to the collective flip itself, so Bell states of the
phi family ride a closed limit cycle).

Homodyne monitoring uses a weak local unitary built from the current
readout, chosen so that the stochastic terms it generates cancel those of
the measurement backaction on the (a, 0, 0, d) family, plus optional
scheduled collective flips that trap the state near the Bell attractor.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .measurement import HomodyneReadout
from .modealg import MeasurementSetup
from .qstate import DensityMatrix4, TwoQubitPure

__all__ = [
    "LocalOp",
    "FeedbackKind",
    "FeedbackPolicy",
    "PdPhase",
    "PdPolicyState",
    "FeedbackSingularError",
    "flip_a",
    "flip_b",
    "flip_both",
    "pd_policy_step",
    "mw_unitary",
    "schedule_flip",
]

_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
_SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
_EYE2 = np.eye(2, dtype=np.complex128)
# i*sigma_y: the pi/2-phase-free qubit flip |e> -> -|g>, |g> -> |e>
_ISY = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=np.complex128)


class FeedbackSingularError(RuntimeError):
    """The feedback weight is undefined: both |ee> and |gg> populations
    vanish, so no state of the (a, 0, 0, d) family is consistent."""


@dataclass(frozen=True)
class LocalOp:
    """Separable two-qubit operation op_a (x) op_b."""

    op_a: np.ndarray
    op_b: np.ndarray

    def full(self) -> np.ndarray:
        return np.kron(self.op_a, self.op_b)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        for op in (self.op_a, self.op_b):
            if np.abs(op @ op.conj().T - _EYE2).max() > tol:
                return False
        return True

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        psi = amplitudes.reshape(2, 2)
        return (self.op_a @ psi @ self.op_b.T).reshape(4)

    def conjugate(self, rho: np.ndarray) -> np.ndarray:
        full = self.full()
        return full @ rho @ full.conj().T


def flip_a() -> LocalOp:
    return LocalOp(_ISY.copy(), _EYE2.copy())


def flip_b() -> LocalOp:
    return LocalOp(_EYE2.copy(), _ISY.copy())


def flip_both() -> LocalOp:
    return LocalOp(_ISY.copy(), _ISY.copy())


class FeedbackKind(Enum):
    NONE = "none"
    PD_RECYCLE = "recycle"
    HOM_MW = "mw"
    HOM_MW_FLIPS = "mw-flips"


@dataclass(frozen=True)
class FeedbackPolicy:
    """Which feedback runs, and the collective-flip schedule for homodyne.

    flip_period counts measurement intervals between scheduled flips;
    t_activate holds flips off until that time (e.g. until peak
    entanglement is reached under the no-flip drift).
    """

    kind: FeedbackKind
    flip_period: int = 2
    t_activate: float = 0.0

    def __post_init__(self):
        if self.flip_period < 1:
            raise ValueError("flip_period must be a positive integer")
        if self.t_activate < 0.0:
            raise ValueError("t_activate must be nonnegative")


class PdPhase(Enum):
    AWAITING_FIRST_CLICK = "awaiting"
    IN_CYCLE = "in-cycle"


@dataclass(frozen=True)
class PdPolicyState:
    """Photodetection controller state: no action is taken before the first
    click; afterwards a parity bit alternates the collective recycle flips,
    reset on every click so the first post-click no-click step is unflipped."""

    phase: PdPhase = PdPhase.AWAITING_FIRST_CLICK
    parity: bool = False


def pd_policy_step(
    state: PdPolicyState, n3: int, n4: int
) -> tuple[LocalOp | None, PdPolicyState]:
    """Feedback decision after one photon-counting interval.

    Single click: flip qubit A (psi-family -> phi-family), enter the cycle.
    Double click: the state collapsed to |gg>; flip both qubits back to
    |ee> and await a fresh first click.
    No click while cycling: collective flip on alternating steps.
    """
    clicks = n3 + n4
    if clicks == 1:
        return flip_a(), PdPolicyState(PdPhase.IN_CYCLE, parity=False)
    if clicks == 2:
        return flip_both(), PdPolicyState(PdPhase.AWAITING_FIRST_CLICK, parity=False)
    if state.phase is PdPhase.AWAITING_FIRST_CLICK:
        return None, state
    if state.parity:
        return flip_both(), PdPolicyState(PdPhase.IN_CYCLE, parity=False)
    return None, PdPolicyState(PdPhase.IN_CYCLE, parity=True)


def _populations(state) -> tuple[float, float]:
    if isinstance(state, TwoQubitPure):
        amps = state.amplitudes
        return abs(amps[0]) ** 2, abs(amps[3]) ** 2
    if isinstance(state, DensityMatrix4):
        mat = state.matrix
        return mat[0, 0].real, mat[3, 3].real
    arr = np.asarray(state)
    if arr.ndim == 1:
        return abs(arr[0]) ** 2, abs(arr[3]) ** 2
    return arr[0, 0].real, arr[3, 3].real


def mw_unitary(
    readout: HomodyneReadout, state, setup: MeasurementSetup
) -> LocalOp:
    """Weak local feedback unitary for one homodyne interval.

    The generator is w * [r3 (sigma_y^A + sigma_y^B) + r4 (sigma_x^B -
    sigma_x^A)] * dt * sqrt(gamma/2), with readouts scaled by sqrt(eta) at
    finite efficiency.  The weight w = sqrt(rho_ee) / (sqrt(rho_ee) +
    sqrt(rho_gg)) is computed from the pre-measurement state; on the pure
    (a, 0, 0, d) family with opposite-sign amplitudes it equals a/(a - d),
    which cancels the measurement noise on that family at O(dt).
    """
    p_ee, p_gg = _populations(state)
    root_sum = np.sqrt(max(p_ee, 0.0)) + np.sqrt(max(p_gg, 0.0))
    if root_sum < 1e-9:
        raise FeedbackSingularError(
            "both |ee> and |gg> populations vanish; feedback weight undefined"
        )
    w = np.sqrt(max(p_ee, 0.0)) / root_sum
    scale = setup.dt * np.sqrt(setup.gamma / 2.0) * w
    c3 = scale * np.sqrt(setup.eta3) * readout.r3
    c4 = scale * np.sqrt(setup.eta4) * readout.r4
    return LocalOp(_su2_exp(-c4, c3), _su2_exp(c4, c3))


def _su2_exp(alpha: float, beta: float) -> np.ndarray:
    """exp(i (alpha sigma_x + beta sigma_y)) in closed form."""
    m = np.hypot(alpha, beta)
    if m == 0.0:
        return _EYE2.copy()
    return np.cos(m) * _EYE2 + 1j * (np.sin(m) / m) * (alpha * _SX + beta * _SY)


def schedule_flip(policy: FeedbackPolicy, step_index: int, t: float) -> bool:
    """Whether a collective flip closes the interval with this step_index
    that ends at time t.  Flips run only for t >= t_activate and on step
    indices divisible by flip_period."""
    if policy.kind is not FeedbackKind.HOM_MW_FLIPS:
        return False
    if t < policy.t_activate - 1e-12:
        return False
    return step_index % policy.flip_period == 0
