"""Fock-space construction of the joint qubit-field measurement operator.

One decay interval of length dt maps the two-qubit state and the (initially
empty) output field modes through a single joint matrix whose 4x4 qubit
blocks are polynomials in the creation operators of the monitored ports.
Photodetection and homodyne Kraus operators are then matrix elements of that
joint operator between field vacuum and the detected field state, so both
measurement schemes and their lossy variants come out of one construction.

Port convention: the two fluorescence channels interfere on a balanced
beamsplitter whose outputs are port 3 (phase phi3, default 0) and port 4
(phase phi4, default 90 degrees).  Detector loss is modeled by a second
beamsplitter per port that routes a fraction 1 - eta into an unmonitored
loss mode, giving the four-mode layout (3s, 4s, 3l, 4l).
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "PD_OUTCOMES",
    "FockSpace",
    "MeasurementSetup",
    "JointOperator",
    "KrausSet",
    "creation_operator",
    "build_joint_matrix",
    "apply_loss_splitters",
    "extract_pd_kraus",
    "extract_hom_kraus",
    "extract_lossy_kraus",
]

# detected photon-number outcomes with up to two quanta in the interval
PD_OUTCOMES = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2))


@dataclass(frozen=True)
class FockSpace:
    """Truncated bosonic Fock space over n_modes with bounded total number.

    The matrix of interest creates at most two photons out of vacuum; the
    default truncation keeps one extra quantum of headroom so that the
    no-amplitude-beyond-two property is asserted rather than assumed.
    """

    n_modes: int
    max_total: int = 3

    @cached_property
    def states(self) -> tuple[tuple[int, ...], ...]:
        occs = itertools.product(range(self.max_total + 1), repeat=self.n_modes)
        return tuple(o for o in occs if sum(o) <= self.max_total)

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {occ: i for i, occ in enumerate(self.states)}

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def vacuum_index(self) -> int:
        return self._index[(0,) * self.n_modes]

    def index_of(self, occ: tuple[int, ...]) -> int:
        return self._index[tuple(occ)]

    def total_photons(self) -> np.ndarray:
        return np.array([sum(o) for o in self.states])


def creation_operator(space: FockSpace, mode: int) -> np.ndarray:
    """Matrix of a_dagger for one mode; amplitudes that would leave the
    truncated space are dropped."""
    op = np.zeros((space.dim, space.dim))
    for i, occ in enumerate(space.states):
        if sum(occ) >= space.max_total:
            continue
        lifted = list(occ)
        lifted[mode] += 1
        j = space.index_of(tuple(lifted))
        op[j, i] = np.sqrt(occ[mode] + 1.0)
    return op


@dataclass(frozen=True)
class MeasurementSetup:
    """Monitoring parameters for one decay interval.

    gamma is the (identical) decay rate of both qubits, dt the interval
    length, so eps = gamma * dt is the per-step decay probability scale.
    """

    gamma: float = 1.0
    dt: float = 0.01
    phi3: float = 0.0
    phi4: float = np.pi / 2
    eta3: float = 1.0
    eta4: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not (0.0 <= self.eta3 <= 1.0 and 0.0 <= self.eta4 <= 1.0):
            raise ValueError("efficiencies must lie in [0, 1]")
        if self.eps >= 1.0:
            raise ValueError(f"eps = gamma*dt = {self.eps!r} must be below 1")
        if self.eps > 0.1:
            warnings.warn(
                f"eps = gamma*dt = {self.eps:.3g} is large; the per-step "
                "expansion assumes eps << 1",
                stacklevel=2,
            )

    @property
    def eps(self) -> float:
        return self.gamma * self.dt

    @property
    def ideal(self) -> bool:
        return self.eta3 == 1.0 and self.eta4 == 1.0


@dataclass(frozen=True)
class JointOperator:
    """4x4 grid of field-space blocks representing the joint decay matrix.

    blocks[r, c] is the field operator multiplying the qubit transition
    |r><c| in the {ee, eg, ge, gg} ordering.  lossy marks whether the field
    space is the two-port signal space or the four-mode signal+loss space.
    """

    blocks: np.ndarray
    space: FockSpace
    setup: MeasurementSetup
    lossy: bool

    def vacuum_columns(self) -> np.ndarray:
        """blocks[:, :] acting on field vacuum, shape (4, 4, dim)."""
        return self.blocks[:, :, :, self.space.vacuum_index]


def _assemble_blocks(
    space: FockSpace, setup: MeasurementSetup, ad3: np.ndarray, ad4: np.ndarray
) -> np.ndarray:
    """Fill the 4x4 qubit grid given creation operators for the two ports."""
    eps = setup.eps
    dim = space.dim
    # beamsplitter relation between the qubit emission ports (1 = qubit A,
    # 2 = qubit B) and the monitored output ports 3, 4
    ad1 = (np.exp(1j * setup.phi3) * ad3 + np.exp(1j * setup.phi4) * ad4) / np.sqrt(2.0)
    ad2 = (np.exp(1j * setup.phi3) * ad3 - np.exp(1j * setup.phi4) * ad4) / np.sqrt(2.0)
    eye = np.eye(dim)

    blocks = np.zeros((4, 4, dim, dim), dtype=np.complex128)
    blocks[0, 0] = (1.0 - eps) * eye
    blocks[1, 0] = np.sqrt(eps * (1.0 - eps)) * ad2  # B decayed: ee -> eg
    blocks[2, 0] = np.sqrt(eps * (1.0 - eps)) * ad1  # A decayed: ee -> ge
    blocks[1, 1] = np.sqrt(1.0 - eps) * eye
    blocks[2, 2] = np.sqrt(1.0 - eps) * eye
    blocks[3, 0] = eps * (ad1 @ ad2)                 # both decayed
    blocks[3, 1] = np.sqrt(eps) * ad1                # A decayed: eg -> gg
    blocks[3, 2] = np.sqrt(eps) * ad2                # B decayed: ge -> gg
    blocks[3, 3] = eye
    return blocks


def _check_vacuum_support(j: JointOperator) -> None:
    """Assert that acting on vacuum never populates more than two photons,
    so the truncation at total occupation <= 2 is exact, not approximate."""
    heavy = j.space.total_photons() > 2
    leaked = np.abs(j.vacuum_columns()[:, :, heavy]).max() if heavy.any() else 0.0
    if leaked > 0.0:
        raise AssertionError(
            f"joint matrix leaks amplitude {leaked!r} beyond two photons"
        )


def build_joint_matrix(setup: MeasurementSetup) -> JointOperator:
    """Joint qubit+field matrix on the two monitored ports (no loss modes)."""
    space = FockSpace(n_modes=2)
    ad3 = creation_operator(space, 0)
    ad4 = creation_operator(space, 1)
    j = JointOperator(_assemble_blocks(space, setup, ad3, ad4), space, setup, lossy=False)
    _check_vacuum_support(j)
    return j


def apply_loss_splitters(j: JointOperator) -> JointOperator:
    """Rebuild the joint matrix on the four-mode (3s, 4s, 3l, 4l) space with
    each port split into a monitored signal mode and an unmonitored loss mode.

    With eta3 = eta4 = 1 the result acts trivially on the loss modes and
    reproduces the input blocks on the signal sector.
    """
    if j.lossy:
        raise ValueError("loss splitters were already applied")
    setup = j.setup
    space = FockSpace(n_modes=4)
    ops = [creation_operator(space, m) for m in range(4)]
    ad3 = np.sqrt(setup.eta3) * ops[0] + np.sqrt(1.0 - setup.eta3) * ops[2]
    ad4 = np.sqrt(setup.eta4) * ops[1] + np.sqrt(1.0 - setup.eta4) * ops[3]
    jl = JointOperator(_assemble_blocks(space, setup, ad3, ad4), space, setup, lossy=True)
    _check_vacuum_support(jl)
    return jl


@dataclass(frozen=True)
class KrausSet:
    """Labeled collection of 4x4 qubit Kraus operators for one measurement."""

    labels: tuple
    operators: np.ndarray  # (n, 4, 4) complex

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=np.complex128)
        if ops.shape != (len(self.labels), 4, 4):
            raise ValueError("operators must have shape (len(labels), 4, 4)")
        object.__setattr__(self, "operators", ops)

    def effects(self) -> np.ndarray:
        """POVM elements M_dagger M, shape (n, 4, 4)."""
        return np.einsum("kij,kil->kjl", self.operators.conj(), self.operators)

    def completeness_defect(self) -> float:
        """Max-abs deviation of sum(M_dagger M) from the identity."""
        return float(np.abs(self.effects().sum(axis=0) - np.eye(4)).max())

    def probabilities(self, amplitudes: np.ndarray) -> np.ndarray:
        out = self.operators @ amplitudes
        return (out.real**2 + out.imag**2).sum(axis=1)


def _fock_bra_indices(space: FockSpace, detected: tuple[int, ...]) -> int:
    return space.index_of(detected)


def extract_pd_kraus(j: JointOperator) -> KrausSet:
    """Photon-counting Kraus operators <n3 n4| M |vac> for the five
    two-photon-bounded outcomes; only valid for the lossless operator."""
    if j.lossy:
        raise ValueError("use extract_lossy_kraus for the four-mode operator")
    cols = j.vacuum_columns()
    ops = np.empty((len(PD_OUTCOMES), 4, 4), dtype=np.complex128)
    for k, (n3, n4) in enumerate(PD_OUTCOMES):
        ops[k] = cols[:, :, j.space.index_of((n3, n4))]
    return KrausSet(PD_OUTCOMES, ops)


def _hermite_functions(x: float, n_max: int) -> np.ndarray:
    """Quadrature-representation overlaps <x|n> for n = 0..n_max.

    These are the harmonic oscillator position wavefunctions in units where
    <x|0> = pi^(-1/4) exp(-x^2/2); recurrence
    <x|n> = sqrt(2/n) x <x|n-1> - sqrt((n-1)/n) <x|n-2>.
    """
    h = np.empty(n_max + 1)
    h[0] = np.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if n_max >= 1:
        h[1] = np.sqrt(2.0) * x * h[0]
    for n in range(2, n_max + 1):
        h[n] = np.sqrt(2.0 / n) * x * h[n - 1] - np.sqrt((n - 1.0) / n) * h[n - 2]
    return h


def quadrature_weight(x: float, y: float) -> float:
    """Vacuum quadrature amplitude pi^(-1/2) exp(-(X^2+Y^2)/2); the exact
    Kraus matrix elements carry this prefactor so that the continuous POVM
    integrates to the identity with a flat dX dY measure."""
    return float(np.pi ** (-0.5) * np.exp(-0.5 * (x * x + y * y)))


def extract_hom_kraus(j: JointOperator, x: float, y: float) -> tuple[np.ndarray, float]:
    """Dual-homodyne Kraus operator <X Y| M |vac> and its Gaussian weight.

    Returns (kraus, weight) where kraus already includes the weight; divide
    by weight to recover the bare polynomial matrix (entries like
    eps*(X^2+Y^2-1) at the default 0/90-degree phases).
    """
    if j.lossy:
        raise ValueError("use extract_lossy_kraus for the four-mode operator")
    h3 = _hermite_functions(x, j.space.max_total)
    h4 = _hermite_functions(y, j.space.max_total)
    cols = j.vacuum_columns()
    bra = np.array([h3[n3] * h4[n4] for (n3, n4) in j.space.states])
    return np.tensordot(cols, bra, axes=([2], [0])), quadrature_weight(x, y)


def extract_lossy_kraus(j: JointOperator, scheme: str, outcome) -> KrausSet:
    """Kraus operators for one observed signal outcome of the lossy operator,
    one per unobserved loss-mode occupation (l3, l4).

    scheme "pd": outcome is the detected click pair (n3, n4).
    scheme "homodyne": outcome is the quadrature pair (X, Y); operators carry
    the vacuum Gaussian weight like extract_hom_kraus.
    """
    if not j.lossy:
        raise ValueError("build the four-mode operator with apply_loss_splitters first")
    cols = j.vacuum_columns()
    ops = np.empty((len(PD_OUTCOMES), 4, 4), dtype=np.complex128)
    if scheme == "pd":
        n3, n4 = outcome
        for k, (l3, l4) in enumerate(PD_OUTCOMES):
            if n3 + n4 + l3 + l4 <= 2:
                ops[k] = cols[:, :, j.space.index_of((n3, n4, l3, l4))]
            else:
                ops[k] = 0.0
    elif scheme == "homodyne":
        x, y = outcome
        h3 = _hermite_functions(x, j.space.max_total)
        h4 = _hermite_functions(y, j.space.max_total)
        for k, (l3, l4) in enumerate(PD_OUTCOMES):
            op = np.zeros((4, 4), dtype=np.complex128)
            for i, occ in enumerate(j.space.states):
                if occ[2] == l3 and occ[3] == l4:
                    op += h3[occ[0]] * h4[occ[1]] * cols[:, :, i]
            ops[k] = op
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return KrausSet(PD_OUTCOMES, ops)
