"""Trajectory ensembles over the compiled kernels.

Each trajectory owns an independent random stream seeded by SeedSequence
([master_seed, trajectory_index]), and the ensemble is a plain map over the
trajectory index.  Results are therefore bit-identical for any worker count
and any execution order; parallelism only changes wall time.

All runs start from |ee> and step the state with the per-interval updates of
measurement.py / feedback.py, compiled in _kernels.py.  Ideal monitoring
(eta3 = eta4 = 1) propagates pure amplitudes; finite efficiency propagates
the density matrix with loss-summed Kraus conjugations.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .feedback import FeedbackKind, FeedbackPolicy
from .measurement import (
    hom_basis,
    hom_basis_lossy,
    pd_effects_lossy,
    pd_kraus,
    pd_kraus_lossy,
    readout_operators,
)
from .modealg import MeasurementSetup

__all__ = [
    "Scheme",
    "SimConfig",
    "TrajectoryRecord",
    "EnsembleStats",
    "TrajectoryAbort",
    "trajectory_rng",
    "run_trajectory",
    "run_ensemble",
    "element_histograms",
]


class Scheme(Enum):
    PD = "pd"
    HOMODYNE = "homodyne"


_KIND_CODE = {
    FeedbackKind.NONE: 0,
    FeedbackKind.PD_RECYCLE: 1,
    FeedbackKind.HOM_MW: 2,
    FeedbackKind.HOM_MW_FLIPS: 3,
}

_COMPATIBLE = {
    Scheme.PD: (FeedbackKind.NONE, FeedbackKind.PD_RECYCLE),
    Scheme.HOMODYNE: (
        FeedbackKind.NONE,
        FeedbackKind.HOM_MW,
        FeedbackKind.HOM_MW_FLIPS,
    ),
}


class TrajectoryAbort(RuntimeError):
    """A trajectory hit an invalid numerical state and was stopped."""

    def __init__(self, traj_index: int, step: int, reason: str):
        self.traj_index = traj_index
        self.step = step
        self.reason = reason
        super().__init__(f"trajectory {traj_index} aborted at step {step}: {reason}")


@dataclass(frozen=True)
class SimConfig:
    """Full specification of one ensemble run."""

    scheme: Scheme
    policy: FeedbackPolicy
    setup: MeasurementSetup
    t_max: float
    n_traj: int
    master_seed: int
    record_stride: int = 1
    record_elements: bool = False

    def __post_init__(self):
        if self.policy.kind not in _COMPATIBLE[self.scheme]:
            raise ValueError(
                f"policy {self.policy.kind.value!r} is not valid for scheme "
                f"{self.scheme.value!r}"
            )
        if self.t_max <= 0.0:
            raise ValueError("t_max must be positive")
        if self.n_traj < 1:
            raise ValueError("n_traj must be at least 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")
        n = self.t_max / self.setup.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(
                f"t_max = {self.t_max} is not an integer number of dt = "
                f"{self.setup.dt} intervals"
            )
        if round(n) % self.record_stride != 0:
            raise ValueError("record_stride must divide the step count")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.setup.dt))

    @property
    def n_recorded(self) -> int:
        return self.n_steps // self.record_stride + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_recorded) * (self.setup.dt * self.record_stride)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-trajectory time series on the recording grid."""

    times: np.ndarray
    concurrence: np.ndarray
    purity: np.ndarray
    elements: np.ndarray  # columns: rho_ee, rho_gg, Re rho[ee,gg]
    states: np.ndarray | None = None
    outcomes: np.ndarray | None = None


@dataclass(frozen=True)
class EnsembleStats:
    """Ensemble summary on the recording grid."""

    times: np.ndarray
    mean_c: np.ndarray
    std_c: np.ndarray
    mean_purity: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    n_traj: int
    element_samples: np.ndarray | None = None  # (n_traj, n_rec, 3) when kept


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent generator for one trajectory; keyed by (seed, index) so
    parallel scheduling cannot change any trajectory's stream."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, index]))


def _dummy(shape, dtype):
    return np.zeros(shape, dtype=dtype)


def run_trajectory(
    cfg: SimConfig,
    index: int,
    record_states: bool = False,
    record_outcomes: bool = False,
) -> TrajectoryRecord:
    """Simulate one trajectory of the configured run.

    record_states keeps the state at every recorded time (amplitudes when
    ideal, density matrices otherwise); record_outcomes keeps the raw
    measurement record (outcome indices for photon counting, readout pairs
    (r3, r4) for homodyne).
    """
    rng = trajectory_rng(cfg.master_seed, index)
    setup = cfg.setup
    n_steps, n_rec = cfg.n_steps, cfg.n_recorded
    stride = cfg.record_stride
    kind = _KIND_CODE[cfg.policy.kind]
    pure = setup.ideal

    c_out = np.empty(n_rec)
    purity_out = np.empty(n_rec)
    elems_out = np.empty((n_rec, 3))
    rs = 1 if record_states else 0
    ro = 1 if record_outcomes else 0
    if pure:
        init = np.zeros(4, dtype=np.complex128)
        init[0] = 1.0
        states = np.empty((n_rec, 4), np.complex128) if record_states else _dummy((1, 4), np.complex128)
    else:
        init = np.zeros((4, 4), dtype=np.complex128)
        init[0, 0] = 1.0
        states = np.empty((n_rec, 4, 4), np.complex128) if record_states else _dummy((1, 4, 4), np.complex128)

    if cfg.scheme is Scheme.PD:
        uniforms = rng.random(n_steps)
        outcomes = np.empty(n_steps, np.int64) if record_outcomes else _dummy(1, np.int64)
        if pure:
            ops = pd_kraus(setup).operators
            status = _kernels.pd_pure_kernel(
                init, ops, uniforms, kind, stride, rs, ro,
                c_out, purity_out, elems_out, states, outcomes,
            )
        else:
            effects = pd_effects_lossy(setup)
            ops = np.stack([ks.operators for ks in pd_kraus_lossy(setup)])
            status = _kernels.pd_mixed_kernel(
                init, effects, ops, uniforms, kind, stride, rs, ro,
                c_out, purity_out, elems_out, states, outcomes,
            )
    else:
        normals = rng.standard_normal((n_steps, 2))
        outcomes = np.empty((n_steps, 2)) if record_outcomes else _dummy((1, 2), np.float64)
        s3, s4 = readout_operators(setup)
        args = (
            kind, cfg.policy.flip_period, cfg.policy.t_activate,
            setup.dt, setup.gamma, setup.eta3, setup.eta4,
            stride, rs, ro,
            c_out, purity_out, elems_out, states, outcomes,
        )
        if pure:
            status = _kernels.hom_pure_kernel(init, hom_basis(setup), s3, s4, normals, *args)
        else:
            status = _kernels.hom_mixed_kernel(init, hom_basis_lossy(setup), s3, s4, normals, *args)

    if status > 0:
        raise TrajectoryAbort(index, status - 1, "outcome probabilities drifted or the state norm collapsed")
    if status < 0:
        raise TrajectoryAbort(index, -status - 1, "feedback weight singular (no |ee> or |gg> support)")
    return TrajectoryRecord(
        times=cfg.times,
        concurrence=c_out,
        purity=purity_out,
        elements=elems_out,
        states=states if record_states else None,
        outcomes=outcomes if record_outcomes else None,
    )


def _run_rows(cfg: SimConfig, indices, collect_elements: bool):
    c_rows = np.empty((len(indices), cfg.n_recorded))
    p_rows = np.empty((len(indices), cfg.n_recorded))
    e_rows = np.empty((len(indices), cfg.n_recorded, 3)) if collect_elements else None
    for row, idx in enumerate(indices):
        rec = run_trajectory(cfg, int(idx))
        c_rows[row] = rec.concurrence
        p_rows[row] = rec.purity
        if collect_elements:
            e_rows[row] = rec.elements
    return c_rows, p_rows, e_rows


def run_ensemble(
    cfg: SimConfig,
    n_workers: int = 1,
    collect_elements: bool = False,
) -> EnsembleStats:
    """Run the configured ensemble and reduce it to summary statistics.

    n_workers > 1 distributes whole trajectories over processes; the result
    is bit-identical to the serial run.  Raw (rho_ee, rho_gg, Re rho[ee,gg])
    samples are kept for histogramming when cfg.record_elements or
    collect_elements is set.
    """
    collect_elements = collect_elements or cfg.record_elements
    n_traj, n_rec = cfg.n_traj, cfg.n_recorded
    c_all = np.empty((n_traj, n_rec))
    p_all = np.empty((n_traj, n_rec))
    e_all = np.empty((n_traj, n_rec, 3)) if collect_elements else None

    if n_workers <= 1:
        chunks = [np.arange(n_traj)]
        results = [_run_rows(cfg, chunks[0], collect_elements)]
    else:
        chunks = [ch for ch in np.array_split(np.arange(n_traj), 4 * n_workers) if len(ch)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(
                pool.map(_run_rows, [cfg] * len(chunks), chunks, [collect_elements] * len(chunks))
            )
    for chunk, (c_rows, p_rows, e_rows) in zip(chunks, results):
        lo, hi = chunk[0], chunk[-1] + 1
        c_all[lo:hi] = c_rows
        p_all[lo:hi] = p_rows
        if collect_elements:
            e_all[lo:hi] = e_rows

    std = c_all.std(axis=0, ddof=1) if n_traj > 1 else np.zeros(n_rec)
    q05, q95 = np.quantile(c_all, [0.05, 0.95], axis=0)
    return EnsembleStats(
        times=cfg.times,
        mean_c=c_all.mean(axis=0),
        std_c=std,
        mean_purity=p_all.mean(axis=0),
        q05=q05,
        q95=q95,
        n_traj=n_traj,
        element_samples=e_all,
    )


_HIST_SPECS = {
    "rho00": (0, 0.0, 1.0),
    "rho33": (1, 0.0, 1.0),
    "re_rho03": (2, -0.5, 0.5),
}


def element_histograms(
    element_samples: np.ndarray, n_bins: int = 60
) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-time histograms of the recorded density-matrix elements.

    Returns {name: (bin_edges, counts)} with counts of shape
    (n_recorded, n_bins); samples are clipped into the physical range of
    each element before binning.
    """
    if element_samples.ndim != 3 or element_samples.shape[2] != 3:
        raise ValueError("element_samples must have shape (n_traj, n_recorded, 3)")
    n_rec = element_samples.shape[1]
    out = {}
    for name, (col, lo, hi) in _HIST_SPECS.items():
        edges = np.linspace(lo, hi, n_bins + 1)
        counts = np.empty((n_rec, n_bins), dtype=np.int64)
        vals = np.clip(element_samples[:, :, col], lo, hi)
        for r in range(n_rec):
            counts[r] = np.histogram(vals[:, r], bins=edges)[0]
        out[name] = (edges, counts)
    return out
