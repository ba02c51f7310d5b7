"""Monte Carlo simulation of two-qubit entanglement genesis and preservation
under continuous monitoring of spontaneous emission, with measurement-based
feedback (bang-bang pi-pulses for photon counting, weak local unitaries plus
scheduled flips for dual-quadrature homodyne detection)."""

from .dynmaps import (
    AmpPair,
    CobwebSeries,
    ThetaState,
    amp_flip_map,
    amp_map,
    analytic_curves,
    cobweb,
    concurrence_map,
    concurrence_noflip,
    flip_population,
    mw_flip_map_step,
    mw_map_step,
    peak_time,
    theta_flip_ode_step,
    theta_ode_step,
    theta_of_t,
)
from .ensemble import (
    EnsembleStats,
    Scheme,
    SimConfig,
    TrajectoryAbort,
    TrajectoryRecord,
    element_histograms,
    run_ensemble,
    run_trajectory,
    trajectory_rng,
)
from .feedback import (
    FeedbackKind,
    FeedbackPolicy,
    FeedbackSingularError,
    LocalOp,
    PdPhase,
    PdPolicyState,
    flip_a,
    flip_b,
    flip_both,
    mw_unitary,
    pd_policy_step,
    schedule_flip,
)
from .measurement import (
    DRIFT_TOLERANCE,
    HomodyneReadout,
    JumpOutcome,
    ProbabilityDriftError,
    StepResult,
    hom_step,
    hom_step_lossy,
    pd_step,
    pd_step_lossy,
    readout_means,
)
from .modealg import (
    PD_OUTCOMES,
    FockSpace,
    JointOperator,
    KrausSet,
    MeasurementSetup,
    apply_loss_splitters,
    build_joint_matrix,
    creation_operator,
    extract_hom_kraus,
    extract_lossy_kraus,
    extract_pd_kraus,
)
from .qstate import (
    BellLabel,
    DensityMatrix4,
    TwoQubitPure,
    bell_state,
    concurrence_mixed,
    concurrence_pure,
    fidelity_to,
    purity,
)

__all__ = [
    "AmpPair",
    "BellLabel",
    "CobwebSeries",
    "DRIFT_TOLERANCE",
    "DensityMatrix4",
    "EnsembleStats",
    "FeedbackKind",
    "FeedbackPolicy",
    "FeedbackSingularError",
    "FockSpace",
    "HomodyneReadout",
    "JointOperator",
    "JumpOutcome",
    "KrausSet",
    "LocalOp",
    "MeasurementSetup",
    "PD_OUTCOMES",
    "PdPhase",
    "PdPolicyState",
    "ProbabilityDriftError",
    "Scheme",
    "SimConfig",
    "StepResult",
    "ThetaState",
    "TrajectoryAbort",
    "TrajectoryRecord",
    "TwoQubitPure",
    "amp_flip_map",
    "amp_map",
    "analytic_curves",
    "apply_loss_splitters",
    "bell_state",
    "build_joint_matrix",
    "cobweb",
    "concurrence_map",
    "concurrence_mixed",
    "concurrence_noflip",
    "concurrence_pure",
    "creation_operator",
    "element_histograms",
    "extract_hom_kraus",
    "extract_lossy_kraus",
    "extract_pd_kraus",
    "fidelity_to",
    "flip_a",
    "flip_b",
    "flip_both",
    "flip_population",
    "hom_step",
    "hom_step_lossy",
    "mw_flip_map_step",
    "mw_map_step",
    "mw_unitary",
    "pd_policy_step",
    "pd_step",
    "pd_step_lossy",
    "peak_time",
    "purity",
    "readout_means",
    "run_ensemble",
    "run_trajectory",
    "schedule_flip",
    "theta_flip_ode_step",
    "theta_ode_step",
    "theta_of_t",
    "trajectory_rng",
]
