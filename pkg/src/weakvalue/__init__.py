"""Qubit weak-measurement simulator: Kraus/POVM construction, seeded
Monte-Carlo runs, post-selection statistics and partial tomography."""

from .analysis import (
    JointTable,
    NoPostSelectedEvents,
    PostSelectionStats,
    TomographyResult,
    TradeoffReport,
    exact_joint_distribution,
    fidelity_tradeoff,
    mean_k_for_state,
    naive_spin_inference,
    post_selected_mean,
    tomography,
)
from .measurement import (
    DomainError,
    MeasurementOperator,
    PovmElement,
    RotatedDetector,
    WeakModel,
    WeakOutcome,
    average_fidelity,
    completeness_defect,
    gaussian_model,
    povm_element,
    rotated_detector,
    strong_z_operators,
    total_operator,
    uniform_model,
    weak_operator,
)
from .qubit import (
    BlochVector,
    DensityMatrix,
    NonHermitianError,
    PureState,
    apply_kraus,
    bloch_vector,
    eig_hermitian2,
    make_tilted_state,
    maximally_mixed,
)
from .simulator import (
    CalibrationReport,
    RecordBatch,
    RunRecord,
    SimConfig,
    calibrate_detector,
    collect,
    run_experiment,
    sample_weak_outcome,
)

__version__ = "0.1.0"
