"""Subset random sampling and reconstruction of finite time-vertex graph
signals: operators, signal diagnostics, samplers with complexity bounds,
reconstruction solvers and Monte Carlo verification."""

from .graphs import (
    GraphOperators,
    TimeHorizon,
    TimeOperators,
    VertexGraph,
    build_operators,
    build_time_operators,
    dft_matrix,
    graph_total_variation,
    joint_gradient_norm,
    smoothness_constant,
)
from .signals import (
    Ftvgs,
    IncoherenceProfile,
    SvdFactors,
    ZeroRankError,
    incoherence,
    load_matrix_csv,
    save_matrix_csv,
    synth_ftvgs,
    thin_svd,
)
from .sampling import (
    BoundReport,
    SampleSet,
    SamplingPlan,
    build_bound_report,
    ccs_sample,
    incoherence_failure_probability,
    mc_uniform_sample,
    min_cols_for_rank,
    min_rows_for_rank,
    min_samples_for_recovery,
    project,
    recovery_probability,
    subset_random_sample,
    total_ratio,
)
from .reconstruction import (
    CompletionConfig,
    JointSolverConfig,
    ReconstructionResult,
    TvInpaintConfig,
    complete_submatrix,
    log_rank_surrogate,
    solve_joint,
    svt_baseline,
    tnnr_baseline,
    tv_inpaint,
    two_stage_reconstruct,
)
from .evaluation import (
    ExperimentConfig,
    ExperimentResult,
    SynthSpec,
    TrialOutcome,
    ingest_dataset,
    nrmse,
    run_experiment_grid,
    verify_incoherence_propagation,
    verify_rank_preservation,
)

__version__ = "0.1.0"
