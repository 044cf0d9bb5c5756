"""Joint-sparse multiple-measurement recovery for grant-free device access.

The package detects which of many devices transmitted in a coherence
block and estimates their MIMO channels, from one short pilot
observation.  ``sim`` builds synthetic scenarios, ``solver`` holds the
three ADMM recovery modes, ``estimator`` re-estimates channels on a
detected support (MMSE) and provides oracle baselines, ``metrics``
scores the results, and ``bench`` plus the ``juice`` CLI run the
Monte-Carlo sweeps that produce the benchmark CSVs.
"""

from .bench import (
    ALGORITHMS,
    SOLVER_ALGORITHMS,
    ConvergenceRow,
    DetectionRule,
    ExperimentSpec,
    ResultRow,
    SpecError,
    emit_spec,
    format_convergence_rows,
    format_result_rows,
    parse_spec,
    quick_profile,
    resolve_solver_config,
    run,
    run_convergence_probe,
    validate_spec,
)
from .estimator import (
    RefinedEstimate,
    SupportEstimate,
    genie_ls,
    genie_mmse,
    mmse_estimate,
)
from .metrics import (
    TrialOutcome,
    detect_support,
    nase,
    nase_db,
    squared_error,
    srr,
)
from .seeding import derive_seed, stream
from .sim import (
    CovarianceSet,
    ScenarioInstance,
    SystemConfig,
    UEGeometry,
    build_covariance_set,
    build_geometry,
    compute_covariance,
    draw_channel,
    generate_pilots,
    make_scenario,
    ula_response,
)
from .solver import (
    RecoveryResult,
    SolveHistory,
    SolverConfig,
    SolverDivergence,
    SolverMode,
    SolverState,
    default_solver_config,
    dual_update,
    group_norms,
    group_shrink,
    objective_cov,
    objective_l21,
    relax_indicator,
    solve,
    v_update,
    weight_g,
    weight_q,
    x_update,
    z_update_cov,
    z_update_plain,
)

__version__ = "0.1.0"
