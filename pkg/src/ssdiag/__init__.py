"""Design-based simulation diagnostics for shift-share regression inference."""

from .analytics import (
    ConvergenceRow,
    EnumerationResult,
    StylizedParams,
    enumerate_assignment_variance,
    eps_fixed_variance_ratio_limit,
    randomization_variance_robust,
    randomization_variance_true,
    ratio_convergence_experiment,
    y_fixed_variance_ratio_limit,
)
from .data import (
    Dataset,
    PartitionDesign,
    ShockDraw,
    build_shift_share,
    contiguous_partition,
    partition_design,
    partition_to_shares,
    unit_treatment,
    validate_dataset,
)
from .dgp import (
    FlaggingDGP,
    GroupedDGP,
    PANEL_PARAMS,
    crossed_shares,
    draw_flagging,
    draw_grouped,
    run_flagging_curve,
    run_grouped_experiment,
)
from .engines import (
    SimConfig,
    SimReport,
    run_eps_fixed,
    run_partition_permutation,
    run_placebo,
    run_y_fixed,
)
from .errors import BudgetError, DegeneracyError, SsdiagError, ValidationError
from .estimators import (
    ESTIMATORS,
    RegressionFit,
    TestResult,
    VarianceEstimate,
    ols_simple,
    t_test,
    var_cluster,
    var_robust,
    var_score_agg,
)

__version__ = "0.1.0"
