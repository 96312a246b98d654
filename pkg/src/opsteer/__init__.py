"""Budgeted opinion steering on social networks.

Simulates stubbornness-weighted opinion dynamics under planner control,
certifies accuracy-vs-budget feasibility in closed form, and runs a
two-phase online controller that identifies unknown susceptibilities
while driving opinions to a target.
"""

from . import errors
from ._kernels import backend_name
from .baselines import (
    GradientControllerConfig,
    descend_one_step,
    one_step_loss,
    one_step_loss_gradient,
    project_budget_box,
    run_budget_optimal_baseline,
    run_gradient_baseline,
)
from .control import (
    RateSchedule,
    ThetaCap,
    constant_policy,
    exploitation_control,
    exponential_control,
    pe_control,
    schedule_policy,
    uniform_control,
    zero_policy,
)
from .dynamics import Trajectory, contraction_factor, simulate, simulate_schedule, step
from .estimator import (
    EstimatorState,
    PEDiagnostics,
    PEVerdict,
    Regressor,
    beta_bound,
    build_regressor,
    kappa,
    lyapunov_value,
    pe_diagnostics,
    pe_margin,
    predict,
    spectral_norm,
    theta_error_bound,
    verify_pe,
)
from .feasibility import (
    FeasibilityProblem,
    FeasibilityResult,
    check_condition1,
    cost_of_schedule,
    cost_weight,
    cost_weight_uniform,
    error_bound,
    geometric_weight,
    solve_schedule,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    emit,
    load_network_file,
    run_experiment,
    sweep,
)
from .network import (
    AgentParams,
    MixingMatrix,
    Network,
    SocialGraph,
    build_laplacian,
    build_mixing_matrix,
    is_strongly_connected,
    make_network,
    min_singular_value,
    random_network,
)
from .online import (
    CycleRecord,
    EstimationRun,
    OnlineHyperparams,
    OnlineResult,
    combined_error,
    run_estimation,
    run_online,
    suggest_alpha0,
    update_cycle_schedule,
)

__version__ = "0.1.0"
