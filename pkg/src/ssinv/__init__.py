"""Optimal (s,S) impulse-control policies for one-dimensional diffusion
inventory models: scale/speed machinery, characteristic functions, policy
cost evaluation and minimization, QVI certification, and Monte Carlo
simulation."""

__version__ = "0.1.0"

from .characteristics import Characteristics, build_characteristics, expected_cycle, import_characteristics
from .costs import (
    CostModel,
    CostValidationReport,
    holding_piecewise_linear,
    holding_power,
    ordering_cost,
    ordering_linear,
    ordering_power,
    validate_costs,
)
from .errors import (
    AdmissibilityError,
    ConfigError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    SSInvError,
)
from .funcs import Fn
from .kernels import BACKEND
from .models import (
    DbmParams,
    GbmParams,
    dbm_characteristics,
    dbm_costs,
    dbm_model,
    dbm_xbar,
    delayed_beats_ss,
    delayed_order_rate,
    delayed_policy_cost,
    delayed_reflection_rate,
    delayed_stationary_pdf,
    gbm_c0_argmin,
    gbm_characteristics,
    gbm_costs,
    gbm_h,
    gbm_h_minimizer,
    gbm_model,
    gbm_regime,
    jit_better_than_ss,
    jit_cost,
    jit_stationary_pdf,
    reflected_dbm_optimum,
    rho_tilde,
)
from .qvi import GSolution, QVIReport, build_g, check_condition_36, verify_qvi
from .sde import (
    BoundaryReport,
    DiffusionModel,
    ScaleSpeedTables,
    build_tables,
    classify_boundaries,
    generator_apply,
    scale_density,
    scale_measure,
    speed_density,
    speed_measure,
)
from .simulate import (
    CustomPolicy,
    DelayedTrigger,
    JustInTime,
    OrderUpTo,
    SimConfig,
    SimulationResult,
    compare_order_costs,
    improve_order,
    order_count_bound,
    simulate,
    split_thresholds,
    stationary_check,
)
from .solver import (
    PolicyEvaluation,
    SolveReport,
    SolverConfig,
    evaluate_policy,
    first_order_residuals,
    minimize_f,
    policy_cost,
    second_order_value,
)
