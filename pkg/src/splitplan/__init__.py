"""Planning and dense verification of recursive high-order splitting formulas."""

__version__ = "0.1.0"

from .coefficients import (
    MergedSchedule,
    StageCoefficients,
    c_bound,
    d_bound,
    iter_stage_coefficients,
    merged_schedule,
    p_coefficient,
    sigma,
    stage_coefficients,
    z_magnitude_bound,
)
from .cost import (
    CostInputs,
    PlanBound,
    k_star_new,
    k_star_oracle,
    k_star_prev,
    n_new_bound,
    n_new_smooth,
    n_prev_bound,
    n_star_new,
    n_star_prev,
    speedup_ratio,
    step_rate_m2,
    step_rate_many,
    stirling_check,
)
from .linalg import HamiltonianSystem, HermitianTerm, spectral_norm, unitary_exp
from .schedule import ExponentialOp, SimulationSchedule, build_step_ops, full_schedule
from .simulator import ErrorReport, OrderFit, apply_schedule, exact_evolution, fit_order, lemma_bound, verify_plan
