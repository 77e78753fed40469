"""Wolbachia-release planning toolkit for dengue control.

Simulates an 18-compartment human-vector transmission model with maternal
Wolbachia spread and cytoplasmic incompatibility, prices release policies
against hospitalization burden, and optimizes piecewise-constant release
schedules under budget and production-capacity constraints, including full
Pareto fronts between spending and societal cost.
"""

from .capacity import CapacityRamp, TabulatedCapacity, capacity_at, constant_capacity
from .cost import CostBreakdown, CostConfig, objective, unit_cost_from_program
from .integrate import (IntegrationError, IntegratorConfig, Trajectory,
                        integrate_adaptive, integrate_fixed_rk4, sample_daily)
from .model import (DerivedAggregates, DomainReport, ModelDomainError,
                    ModelParameters, StateDerivative, StateVector,
                    derived_aggregates, in_domain, jacobian, rhs, scale_state)
from .optimize import (OptimalPolicy, SingleObjectiveProblem, SolverSettings,
                       brute_force_oracle, solve)
from .pareto import (ParetoFront, ParetoPoint, budget_caps,
                     epsilon_constraint_sweep, filter_dominated,
                     verify_cold_starts)
from .release import (BumpRelease, ConstantRelease, LinearRelease,
                      PiecewiseRelease, ReleaseSchedule, evaluate,
                      normalize_same_peak, normalize_same_total, total_release)
from .scenario import (Scenario, ScenarioValidationError, load_scenario,
                       save_scenario, validate_scenario)

__version__ = "0.1.0"

__all__ = [
    "BumpRelease", "CapacityRamp", "ConstantRelease", "CostBreakdown",
    "CostConfig", "DerivedAggregates", "DomainReport", "IntegrationError",
    "IntegratorConfig", "LinearRelease", "ModelDomainError", "ModelParameters",
    "OptimalPolicy", "ParetoFront", "ParetoPoint", "PiecewiseRelease",
    "ReleaseSchedule", "Scenario", "ScenarioValidationError",
    "SingleObjectiveProblem", "SolverSettings", "StateDerivative", "StateVector",
    "TabulatedCapacity", "Trajectory", "brute_force_oracle", "budget_caps",
    "capacity_at", "constant_capacity", "derived_aggregates",
    "epsilon_constraint_sweep", "evaluate", "filter_dominated", "in_domain",
    "integrate_adaptive", "integrate_fixed_rk4", "jacobian", "load_scenario",
    "normalize_same_peak", "normalize_same_total", "objective", "rhs",
    "sample_daily", "save_scenario", "scale_state", "solve", "total_release",
    "unit_cost_from_program", "validate_scenario", "verify_cold_starts",
]
