"""Single-objective release-policy optimization.

Chooses the N piecewise-constant release levels minimizing the simulated
cost subject to per-piece production-capacity bounds and one linear budget
inequality on release spending.  Every objective evaluation is a full ODE
integration; gradients are forward finite differences with a per-piece
step tied to the capacity scale.  An exhaustive grid oracle is provided
for low-dimensional verification.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import cost as cost_mod
from .capacity import capacity_at
from .integrate import IntegrationError, IntegratorConfig, integrate_adaptive
from .release import PiecewiseRelease

FEASIBILITY_RTOL = 1e-6


@dataclass(frozen=True)
class SolverSettings:
    """Termination, multistart and finite-difference settings for solve().

    ``gtol`` is the relative projected-gradient target and ``ftol`` the
    relative objective-change target; ``fd_step_rel``/``fd_step_min`` give
    the forward-difference step max(fd_step_rel*P(piece start), fd_step_min)
    in mosquitoes/day.  Starts beyond the three canonical ones are seeded
    uniform draws.
    """

    gtol: float = 1e-6
    ftol: float = 1e-9
    max_iterations: int = 200
    multistart: int = 3
    fd_step_rel: float = 1e-3
    fd_step_min: float = 1.0
    seed: int = 0
    integrator: IntegratorConfig | None = None

    def __post_init__(self):
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")


@dataclass(frozen=True)
class SingleObjectiveProblem:
    """One constrained policy-optimization instance.

    ``budget``/``capacity``/``pieces`` of None defer to the scenario.
    ``objective_mode`` is "total" (release + societal, the primary problem)
    or "societal" (societal cost alone, the epsilon-constraint subproblem;
    the budget then acts as the spending cap).
    """

    scenario: object
    budget: float | None = None
    capacity: object | None = None
    pieces: int | None = None
    settings: SolverSettings = field(default_factory=SolverSettings)
    objective_mode: str = "total"
    problem6_accounting: bool = False
    min_over_piece: bool = False

    def __post_init__(self):
        if self.objective_mode not in ("total", "societal"):
            raise ValueError(f"unknown objective mode {self.objective_mode!r}")

    @property
    def effective_budget(self) -> float:
        b = self.scenario.budget if self.budget is None else self.budget
        return math.inf if b is None else float(b)

    @property
    def effective_capacity(self):
        return self.scenario.capacity if self.capacity is None else self.capacity

    @property
    def effective_pieces(self) -> int:
        return int(self.scenario.pieces if self.pieces is None else self.pieces)


@dataclass(frozen=True)
class OptimalPolicy:
    """A feasible policy with its cost breakdown and solver diagnostics."""

    rates: np.ndarray
    breakdown: cost_mod.CostBreakdown
    objective_value: float
    diagnostics: dict

    def __post_init__(self):
        self.rates.setflags(write=False)

    @property
    def schedule_values(self) -> tuple:
        return tuple(self.rates.tolist())


def piece_structure(problem: SingleObjectiveProblem):
    """Per-piece upper bounds, budget coefficients and chargeable days.

    Bounds sample the capacity at each piece's first day (with a ramp
    capacity that is already the piece minimum, capacity being
    non-decreasing); ``min_over_piece`` instead takes the minimum over every
    day of the piece, the stricter reading needed for capacities that can
    dip.  Budget coefficients charge C_r per actual day, or a uniform
    ceil(T/N) days per piece under problem-6 accounting.
    """
    scenario = problem.scenario
    horizon = int(scenario.horizon)
    n = problem.effective_pieces
    ell = math.ceil(horizon / n)
    if n > 1 and ell * (n - 1) >= horizon:
        raise ValueError(
            f"{n} pieces over {horizon} days leave the last piece empty; reduce N")
    template = PiecewiseRelease(tuple([0.0] * n), horizon=float(horizon))
    days = np.array(template.piece_days(), dtype=float)
    starts = np.array([ell * (i - 1) + 1 for i in range(1, n + 1)], dtype=float)
    capacity = problem.effective_capacity
    if problem.min_over_piece:
        ub = np.array([
            min(capacity_at(capacity, float(d))
                for d in range(int(starts[i]), int(min(ell * (i + 1), horizon)) + 1))
            for i in range(n)
        ])
    else:
        ub = np.array([capacity_at(capacity, s) for s in starts])
    c_r = scenario.cost.C_r
    if problem.problem6_accounting:
        budget_coeffs = np.full(n, c_r * ell)
    else:
        budget_coeffs = c_r * days
    return ub, budget_coeffs, days, starts


class _SimulatedObjective:
    """Cached objective evaluator: policy vector -> simulated cost.

    Policies intense enough to leave the invariant domain fail integration;
    ``value`` maps those to a large penalty so line searches retreat from
    the region instead of aborting the solve, while ``breakdown`` (used for
    final reporting) propagates the failure.
    """

    PENALTY = 1e30

    def __init__(self, problem: SingleObjectiveProblem):
        self.problem = problem
        self.scenario = problem.scenario
        self.horizon = int(self.scenario.horizon)
        self.config = problem.settings.integrator or self.scenario.integrator
        self._cache: dict[bytes, tuple] = {}
        self.evaluations = 0
        self.failed_evaluations = 0

    def _evaluate(self, rates: np.ndarray):
        key = np.asarray(rates, dtype=float).tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        schedule = PiecewiseRelease(tuple(float(r) for r in rates),
                                    horizon=float(self.horizon))
        self.evaluations += 1
        try:
            traj = integrate_adaptive(self.scenario, schedule, self.config)
        except IntegrationError as exc:
            self.failed_evaluations += 1
            result = (exc, None)
            self._cache[key] = result
            return result
        bd = cost_mod.objective(traj, schedule, self.scenario.cost, self.horizon,
                                problem6_accounting=self.problem.problem6_accounting)
        value = bd.total_cost if self.problem.objective_mode == "total" else bd.societal_cost
        result = (value, bd)
        self._cache[key] = result
        return result

    def breakdown(self, rates: np.ndarray) -> tuple[float, cost_mod.CostBreakdown]:
        value, bd = self._evaluate(rates)
        if bd is None:
            raise value
        return value, bd

    def value(self, rates: np.ndarray) -> float:
        value, bd = self._evaluate(rates)
        if bd is None:
            return self.PENALTY
        return value


def _forward_gradient(evaluator: _SimulatedObjective, rates: np.ndarray,
                      steps: np.ndarray) -> np.ndarray:
    f0 = evaluator.value(rates)
    grad = np.empty(rates.shape[0])
    for i in range(rates.shape[0]):
        bumped = rates.copy()
        bumped[i] += steps[i]
        grad[i] = (evaluator.value(bumped) - f0) / steps[i]
    return grad


def _starting_points(problem: SingleObjectiveProblem, ub: np.ndarray,
                     budget_coeffs: np.ndarray) -> list[np.ndarray]:
    budget = problem.effective_budget
    n = ub.shape[0]
    starts = [np.zeros(n)]

    saturate = ub.copy()
    spend = float(budget_coeffs @ saturate)
    if np.isfinite(budget) and spend > budget > 0:
        saturate *= budget / spend
    elif np.isfinite(budget) and budget <= 0:
        saturate = np.zeros(n)
    starts.append(saturate)

    if np.isfinite(budget):
        c_r = problem.scenario.cost.C_r
        horizon = int(problem.scenario.horizon)
        uniform_rate = budget / (c_r * horizon) if c_r > 0 and horizon > 0 else 0.0
        uniform = np.minimum(ub, uniform_rate)
    else:
        uniform = ub / 2.0
    starts.append(uniform)

    extra = problem.settings.multistart - len(starts)
    if extra > 0:
        rng = np.random.default_rng(problem.settings.seed)
        for _ in range(extra):
            x = rng.uniform(0.0, 1.0, n) * ub
            spend = float(budget_coeffs @ x)
            if np.isfinite(budget) and spend > budget:
                x *= 0.0 if budget <= 0 else budget / spend
            starts.append(x)

    unique, seen = [], set()
    for x in starts:
        key = x.tobytes()
        if key not in seen:
            seen.add(key)
            unique.append(x)
    return unique


def _project_feasible(x: np.ndarray, ub: np.ndarray, budget: float,
                      budget_coeffs: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, ub)
    if np.isfinite(budget):
        spend = float(budget_coeffs @ x)
        if spend > budget:
            x = x * (0.0 if budget <= 0 else budget / spend)
    return x


def solve(problem: SingleObjectiveProblem,
          starts: list | None = None) -> OptimalPolicy:
    """Best feasible policy found from the multistart local solves.

    ``starts`` overrides the canonical start set (zero, capacity-saturating,
    budget-uniform, plus seeded extras); the sweep uses that for warm
    starting.  Starts whose policies fail to integrate are skipped and
    recorded in the diagnostics; the zero policy is the fallback if every
    start fails.  The returned policy satisfies the box and budget
    constraints to relative tolerance 1e-6; diagnostics record per-start
    outcomes, the running best objective across accepted iterates, the
    final box-projected gradient norm and the active constraints.
    """
    settings = problem.settings
    ub, budget_coeffs, days, starts_days = piece_structure(problem)
    budget = problem.effective_budget
    evaluator = _SimulatedObjective(problem)
    fd_steps = np.maximum(settings.fd_step_rel * ub, settings.fd_step_min)

    # Optimize in unit-box coordinates so SLSQP sees O(1) variables and an
    # O(1) objective.
    scale = np.where(ub > 0, ub, 1.0)

    best: dict = {"value": math.inf, "x": np.zeros(ub.shape[0])}
    history: list[float] = []
    start_reports = []

    constraints = []
    if np.isfinite(budget):
        cu = budget_coeffs * scale

        def budget_fun(u, _cu=cu):
            return budget - float(_cu @ u)

        def budget_jac(u, _cu=cu):
            return -_cu

        constraints.append({"type": "ineq", "fun": budget_fun, "jac": budget_jac})

    if starts is None:
        start_list = _starting_points(problem, ub, budget_coeffs)
    else:
        start_list = [_project_feasible(np.asarray(x, dtype=float), ub, budget,
                                        budget_coeffs) for x in starts]

    for x0 in start_list:
        # A start whose policy leaves the invariant domain fails integration;
        # skip it and let the remaining starts compete.
        f0 = evaluator.value(x0)
        if f0 >= evaluator.PENALTY:
            start_reports.append({
                "x0": tuple(x0.tolist()), "status": -1,
                "message": "integration failure at the starting point",
                "iterations": 0, "objective": math.inf,
            })
            continue
        f_scale = max(1.0, abs(f0))

        def fun(u):
            x = u * scale
            value = evaluator.value(x)
            history.append(value)
            return value / f_scale

        def jac(u):
            x = u * scale
            g = _forward_gradient(evaluator, x, fd_steps)
            return g * scale / f_scale

        u0 = x0 / scale
        bounds = [(0.0, 1.0 if ub[i] > 0 else 0.0) for i in range(ub.shape[0])]
        res = minimize(
            fun, u0, jac=jac, method="SLSQP", bounds=bounds,
            constraints=constraints,
            options={"maxiter": settings.max_iterations,
                     "ftol": settings.ftol})
        x_final = _project_feasible(res.x * scale, ub, budget, budget_coeffs)
        f_final = evaluator.value(x_final)
        start_reports.append({
            "x0": tuple(x0.tolist()),
            "status": int(res.status),
            "message": str(res.message),
            "iterations": int(res.nit),
            "objective": f_final if f_final < evaluator.PENALTY else math.inf,
        })
        if f_final < best["value"] and f_final < evaluator.PENALTY:
            best = {"value": f_final, "x": x_final}

    if not math.isfinite(best["value"]):
        # Every start failed; the zero policy always integrates.
        zero = np.zeros(ub.shape[0])
        best = {"value": evaluator.value(zero), "x": zero}

    x_best = best["x"]
    _, bd = evaluator.breakdown(x_best)

    grad = _forward_gradient(evaluator, x_best, fd_steps)
    step = np.clip(x_best - grad, 0.0, ub)
    projected_gradient = x_best - step
    pg_norm = float(np.max(np.abs(projected_gradient)) /
                    max(1.0, float(np.max(np.abs(x_best)))))

    active = [f"upper_bound[{i}]" for i in range(ub.shape[0])
              if ub[i] > 0 and x_best[i] >= ub[i] * (1 - FEASIBILITY_RTOL)]
    if np.isfinite(budget):
        spend = float(budget_coeffs @ x_best)
        if budget == 0 or spend >= budget * (1 - FEASIBILITY_RTOL):
            active.append("budget")

    running_best = np.minimum.accumulate(np.array(history)) if history else np.array([])
    diagnostics = {
        "objective_mode": problem.objective_mode,
        "starts": start_reports,
        "iterations": int(sum(r["iterations"] for r in start_reports)),
        "objective_evaluations": evaluator.evaluations,
        "failed_evaluations": evaluator.failed_evaluations,
        "objective_history": tuple(running_best.tolist()),
        "projected_gradient_norm": pg_norm,
        "active_constraints": active,
        "upper_bounds": tuple(ub.tolist()),
        "budget": budget if np.isfinite(budget) else None,
        "piece_days": tuple(int(d) for d in days),
        "piece_start_days": tuple(int(s) for s in starts_days),
    }
    return OptimalPolicy(rates=x_best, breakdown=bd,
                         objective_value=best["value"], diagnostics=diagnostics)


def brute_force_oracle(problem: SingleObjectiveProblem,
                       grid_points_per_dim: int) -> OptimalPolicy:
    """Exhaustive grid search over the feasible set (verification oracle).

    Evaluates the objective on a regular grid over [0, ub_i]^N, skipping
    budget-infeasible points, and returns the best feasible grid point.

    Raises:
        ValueError: more than 3 pieces (cost grows as grid^N).
    """
    n = problem.effective_pieces
    if n > 3:
        raise ValueError(f"grid oracle limited to N <= 3 pieces, got {n}")
    if grid_points_per_dim < 2:
        raise ValueError("need at least 2 grid points per dimension")

    ub, budget_coeffs, days, starts_days = piece_structure(problem)
    budget = problem.effective_budget
    evaluator = _SimulatedObjective(problem)

    axes = [np.linspace(0.0, ub[i], grid_points_per_dim) for i in range(n)]
    best_value = math.inf
    best_x = np.zeros(n)
    feasible_points = 0
    for combo in itertools.product(*axes):
        x = np.array(combo)
        if np.isfinite(budget) and float(budget_coeffs @ x) > budget * (1 + FEASIBILITY_RTOL):
            continue
        feasible_points += 1
        value = evaluator.value(x)
        if value < best_value:
            best_value = value
            best_x = x

    _, bd = evaluator.breakdown(best_x)
    diagnostics = {
        "objective_mode": problem.objective_mode,
        "method": "grid",
        "grid_points_per_dim": grid_points_per_dim,
        "feasible_points": feasible_points,
        "objective_evaluations": evaluator.evaluations,
        "upper_bounds": tuple(ub.tolist()),
        "piece_days": tuple(int(d) for d in days),
    }
    return OptimalPolicy(rates=best_x, breakdown=bd, objective_value=best_value,
                         diagnostics=diagnostics)
