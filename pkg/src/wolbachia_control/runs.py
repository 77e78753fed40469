"""High-level runs: simulate, optimize, Pareto sweep, price/capacity tables.

Each run writes its artifacts into an output directory and finishes with a
``run.json`` manifest digesting every emitted file.  These are the same
entry points the CLI subcommands call.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import reports
from .capacity import CapacityRamp
from .cost import objective
from .integrate import integrate_adaptive, integrate_fixed_rk4
from .optimize import SingleObjectiveProblem, SolverSettings, solve
from .pareto import epsilon_constraint_sweep, filter_dominated
from .release import ConstantRelease, PiecewiseRelease
from .scenario import Scenario, scenario_document, validate_release, validate_scenario

# Ramp parameters of the capacity studies: production starts low and climbs
# linearly to 3.5M mosquitoes/day on day 94 (month three).
STUDY_PEAK_CAPACITY = 3_500_000.0
STUDY_PEAK_DAY = 94.0
UNIT_PRICES = (4.85, 4.00, 3.00, 2.00)

# Reference magnitude for the release-scheme comparisons (the published
# curves never state one): at this peak the constant and linear schemes cut
# peak hospitalization by ~75%/73% on the national-scale baseline, matching
# the reported ~71.6% band.
DEFAULT_SCHEME_PEAK = 10_000_000.0


def _zero_schedule() -> ConstantRelease:
    return ConstantRelease(0.0)


def _peak_stats(traj) -> tuple[float, int]:
    j = traj.column("J_h")
    day = int(np.argmax(j))
    return float(j[day]), day


def run_simulate(scenario: Scenario, schedule, out_dir, charts: bool = True,
                 oracle_step: float | None = None, command: str = "simulate"):
    """Simulate one schedule: trajectory CSV, cost CSV, summary JSON, charts.

    ``oracle_step`` additionally runs the fixed-step RK4 cross-check and
    records the worst per-compartment relative disagreement in the summary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    warnings = validate_scenario(scenario)
    warnings += validate_release(scenario, schedule)

    traj = integrate_adaptive(scenario, schedule, scenario.integrator)
    breakdown = objective(traj, schedule, scenario.cost, scenario.horizon)
    release_rates = np.array([schedule.value(float(t))
                              for t in range(scenario.horizon + 1)])

    outputs = []
    traj_path = out_dir / "trajectory.csv"
    reports.write_trajectory_csv(traj_path, traj)
    outputs.append(traj_path)

    cost_path = out_dir / "costs.csv"
    reports.write_cost_csv(cost_path, breakdown, release_rates)
    outputs.append(cost_path)

    peak, peak_day = _peak_stats(traj)
    summary = {
        "peak_J_h": peak,
        "peak_day": peak_day,
        "release_cost": breakdown.release_cost,
        "societal_cost": breakdown.societal_cost,
        "total_cost": breakdown.total_cost,
        "currency": breakdown.currency,
        "total_release": float(release_rates[1:].sum()),
        "diagnostics": list(traj.diagnostics),
        "warnings": warnings,
        "integrator_stats": {k: (v if math.isfinite(v) else None)
                             for k, v in traj.stats.items()},
    }
    if oracle_step is not None:
        oracle = integrate_fixed_rk4(scenario, schedule, oracle_step)
        denom = np.maximum(np.maximum(np.abs(traj.states), np.abs(oracle.states)), 1e-30)
        rel = np.abs(traj.states - oracle.states) / denom
        rel[(traj.states == 0) & (oracle.states == 0)] = 0.0
        summary["oracle_check"] = {
            "step": oracle_step,
            "max_rel_difference": float(rel.max()),
        }
    summary_path = out_dir / "summary.json"
    reports.write_json(summary_path, summary)
    outputs.append(summary_path)

    if charts:
        hosp = out_dir / "hospitalized.svg"
        reports.write_svg(hosp, reports.svg_line_chart(
            [("J_h", traj.times, traj.column("J_h"))],
            "Hospitalized individuals", "day", "people"))
        outputs.append(hosp)
        rel_chart = out_dir / "release.svg"
        reports.write_svg(rel_chart, reports.svg_line_chart(
            [("r(t)", traj.times, release_rates)],
            "Release schedule", "day", "mosquitoes/day"))
        outputs.append(rel_chart)

    reports.write_run_record(out_dir, scenario_document(scenario), command, outputs)
    return traj, breakdown, summary


def run_optimize(scenario: Scenario, out_dir, settings: SolverSettings | None = None,
                 problem6_accounting: bool = False, charts: bool = True,
                 command: str = "optimize"):
    """Solve the budget/capacity-constrained policy problem and persist it.

    Emits the per-piece policy CSV, the optimal-policy trajectory, a JSON
    with costs and solver diagnostics, and a summary comparing peak
    hospitalization against the zero policy.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    warnings = validate_scenario(scenario)

    problem = SingleObjectiveProblem(
        scenario=scenario, settings=settings or SolverSettings(),
        problem6_accounting=problem6_accounting)
    policy = solve(problem)

    schedule = PiecewiseRelease(policy.schedule_values, horizon=float(scenario.horizon))
    traj = integrate_adaptive(scenario, schedule, scenario.integrator)
    baseline = integrate_adaptive(scenario, _zero_schedule(), scenario.integrator)
    baseline_cost = objective(baseline, _zero_schedule(), scenario.cost, scenario.horizon)

    peak, peak_day = _peak_stats(traj)
    base_peak, base_peak_day = _peak_stats(baseline)

    outputs = []
    diag = policy.diagnostics
    policy_rows = [
        [i + 1, diag["piece_start_days"][i], diag["piece_days"][i],
         policy.rates[i], diag["upper_bounds"][i]]
        for i in range(len(policy.rates))
    ]
    policy_csv = out_dir / "policy.csv"
    reports.write_csv(policy_csv,
                      ("piece", "start_day", "days", "rate", "upper_bound"),
                      policy_rows)
    outputs.append(policy_csv)

    traj_path = out_dir / "optimal_trajectory.csv"
    reports.write_trajectory_csv(traj_path, traj)
    outputs.append(traj_path)

    policy_json = out_dir / "policy.json"
    reports.write_json(policy_json, {
        "rates": list(policy.rates),
        "objective_value": policy.objective_value,
        "release_cost": policy.breakdown.release_cost,
        "societal_cost": policy.breakdown.societal_cost,
        "total_cost": policy.breakdown.total_cost,
        "currency": policy.breakdown.currency,
        "diagnostics": {k: v for k, v in diag.items() if k != "objective_history"},
    })
    outputs.append(policy_json)

    summary = {
        "peak_J_h": peak,
        "peak_day": peak_day,
        "zero_policy_peak_J_h": base_peak,
        "zero_policy_peak_day": base_peak_day,
        "peak_reduction": 1.0 - peak / base_peak if base_peak > 0 else 0.0,
        "zero_policy_societal_cost": baseline_cost.societal_cost,
        "release_cost": policy.breakdown.release_cost,
        "societal_cost": policy.breakdown.societal_cost,
        "total_cost": policy.breakdown.total_cost,
        "total_release": float(np.dot(policy.rates, np.array(diag["piece_days"]))),
        "warnings": warnings,
    }
    summary_path = out_dir / "summary.json"
    reports.write_json(summary_path, summary)
    outputs.append(summary_path)

    if charts:
        hosp = out_dir / "hospitalized.svg"
        reports.write_svg(hosp, reports.svg_line_chart(
            [("optimal", traj.times, traj.column("J_h")),
             ("zero policy", baseline.times, baseline.column("J_h"))],
            "Hospitalized individuals", "day", "people"))
        outputs.append(hosp)
        release_rates = np.array([schedule.value(float(t))
                                  for t in range(scenario.horizon + 1)])
        rel_chart = out_dir / "release.svg"
        reports.write_svg(rel_chart, reports.svg_line_chart(
            [("r(t)", traj.times, release_rates)],
            "Optimal release schedule", "day", "mosquitoes/day"))
        outputs.append(rel_chart)

    reports.write_run_record(out_dir, scenario_document(scenario), command, outputs)
    return policy, summary


def run_pareto(scenario: Scenario, count: int, b_max: float, out_dir,
               settings: SolverSettings | None = None, warm_start: bool = True,
               charts: bool = True, command: str = "pareto"):
    """Epsilon-constraint sweep: per-cap CSV, filtered front CSV, JSON, chart."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    warnings = validate_scenario(scenario)

    front = epsilon_constraint_sweep(scenario, count, b_max,
                                     settings=settings, warm_start=warm_start)
    filtered = filter_dominated(front)

    n = scenario.pieces
    base_header = (["k", "budget_cap", "release_cost", "societal_cost"]
                   + [f"r_{i}" for i in range(1, n + 1)])

    def point_row(p, flags: bool):
        rates = list(p.rates) if p.rates else [math.nan] * n
        row = [p.index, p.budget_cap, p.release_cost, p.societal_cost] + rates
        if flags:
            row += [int(p.dominated), int(p.failed)]
        return row

    sweep_csv = out_dir / "pareto_sweep.csv"
    reports.write_csv(sweep_csv, base_header + ["dominated", "failed"],
                      [point_row(p, True) for p in front.points])
    front_csv = out_dir / "pareto_front.csv"
    reports.write_csv(front_csv, base_header,
                      [point_row(p, False) for p in filtered.points])

    payload = {
        "budget_caps": [p.budget_cap for p in front.points],
        "points": [
            {"k": p.index, "budget_cap": p.budget_cap,
             "release_cost": p.release_cost, "societal_cost": p.societal_cost,
             "dominated": p.dominated, "failed": p.failed,
             "rates": list(p.rates), "error": p.error}
            for p in front.points
        ],
        "front": [
            {"k": p.index, "release_cost": p.release_cost,
             "societal_cost": p.societal_cost}
            for p in filtered.points
        ],
        "warm_start": warm_start,
        "warnings": warnings,
    }
    json_path = out_dir / "pareto.json"
    reports.write_json(json_path, payload)

    outputs = [sweep_csv, front_csv, json_path]
    if charts and filtered.points:
        chart = out_dir / "pareto_front.svg"
        xs = [p.release_cost for p in filtered.points]
        ys = [p.societal_cost for p in filtered.points]
        reports.write_svg(chart, reports.svg_line_chart(
            [("front", xs, ys)], "Pareto front", "release cost", "societal cost"))
        outputs.append(chart)

    reports.write_run_record(out_dir, scenario_document(scenario), command, outputs)
    return front, filtered


def study_capacity(p0: float) -> CapacityRamp:
    """Capacity ramp of the production studies: p0 on day 1 to 3.5M on day 94."""
    return CapacityRamp(p0=p0, p_max=STUDY_PEAK_CAPACITY, peak_day=STUDY_PEAK_DAY)


def unit_price_grid(scenario: Scenario, initial_capacities,
                    prices=UNIT_PRICES, settings: SolverSettings | None = None):
    """Optimal policies over a (initial capacity) x (unit price) grid.

    Returns records with total release (daily-sum convention) and the cost
    split for each cell; used by all three table experiments.
    """
    records = []
    for p0 in initial_capacities:
        capacity = study_capacity(p0)
        for price in prices:
            cell = scenario.with_updates(
                capacity=capacity,
                cost=type(scenario.cost)(C_r=price, C_J=scenario.cost.C_J,
                                         currency=scenario.cost.currency),
                budget=math.inf)
            problem = SingleObjectiveProblem(
                scenario=cell, settings=settings or SolverSettings())
            policy = solve(problem)
            days = np.array(policy.diagnostics["piece_days"], dtype=float)
            records.append({
                "initial_capacity": p0,
                "unit_price": price,
                "total_release": float(np.dot(policy.rates, days)),
                "release_cost": policy.breakdown.release_cost,
                "societal_cost": policy.breakdown.societal_cost,
                "total_cost": policy.breakdown.total_cost,
                "rates": list(policy.rates),
            })
    return records


TABLE_EXPERIMENTS = ("unit-price-1M", "unit-price-500k", "total-cost")


def table_experiments(name: str, scenario: Scenario, out_dir,
                      settings: SolverSettings | None = None,
                      command: str = "tables"):
    """Reproduce one of the named price/capacity tables as CSV.

    ``unit-price-1M`` / ``unit-price-500k``: total release and societal cost
    across unit prices at one initial capacity.  ``total-cost``: total cost
    across unit prices at both capacities.
    """
    if name not in TABLE_EXPERIMENTS:
        raise ValueError(f"unknown table experiment {name!r}; "
                         f"available: {', '.join(TABLE_EXPERIMENTS)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if name == "unit-price-1M":
        records = unit_price_grid(scenario, [1_000_000.0], settings=settings)
    elif name == "unit-price-500k":
        records = unit_price_grid(scenario, [500_000.0], settings=settings)
    else:
        records = unit_price_grid(scenario, [1_000_000.0, 500_000.0],
                                  settings=settings)

    outputs = []
    if name == "total-cost":
        rows = []
        for price in UNIT_PRICES:
            row = [price]
            for p0 in (1_000_000.0, 500_000.0):
                cell = next(r for r in records
                            if r["unit_price"] == price and r["initial_capacity"] == p0)
                row.append(cell["total_cost"])
            rows.append(row)
        path = out_dir / "total_cost.csv"
        reports.write_csv(path, ("unit_price", "total_cost_1M", "total_cost_500k"), rows)
        outputs.append(path)
    else:
        rows = [[r["unit_price"], r["total_release"], r["societal_cost"]]
                for r in records]
        path = out_dir / f"{name}.csv"
        reports.write_csv(path, ("unit_price", "total_release", "societal_cost"), rows)
        outputs.append(path)

    detail = out_dir / f"{name}_detail.json"
    reports.write_json(detail, {"experiment": name, "records": records})
    outputs.append(detail)

    reports.write_run_record(out_dir, scenario_document(scenario),
                             f"{command} {name}", outputs)
    return records
