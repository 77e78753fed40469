"""Command-line interface.

Subcommands: ``simulate`` (one schedule), ``optimize`` (constrained policy
search), ``pareto`` (epsilon-constraint sweep), ``tables`` (price/capacity
studies), ``validate`` (scenario check).  Exit codes: 0 success,
1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .capacity import parse_capacity_spec
from .integrate import IntegrationError
from .optimize import SolverSettings
from .release import ScheduleError, parse_schedule_spec
from .runs import (TABLE_EXPERIMENTS, run_optimize, run_pareto, run_simulate,
                   table_experiments)
from .scenario import (PRESETS, ScenarioValidationError, load_scenario,
                       validate_scenario)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _add_scenario_args(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--scenario", metavar="PATH", help="scenario YAML file")
    source.add_argument("--preset", metavar="NAME",
                        choices=sorted(PRESETS), default=None,
                        help="built-in scenario preset")
    parser.add_argument("--budget", type=float, default=None,
                        help="release budget in currency units (default: scenario's)")
    parser.add_argument("--capacity", metavar="P0,PMAX,PEAKDAY", default=None,
                        help="production capacity ramp, or a single constant rate")
    parser.add_argument("--pieces", type=int, default=None,
                        help="number of policy pieces N")
    parser.add_argument("--horizon", type=int, default=None,
                        help="simulation horizon T in days")
    parser.add_argument("--strict-domain", action="store_true", default=None,
                        help="reject capacities/schedules beyond the invariance limit")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized multistarts")


def _load(args) -> object:
    overrides = {
        "budget": args.budget,
        "pieces": args.pieces,
        "horizon": args.horizon,
        "strict_domain": args.strict_domain,
    }
    source = args.scenario if args.scenario else (args.preset or "quezon-city")
    scenario = load_scenario(source, overrides=overrides)
    if args.capacity is not None:
        scenario = scenario.with_updates(capacity=parse_capacity_spec(args.capacity))
        validate_scenario(scenario)
    return scenario


def _settings(args) -> SolverSettings:
    return SolverSettings(seed=args.seed)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wolbachia-control",
        description="Simulate and optimize Wolbachia release policies for dengue control")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate one release schedule")
    _add_scenario_args(p_sim)
    p_sim.add_argument("--schedule", required=True, metavar="SPEC",
                       help="constant:R | linear:M | bump:M,PEAKDAY | "
                            "piecewise:V1,... | zero")
    p_sim.add_argument("--out", required=True, metavar="DIR")
    p_sim.add_argument("--oracle", action="store_true",
                       help="also run the fixed-step RK4 cross-check")
    p_sim.add_argument("--no-charts", action="store_true")

    p_opt = sub.add_parser("optimize", help="solve the constrained policy problem")
    _add_scenario_args(p_opt)
    p_opt.add_argument("--out", required=True, metavar="DIR")
    p_opt.add_argument("--compat-problem6", action="store_true",
                       help="charge a uniform ceil(T/N) days per piece")
    p_opt.add_argument("--no-charts", action="store_true")

    p_par = sub.add_parser("pareto", help="epsilon-constraint Pareto sweep")
    _add_scenario_args(p_par)
    p_par.add_argument("--out", required=True, metavar="DIR")
    p_par.add_argument("--k", type=int, default=100, help="number of budget caps")
    p_par.add_argument("--bmax", type=float, default=500_000_000.0,
                       help="largest budget cap")
    p_par.add_argument("--cold", action="store_true",
                       help="full multistart at every cap instead of warm starts")
    p_par.add_argument("--no-charts", action="store_true")

    p_tab = sub.add_parser("tables", help="price/capacity table experiments")
    _add_scenario_args(p_tab)
    p_tab.add_argument("name", choices=TABLE_EXPERIMENTS)
    p_tab.add_argument("--out", required=True, metavar="DIR")

    p_val = sub.add_parser("validate", help="validate a scenario document")
    _add_scenario_args(p_val)

    args = parser.parse_args(argv)

    try:
        scenario = _load(args)
    except ScenarioValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ScheduleError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "validate":
            warnings = validate_scenario(scenario)
            for w in warnings:
                print(f"warning: {w}")
            print(f"scenario OK: {scenario.name or 'unnamed'} "
                  f"(T={scenario.horizon}, N={scenario.pieces}, "
                  f"K_a={scenario.params.K_a:g})")
            return EXIT_OK

        if args.command == "simulate":
            schedule = parse_schedule_spec(args.schedule, horizon=scenario.horizon)
            _, _, summary = run_simulate(
                scenario, schedule, args.out, charts=not args.no_charts,
                oracle_step=0.001 if args.oracle else None,
                command="simulate " + args.schedule)
            print(f"peak J_h {summary['peak_J_h']:.2f} on day {summary['peak_day']}; "
                  f"total cost {summary['total_cost']:.2f} {summary['currency']}")
            return EXIT_OK

        if args.command == "optimize":
            policy, summary = run_optimize(
                scenario, args.out, settings=_settings(args),
                problem6_accounting=args.compat_problem6,
                charts=not args.no_charts)
            rates = ", ".join(f"{r:.1f}" for r in policy.rates)
            print(f"optimal rates [{rates}]")
            print(f"peak J_h {summary['peak_J_h']:.2f} on day {summary['peak_day']} "
                  f"({summary['peak_reduction'] * 100:.1f}% below zero policy); "
                  f"total cost {summary['total_cost']:.2f}")
            return EXIT_OK

        if args.command == "pareto":
            front, filtered = run_pareto(
                scenario, args.k, args.bmax, args.out,
                settings=_settings(args), warm_start=not args.cold,
                charts=not args.no_charts)
            failed = sum(1 for p in front.points if p.failed)
            print(f"{len(front.points)} caps solved ({failed} failed), "
                  f"{len(filtered.points)} on the filtered front")
            return EXIT_OK

        if args.command == "tables":
            records = table_experiments(args.name, scenario, args.out,
                                        settings=_settings(args))
            for r in records:
                print(f"P0={r['initial_capacity']:.0f} price={r['unit_price']:.2f} "
                      f"release={r['total_release']:.0f} "
                      f"societal={r['societal_cost']:.2f}")
            return EXIT_OK
    except ScenarioValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScheduleError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    parser.error(f"unhandled command {args.command}")
    return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
