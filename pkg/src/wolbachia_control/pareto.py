"""Pareto front between release spending and societal cost.

The epsilon-constraint method sweeps a grid of release-budget caps; at
each cap the societal cost alone is minimized subject to the cap and the
capacity bounds, yielding one candidate front point per cap.  Dominated
points are filtered afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .optimize import (OptimalPolicy, SingleObjectiveProblem, SolverSettings,
                       _project_feasible, piece_structure, solve)


@dataclass(frozen=True)
class ParetoPoint:
    """One sweep result: the cap, the costs achieved under it, and the policy."""

    index: int
    budget_cap: float
    release_cost: float
    societal_cost: float
    rates: tuple
    failed: bool = False
    dominated: bool = False
    error: str | None = None


@dataclass(frozen=True)
class ParetoFront:
    """Sweep points ordered by ascending budget cap, with dominance flags set."""

    points: tuple[ParetoPoint, ...]

    def __post_init__(self):
        caps = [p.budget_cap for p in self.points]
        if any(b < a for a, b in zip(caps, caps[1:])):
            raise ValueError("pareto points must be sorted by budget cap")

    @property
    def nondominated(self) -> tuple[ParetoPoint, ...]:
        return tuple(p for p in self.points if not p.dominated and not p.failed)


def budget_caps(count: int, b_max: float) -> np.ndarray:
    """Uniform cap grid over [0, b_max] inclusive of both endpoints."""
    if count < 2:
        raise ValueError("need at least 2 caps")
    if b_max <= 0:
        raise ValueError("b_max must be positive")
    return np.array([(k - 1) * b_max / (count - 1) for k in range(1, count + 1)])


def _mark_dominance(points: list[ParetoPoint]) -> list[ParetoPoint]:
    """Flag points weakly dominated in (release_cost, societal_cost)."""
    marked = []
    usable = [p for p in points if not p.failed]
    for p in points:
        if p.failed:
            marked.append(p)
            continue
        dominated = any(
            q is not p
            and q.release_cost <= p.release_cost
            and q.societal_cost <= p.societal_cost
            and (q.release_cost < p.release_cost or q.societal_cost < p.societal_cost)
            for q in usable)
        marked.append(replace(p, dominated=dominated))
    return marked


def filter_dominated(points) -> ParetoFront:
    """Drop weakly dominated points, keeping the stable input order.

    Exact duplicates in both coordinates are collapsed to their first
    occurrence.
    """
    pts = list(points.points if isinstance(points, ParetoFront) else points)
    if not pts:
        raise ValueError("need at least one point")
    marked = _mark_dominance(pts)
    survivors = []
    seen_coords = set()
    for p in marked:
        if p.failed or p.dominated:
            continue
        coords = (p.release_cost, p.societal_cost)
        if coords in seen_coords:
            continue
        seen_coords.add(coords)
        survivors.append(p)
    return ParetoFront(points=tuple(survivors))


def solve_point(scenario, cap: float, settings: SolverSettings | None = None,
                warm_from=None) -> OptimalPolicy:
    """Solve the societal-cost subproblem at one cap.

    Without ``warm_from`` this is the full multistart solve (the cold
    reference); with it, the previous solution and the budget-saturating
    policy are the only starts, which is what the warm sweep runs.
    """
    problem = SingleObjectiveProblem(
        scenario=scenario, budget=float(cap),
        settings=settings or SolverSettings(), objective_mode="societal")
    if warm_from is None:
        return solve(problem)
    ub, budget_coeffs, _, _ = piece_structure(problem)
    saturate = _project_feasible(ub.copy(), ub, problem.effective_budget, budget_coeffs)
    warm = np.asarray(warm_from, dtype=float)
    return solve(problem, starts=[warm, saturate])


def verify_cold_starts(scenario, front: ParetoFront, count: int = 10,
                       seed: int = 0,
                       settings: SolverSettings | None = None) -> float:
    """Re-solve a random sample of caps cold; worst relative societal gap.

    Guards against warm starting biasing the front: a warm sweep is accepted
    when this gap stays within 0.5% (the cold solve may also be *worse*,
    multistart being no global guarantee, so the gap is two-sided).
    """
    usable = [p for p in front.points if not p.failed]
    if not usable:
        raise ValueError("no successful points to verify")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(usable), size=min(count, len(usable)), replace=False)
    worst = 0.0
    for i in sorted(int(j) for j in picks):
        p = usable[i]
        cold = solve_point(scenario, p.budget_cap, settings)
        denom = max(abs(cold.breakdown.societal_cost), 1.0)
        worst = max(worst, abs(cold.breakdown.societal_cost - p.societal_cost) / denom)
    return worst


def epsilon_constraint_sweep(scenario, count: int, b_max: float,
                             settings: SolverSettings | None = None,
                             warm_start: bool = True) -> ParetoFront:
    """Sweep ``count`` release-budget caps uniformly over [0, b_max].

    Minimizes societal cost subject to release spending <= cap and the
    capacity bounds.  Warm starting feeds each solve the previous solution
    (always feasible, since caps grow); a failed solve marks its point and
    the sweep continues.
    """
    settings = settings or SolverSettings()
    caps = budget_caps(count, b_max)
    points: list[ParetoPoint] = []
    previous: np.ndarray | None = None

    for k, cap in enumerate(caps, start=1):
        try:
            policy = solve_point(
                scenario, float(cap), settings,
                warm_from=previous if (warm_start and previous is not None) else None)
        except Exception as exc:  # mark-and-skip: one bad cap must not kill the sweep
            points.append(ParetoPoint(
                index=k, budget_cap=float(cap), release_cost=math.nan,
                societal_cost=math.nan, rates=(), failed=True, error=str(exc)))
            continue
        previous = policy.rates.copy()
        points.append(ParetoPoint(
            index=k, budget_cap=float(cap),
            release_cost=policy.breakdown.release_cost,
            societal_cost=policy.breakdown.societal_cost,
            rates=tuple(policy.rates.tolist())))

    marked = _mark_dominance(points)
    return ParetoFront(points=tuple(marked))
