"""Economic objective: release cost, societal hospitalization cost, totals.

The functional is a discrete daily sum over days 1..T of the per-mosquito
release cost plus the daily per-patient cost of the healthcare-seeking
compartment, F = sum_t [C_r*r(t) + C_J*J_h(t)].  J_h enters as a
prevalence (occupied bed-days), not an incidence: C_J is the daily cost of
one hospitalized person, including productivity losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import Trajectory
from .release import PiecewiseRelease, ReleaseSchedule

DEFAULT_RELEASE_UNIT_COST = 4.85       # PHP per mosquito released
DEFAULT_DAILY_HOSPITAL_COST = 3401.52  # PHP per hospitalized person per day


@dataclass(frozen=True)
class CostConfig:
    """Unit costs: C_r per mosquito released, C_J per hospitalized person-day."""

    C_r: float = DEFAULT_RELEASE_UNIT_COST
    C_J: float = DEFAULT_DAILY_HOSPITAL_COST
    currency: str = "PHP"

    def __post_init__(self):
        if self.C_r < 0 or self.C_J < 0:
            raise ValueError("unit costs must be >= 0")


@dataclass(frozen=True)
class CostBreakdown:
    """Total and per-day cost series over days 0..T (day 0 contributes nothing)."""

    release_cost: float
    societal_cost: float
    total_cost: float
    daily_release_cost: np.ndarray
    daily_societal_cost: np.ndarray
    currency: str = "PHP"

    def __post_init__(self):
        self.daily_release_cost.setflags(write=False)
        self.daily_societal_cost.setflags(write=False)


def objective(traj: Trajectory, schedule: ReleaseSchedule, config: CostConfig,
              horizon: int, problem6_accounting: bool = False) -> CostBreakdown:
    """Cost breakdown of a simulated trajectory under ``schedule``.

    release_cost = sum_{t=1..T} C_r * r(t) and societal_cost =
    sum_{t=1..T} C_J * J_h(t) on the daily samples; day 0 is excluded.
    With ``problem6_accounting`` (piecewise schedules only) the release side
    is charged a uniform ceil(T/N) days per piece instead of per actual
    day, reproducing the reparameterized problem's bookkeeping, which
    overstates a truncated last piece.

    Raises:
        ValueError: trajectory shorter than ``horizon``, or problem6
            accounting requested for a non-piecewise schedule.
    """
    horizon = int(horizon)
    if traj.horizon < horizon:
        raise ValueError(
            f"trajectory covers [0, {traj.horizon:g}] but the objective needs {horizon} days")

    daily_release = np.zeros(horizon + 1)
    for t in range(1, horizon + 1):
        daily_release[t] = config.C_r * schedule.value(float(t))

    j_h = traj.column("J_h")[:horizon + 1]
    daily_societal = config.C_J * j_h
    daily_societal = daily_societal.copy()
    daily_societal[0] = 0.0

    if problem6_accounting:
        if not isinstance(schedule, PiecewiseRelease):
            raise ValueError("problem6 accounting applies only to piecewise schedules")
        ell = schedule.piece_length
        release_cost = float(config.C_r * ell * sum(schedule.values))
    else:
        release_cost = float(daily_release.sum())

    societal_cost = float(daily_societal.sum())
    return CostBreakdown(
        release_cost=release_cost,
        societal_cost=societal_cost,
        total_cost=release_cost + societal_cost,
        daily_release_cost=daily_release,
        daily_societal_cost=daily_societal,
        currency=config.currency,
    )


def unit_cost_from_program(total_program_cost: float, weekly_release: float,
                           fx: float = 1.0) -> float:
    """Per-mosquito cost implied by an annual program budget.

    ``total_program_cost`` is the yearly steady-state program cost in the
    source currency, ``weekly_release`` the mosquitoes released per week,
    ``fx`` the conversion into the target currency.

    Raises:
        ValueError: non-positive weekly release.
    """
    if weekly_release <= 0:
        raise ValueError(f"weekly_release must be positive, got {weekly_release}")
    return total_program_cost * fx / (weekly_release * 52.0)
