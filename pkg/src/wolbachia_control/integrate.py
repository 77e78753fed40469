"""Time integration of the model under a release schedule.

Two routes exist on purpose: an adaptive Dormand-Prince 5(4) integrator
(the production path) and a fixed-step classical RK4 (the independent
oracle the adaptive path is checked against).  Both restart exactly at
every schedule breakpoint so the discontinuous release rate never
straddles a step, and both emit the state at integer days 0..T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import STATE_NAMES, StateVector


class IntegrationError(RuntimeError):
    """Integration failed; carries the failure time and compartment if known."""

    def __init__(self, message: str, *, time: float | None = None,
                 compartment: str | None = None):
        super().__init__(message)
        self.time = time
        self.compartment = compartment


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive step-control settings.

    ``rel_tol``/``abs_tol`` enter the mixed error norm
    max_i |err_i| / (abs_tol + rel_tol*|y_i|); ``initial_step`` of None lets
    the integrator pick a starting step per segment.
    """

    rel_tol: float = 1e-6
    abs_tol: float = 1e-8
    max_step: float = 1.0
    initial_step: float | None = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.initial_step is not None and self.initial_step <= 0:
            raise ValueError("initial_step must be positive when given")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class Trajectory:
    """Daily-sampled solution of one integration run.

    ``states`` holds one row per integer day, columns in ``STATE_NAMES``
    order.  ``stats`` carries step-acceptance counts; ``diagnostics`` holds
    human-readable warnings (e.g. the aquatic total exceeding K_a).
    """

    times: np.ndarray
    states: np.ndarray
    stats: dict
    diagnostics: tuple[str, ...] = ()
    method: str = "dopri54"

    def __post_init__(self):
        self.times.setflags(write=False)
        self.states.setflags(write=False)
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("times and states lengths differ")
        if self.times.shape[0] == 0 or self.times[0] != 0.0:
            raise ValueError("trajectory must start at t=0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def state_at_day(self, day: int) -> StateVector:
        return StateVector.from_array(self.states[day])

    def column(self, name: str) -> np.ndarray:
        return self.states[:, STATE_NAMES.index(name)]


_STATUS_MESSAGES = {
    kernels.MAX_STEPS_EXCEEDED: "step count exceeded",
    kernels.STEP_UNDERFLOW: "error control failed: step size underflow",
    kernels.NEGATIVE_STATE: "positivity violation beyond round-off threshold",
    kernels.NON_FINITE: "state became non-finite",
}


def _raise_for_status(status: int, info: np.ndarray, method: str) -> None:
    if status == kernels.OK:
        return
    t = float(info[5])
    comp_idx = int(info[6])
    comp = STATE_NAMES[comp_idx] if 0 <= comp_idx < len(STATE_NAMES) else None
    msg = f"{method}: {_STATUS_MESSAGES[status]} at t={t:.6g}"
    if comp is not None:
        msg += f" (compartment {comp})"
    raise IntegrationError(msg, time=t, compartment=comp)


def _segments(schedule, horizon: int):
    """Split [0, T] at the schedule's breakpoints; per-segment packed release.

    For piecewise schedules each segment gets a constant-release packing so
    stage evaluations at segment endpoints can never read the neighbouring
    piece.
    """
    points = [b for b in schedule.breakpoints(horizon) if 0.0 < b < horizon]
    edges = [0.0] + points + [float(horizon)]
    packs = []
    for j in range(len(edges) - 1):
        if getattr(schedule, "is_piecewise", False):
            packs.append((kernels.REL_CONSTANT, float(schedule.values[j]), 0.0,
                          np.empty(0)))
        else:
            packs.append(schedule.pack())
    return edges, packs


def _empty_stats() -> dict:
    return {"steps_accepted": 0, "steps_rejected": 0, "rhs_evaluations": 0,
            "max_rel_aquatic_excess": -np.inf}


def _collect(stats: dict, info: np.ndarray) -> None:
    stats["steps_accepted"] += int(info[0])
    stats["steps_rejected"] += int(info[1])
    stats["rhs_evaluations"] += int(info[2])
    stats["max_rel_aquatic_excess"] = max(stats["max_rel_aquatic_excess"], float(info[4]))


def _finalize(times, states, stats, params, method) -> Trajectory:
    diagnostics = []
    if stats["max_rel_aquatic_excess"] > 1e-6:
        diagnostics.append(
            "aquatic total exceeded the carrying capacity by "
            f"{stats['max_rel_aquatic_excess']:.3e} relative; release likely "
            f"violates r(t) <= (psi+mu_a)*K_a = {params.max_valid_release:.6g}")
    return Trajectory(times=times, states=states, stats=stats,
                      diagnostics=tuple(diagnostics), method=method)


def integrate_adaptive(scenario, schedule, config: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the scenario under ``schedule`` with the adaptive 5(4) pair.

    ``scenario`` must expose ``params``, ``effective_initial_state()`` and
    ``horizon``.  Daily samples come from the quartic continuous extension,
    or from exact step landings (segment ends always land).

    Raises:
        IntegrationError: step budget exhausted, step underflow, a genuine
            positivity violation, or a non-finite state.
    """
    config = config or IntegratorConfig()
    params = scenario.params
    horizon = int(scenario.horizon)
    p = params.to_array()
    y = scenario.effective_initial_state().to_array().copy()

    states = np.empty((horizon + 1, len(STATE_NAMES)))
    states[0] = y
    times = np.arange(horizon + 1, dtype=float)
    stats = _empty_stats()
    info = np.empty(7)

    if horizon == 0:
        return _finalize(times, states, stats, params, "dopri54")

    edges, packs = _segments(schedule, horizon)
    h0 = 0.0 if config.initial_step is None else float(config.initial_step)
    for j in range(len(edges) - 1):
        t0, t1 = edges[j], edges[j + 1]
        kind, a, b, values = packs[j]
        lo = int(np.floor(t0)) + 1
        hi = int(np.floor(t1))
        sample_ts = np.arange(lo, hi + 1, dtype=float)
        samples_out = np.empty((sample_ts.shape[0], len(STATE_NAMES)))
        steps_left = config.max_steps - stats["steps_accepted"] - stats["steps_rejected"]
        status = kernels.dopri_segment(
            y, t0, t1, p, kind, a, b, values,
            config.rel_tol, config.abs_tol, config.max_step, h0,
            steps_left, sample_ts, samples_out, info)
        _collect(stats, info)
        _raise_for_status(status, info, "dopri54")
        states[lo:hi + 1] = samples_out

    return _finalize(times, states, stats, params, "dopri54")


def integrate_fixed_rk4(scenario, schedule, h: float) -> Trajectory:
    """Classical fixed-step RK4 reference integration.

    ``h`` must divide one day so integer days are landed exactly; schedule
    breakpoints (integer days for piecewise schedules) then align with the
    step grid automatically.
    """
    steps_per_day = round(1.0 / h)
    if steps_per_day < 1 or abs(steps_per_day * h - 1.0) > 1e-9:
        raise ValueError(f"step size {h} does not divide 1.0 day")

    params = scenario.params
    horizon = int(scenario.horizon)
    p = params.to_array()
    y = scenario.effective_initial_state().to_array().copy()

    states = np.empty((horizon + 1, len(STATE_NAMES)))
    states[0] = y
    times = np.arange(horizon + 1, dtype=float)
    stats = _empty_stats()
    info = np.empty(7)

    if horizon == 0:
        return _finalize(times, states, stats, params, "rk4")

    edges, packs = _segments(schedule, horizon)
    for j in range(len(edges) - 1):
        d0, d1 = int(edges[j]), int(edges[j + 1])
        if edges[j] != d0 or edges[j + 1] != d1:
            raise ValueError("fixed-step integration requires integer-day breakpoints")
        kind, a, b, values = packs[j]
        day_states = np.empty((d1 - d0, len(STATE_NAMES)))
        status = kernels.rk4_segment(y, d0, d1, p, kind, a, b, values,
                                     steps_per_day, day_states, info)
        _collect(stats, info)
        _raise_for_status(status, info, "rk4")
        states[d0 + 1:d1 + 1] = day_states

    return _finalize(times, states, stats, params, "rk4")


def sample_daily(traj: Trajectory, horizon: int) -> list[StateVector]:
    """States at integer days 0..horizon (horizon+1 samples).

    Raises:
        ValueError: the trajectory does not cover [0, horizon].
    """
    if traj.horizon < horizon:
        raise ValueError(
            f"trajectory covers [0, {traj.horizon:g}], requested horizon {horizon}")
    return [StateVector.from_array(traj.states[d]) for d in range(horizon + 1)]
