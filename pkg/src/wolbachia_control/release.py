"""Release-schedule families and their normalizations.

Four families are supported: constant, linearly decreasing (peak at day 0,
zero at the horizon), a sech bump peaking at a chosen day, and the
N-piece piecewise-constant policy the optimizer works in.  Schedules are
immutable; normalization returns rescaled copies.  Piecewise pieces follow
the right-closed convention: piece i covers days (l*(i-1), l*i] with
l = ceil(T/N), the last piece truncated at T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels

_EMPTY = np.empty(0)


class ScheduleError(ValueError):
    """Invalid schedule construction or evaluation."""


@dataclass(frozen=True)
class ReleaseSchedule:
    """Base class; concrete families implement the packed-kernel protocol."""

    is_piecewise = False

    def pack(self):
        """(kind, a, b, values) encoding consumed by the numeric kernels."""
        raise NotImplementedError

    def breakpoints(self, horizon: float) -> tuple[float, ...]:
        """Interior discontinuities in (0, horizon); empty for smooth families."""
        return ()

    def max_rate(self, horizon: float) -> float:
        """Maximum of r(t) over [0, horizon]."""
        raise NotImplementedError

    def scaled(self, factor: float) -> "ReleaseSchedule":
        """Copy with the magnitude parameter multiplied by ``factor``."""
        raise NotImplementedError

    def _check_time(self, t: float, horizon_attr: float | None) -> None:
        if t < 0.0:
            raise ScheduleError(f"release evaluated at negative time t={t}")
        if horizon_attr is not None and t > horizon_attr * (1 + 1e-12):
            raise ScheduleError(
                f"release evaluated at t={t} beyond the schedule horizon {horizon_attr}")


@dataclass(frozen=True)
class ConstantRelease(ReleaseSchedule):
    """Single fixed daily release rate r(t) = rate."""

    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ScheduleError(f"release rate must be >= 0, got {self.rate}")

    def pack(self):
        return kernels.REL_CONSTANT, float(self.rate), 0.0, _EMPTY

    def value(self, t: float) -> float:
        self._check_time(t, None)
        return self.rate

    def max_rate(self, horizon: float) -> float:
        return self.rate

    def scaled(self, factor: float) -> "ConstantRelease":
        return ConstantRelease(self.rate * factor)


@dataclass(frozen=True)
class LinearRelease(ReleaseSchedule):
    """Linearly decreasing release: r(t) = 2*magnitude*(1 - t/horizon).

    Starts at twice the magnitude parameter, hits zero exactly at the
    horizon and is clamped at zero beyond it.
    """

    magnitude: float
    horizon: float = 365.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ScheduleError(f"magnitude must be >= 0, got {self.magnitude}")
        if self.horizon <= 0:
            raise ScheduleError(f"horizon must be positive, got {self.horizon}")

    def pack(self):
        return kernels.REL_LINEAR, float(self.magnitude), float(self.horizon), _EMPTY

    def value(self, t: float) -> float:
        self._check_time(t, None)
        return max(0.0, 2.0 * self.magnitude * (1.0 - t / self.horizon))

    def max_rate(self, horizon: float) -> float:
        return 2.0 * self.magnitude

    def scaled(self, factor: float) -> "LinearRelease":
        return replace(self, magnitude=self.magnitude * factor)


@dataclass(frozen=True)
class BumpRelease(ReleaseSchedule):
    """Sech-shaped release peaking at ``peak_day``: r(t) = m*sech(0.01*(t - peak_day))."""

    magnitude: float
    peak_day: float

    def __post_init__(self):
        if self.magnitude < 0:
            raise ScheduleError(f"magnitude must be >= 0, got {self.magnitude}")

    def pack(self):
        return kernels.REL_BUMP, float(self.magnitude), float(self.peak_day), _EMPTY

    def value(self, t: float) -> float:
        self._check_time(t, None)
        return self.magnitude / math.cosh(0.01 * (t - self.peak_day))

    def max_rate(self, horizon: float) -> float:
        if 0.0 <= self.peak_day <= horizon:
            return self.magnitude
        nearest = 0.0 if self.peak_day < 0 else horizon
        return self.value(nearest)

    def scaled(self, factor: float) -> "BumpRelease":
        return replace(self, magnitude=self.magnitude * factor)


@dataclass(frozen=True)
class PiecewiseRelease(ReleaseSchedule):
    """N-piece piecewise-constant policy over [0, horizon].

    ``values[i-1]`` is the rate on piece i = (l*(i-1), l*i], l = ceil(T/N);
    the index is clipped to [1, N] so t = 0 reads piece 1 and times beyond
    the last start read the last piece.
    """

    values: tuple
    horizon: float

    is_piecewise = True

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) == 0:
            raise ScheduleError("piecewise schedule needs at least one piece")
        if any(v < 0 for v in self.values):
            raise ScheduleError("piecewise values must all be >= 0")
        if self.horizon <= 0:
            raise ScheduleError(f"horizon must be positive, got {self.horizon}")

    @property
    def pieces(self) -> int:
        return len(self.values)

    @property
    def piece_length(self) -> int:
        return math.ceil(self.horizon / self.pieces)

    def piece_index(self, t: float) -> int:
        """1-based piece index at time t (right-closed pieces)."""
        idx = math.ceil(t / self.piece_length)
        return min(max(idx, 1), self.pieces)

    def pack(self):
        return (kernels.REL_PIECEWISE, 0.0, float(self.piece_length),
                np.array(self.values, dtype=float))

    def value(self, t: float) -> float:
        self._check_time(t, self.horizon)
        return self.values[self.piece_index(t) - 1]

    def breakpoints(self, horizon: float) -> tuple[float, ...]:
        ell = self.piece_length
        return tuple(float(ell * i) for i in range(1, self.pieces)
                     if ell * i < min(horizon, self.horizon))

    def piece_days(self) -> tuple[int, ...]:
        """Number of integer days 1..T falling in each piece."""
        ell = self.piece_length
        total = int(self.horizon)
        counts = []
        for i in range(1, self.pieces + 1):
            hi = min(ell * i, total)
            lo = min(ell * (i - 1), total)
            counts.append(max(hi - lo, 0))
        return tuple(counts)

    def max_rate(self, horizon: float) -> float:
        return max(self.values)

    def scaled(self, factor: float) -> "PiecewiseRelease":
        return replace(self, values=tuple(v * factor for v in self.values))


def evaluate(schedule: ReleaseSchedule, t: float) -> float:
    """Daily release rate of ``schedule`` at time ``t`` (mosquitoes/day)."""
    return schedule.value(t)


def total_release(schedule: ReleaseSchedule, horizon: int) -> float:
    """Total mosquitoes released, by the objective's daily-sum convention.

    Sum of r(t) over integer days t = 1..horizon (day 0 excluded, matching
    the cost functional).
    """
    return float(sum(schedule.value(float(t)) for t in range(1, int(horizon) + 1)))


def _rescaled(schedules, factors):
    return [s.scaled(k) for s, k in zip(schedules, factors)]


def normalize_same_peak(schedules, peak: float, horizon: int = 365):
    """Rescale each schedule so its maximum over [0, horizon] equals ``peak``.

    Raises:
        ScheduleError: ``peak`` not positive, or a schedule with zero magnitude.
    """
    if peak <= 0:
        raise ScheduleError(f"target peak must be positive, got {peak}")
    factors = []
    for s in schedules:
        current = s.max_rate(horizon)
        if current <= 0:
            raise ScheduleError(f"cannot normalize zero-magnitude schedule {s}")
        factors.append(peak / current)
    return _rescaled(schedules, factors)


def normalize_same_total(schedules, total: float, horizon: int = 365):
    """Rescale each schedule so its total release over days 1..horizon equals ``total``.

    Exact because every family is linear in its magnitude parameter.

    Raises:
        ScheduleError: ``total`` not positive, or a schedule with zero total.
    """
    if total <= 0:
        raise ScheduleError(f"target total must be positive, got {total}")
    factors = []
    for s in schedules:
        current = total_release(s, horizon)
        if current <= 0:
            raise ScheduleError(f"cannot normalize zero-total schedule {s}")
        factors.append(total / current)
    return _rescaled(schedules, factors)


def parse_schedule_spec(spec: str, horizon: int = 365) -> ReleaseSchedule:
    """Build a schedule from a CLI spec string.

    Formats: ``constant:R``, ``linear:M``, ``bump:M,PEAKDAY``,
    ``piecewise:V1,V2,...``, ``zero``.
    """
    spec = spec.strip()
    if spec == "zero":
        return ConstantRelease(0.0)
    if ":" not in spec:
        raise ScheduleError(f"malformed schedule spec {spec!r}; expected kind:args")
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    parts = [p for p in args.split(",") if p.strip()]
    try:
        numbers = [float(p) for p in parts]
    except ValueError as exc:
        raise ScheduleError(f"non-numeric value in schedule spec {spec!r}") from exc
    if kind == "constant" and len(numbers) == 1:
        return ConstantRelease(numbers[0])
    if kind == "linear" and len(numbers) == 1:
        return LinearRelease(numbers[0], horizon=float(horizon))
    if kind == "bump" and len(numbers) == 2:
        return BumpRelease(numbers[0], peak_day=numbers[1])
    if kind == "piecewise" and numbers:
        return PiecewiseRelease(tuple(numbers), horizon=float(horizon))
    raise ScheduleError(f"unrecognized schedule spec {spec!r}")
