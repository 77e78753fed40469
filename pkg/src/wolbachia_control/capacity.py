"""Production-capacity profiles bounding the daily release rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CapacityRamp:
    """Mosquito production capacity ramping linearly from start-up to peak.

    Capacity is ``p0`` on day 1, rises linearly to ``p_max`` on ``peak_day``
    and stays there.  ``p0 == p_max`` (or ``peak_day <= 1``) gives a
    constant capacity.
    """

    p0: float
    p_max: float
    peak_day: float

    def __post_init__(self):
        if self.p0 < 0 or self.p_max < 0:
            raise ValueError("capacities must be >= 0")
        if self.p_max < self.p0:
            raise ValueError("ramp capacity must be non-decreasing (p_max >= p0)")

    def value(self, t: float) -> float:
        if t < 1.0:
            raise ValueError(f"capacity is defined for t >= 1, got t={t}")
        if self.peak_day <= 1.0:
            return self.p_max
        frac = min(1.0, (t - 1.0) / (self.peak_day - 1.0))
        return self.p0 + (self.p_max - self.p0) * frac

    @property
    def maximum(self) -> float:
        return self.p_max


@dataclass(frozen=True)
class TabulatedCapacity:
    """Capacity given at (day, value) knots, piecewise-linear in between.

    Constant extrapolation beyond the first/last knot.  Days must be
    strictly increasing and values non-negative (bounded by construction).
    """

    days: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "days", tuple(float(d) for d in self.days))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.days) != len(self.values) or not self.days:
            raise ValueError("days and values must be equal-length and non-empty")
        if any(b <= a for a, b in zip(self.days, self.days[1:])):
            raise ValueError("capacity days must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("capacities must be >= 0")

    def value(self, t: float) -> float:
        if t < 1.0:
            raise ValueError(f"capacity is defined for t >= 1, got t={t}")
        return float(np.interp(t, self.days, self.values))

    @property
    def maximum(self) -> float:
        return max(self.values)


def capacity_at(capacity, t: float) -> float:
    """Capacity P(t) in mosquitoes/day; errors for t < 1 (capacity starts on day 1)."""
    return capacity.value(t)


def constant_capacity(rate: float) -> CapacityRamp:
    """Convenience constructor for a flat capacity profile."""
    return CapacityRamp(p0=rate, p_max=rate, peak_day=1.0)


def parse_capacity_spec(spec: str):
    """Build a capacity from a CLI spec: ``P0,PMAX,PEAKDAY`` or a single constant."""
    parts = [p.strip() for p in str(spec).split(",") if p.strip()]
    try:
        numbers = [float(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"non-numeric value in capacity spec {spec!r}") from exc
    if len(numbers) == 1:
        return constant_capacity(numbers[0])
    if len(numbers) == 3:
        return CapacityRamp(p0=numbers[0], p_max=numbers[1], peak_day=numbers[2])
    raise ValueError(f"capacity spec {spec!r} must be 'P0,PMAX,PEAKDAY' or a single value")
