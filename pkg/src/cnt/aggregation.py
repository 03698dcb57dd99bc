"""Neuromorphic speckle maps: per-pixel polarity sums over a time window."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError, RangeError
from .events import EventStream

STAGES = ("aggregated", "denoised", "mean-subtracted")


@dataclass(frozen=True, eq=False)
class SpeckleMap:
    """A real-valued map on the sensor grid (rows = y, columns = x)."""

    values: np.ndarray
    t_center: float
    window: float
    stage: str = "aggregated"

    def __post_init__(self):
        if self.stage not in STAGES:
            raise InputError(f"unknown map stage {self.stage!r}")
        if not self.window > 0:
            raise InputError("map window must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values: np.ndarray, stage: str) -> "SpeckleMap":
        return SpeckleMap(values, self.t_center, self.window, stage)


@dataclass(frozen=True)
class AggregationParams:
    """Temporal ratio ``n`` and reference exposure ``tau``; window = tau / n."""

    n: int = 1
    tau: float = 0.040

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError("n must be a positive integer")
        if not self.tau > 0:
            raise ConfigurationError("tau must be positive")

    @property
    def window(self) -> float:
        return self.tau / self.n


def _us(t_seconds: float) -> int:
    # rounding first keeps abutting window edges identical whichever side computes them
    return int(math.ceil(round(t_seconds * 1e6, 6)))


def window_bounds_us(t_center: float, window: float) -> tuple[int, int]:
    """Integer microsecond bounds ``[lo, hi)`` of a window centred at ``t_center``."""
    return _us(t_center - window / 2), _us(t_center + window / 2)


def _accumulate(stream: EventStream, lo: int, hi: int) -> np.ndarray:
    i0, i1 = np.searchsorted(stream.t, [lo, hi], side="left")
    flat = stream.y[i0:i1].astype(np.int64) * stream.width + stream.x[i0:i1]
    counts = np.bincount(flat, weights=stream.p[i0:i1].astype(float),
                         minlength=stream.width * stream.height)
    return counts.reshape(stream.height, stream.width)


def aggregate_window(stream: EventStream, t_center: float, window: float,
                     check_sorted: bool = True) -> SpeckleMap:
    """Sum polarities of events with ``t`` in ``[t_center - window/2, t_center + window/2)``."""
    if check_sorted and not stream.is_sorted():
        raise InputError("event stream must be sorted by timestamp")
    lo, hi = window_bounds_us(t_center, window)
    return SpeckleMap(_accumulate(stream, lo, hi), float(t_center), float(window))


def aggregate(stream: EventStream, t_center: float, params: AggregationParams) -> SpeckleMap:
    """Neuromorphic speckle map over the window ``tau / n`` centred at ``t_center``."""
    return aggregate_window(stream, t_center, params.window)


def map_sequence(stream: EventStream, t_start: float, count: int,
                 params: AggregationParams) -> list[SpeckleMap]:
    """``count`` abutting maps centred at ``t_start + k * tau / n``.

    Raises :class:`RangeError` when any window starts before zero or ends
    after the stream duration.
    """
    if count < 2:
        raise InputError("map_sequence needs count >= 2")
    if not stream.is_sorted():
        raise InputError("event stream must be sorted by timestamp")
    dt = params.window
    first_lo, _ = window_bounds_us(t_start, dt)
    _, last_hi = window_bounds_us(t_start + (count - 1) * dt, dt)
    if first_lo < 0 or last_hi > stream.duration_us:
        raise RangeError(f"{count} windows of {dt * 1e3:.3f} ms from t={t_start:.6f} s "
                         f"exceed the stream duration of {stream.duration:.6f} s")
    return [aggregate_window(stream, t_start + k * dt, dt, check_sorted=False)
            for k in range(count)]


def max_windows(stream: EventStream, params: AggregationParams) -> int:
    """How many abutting windows starting at t = 0 fit in the stream."""
    return int(math.floor(stream.duration_us / (params.window * 1e6) + 1e-9))
