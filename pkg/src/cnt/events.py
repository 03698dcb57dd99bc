"""Event records and the columnar event stream container."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InputError


class EventRecord(NamedTuple):
    """One polarity event: timestamp in microseconds, pixel column/row, polarity."""

    t: int
    x: int
    y: int
    p: int


@dataclass(frozen=True, eq=False)
class EventStream:
    """Columnar store of polarity events on a ``width`` x ``height`` sensor.

    Events are kept as four parallel arrays rather than a list of records;
    a one-second stream easily holds millions of events.

    Parameters
    ----------
    t, x, y, p : array_like
        Timestamps (integer microseconds), pixel columns, pixel rows and
        polarities (+1 or -1).
    width, height : int
        Sensor size in pixels.
    duration_us : int, optional
        Length of the recording. Defaults to one past the last timestamp.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    width: int
    height: int
    duration_us: int = field(default=-1)

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.int64)
        x = np.ascontiguousarray(self.x, dtype=np.uint16)
        y = np.ascontiguousarray(self.y, dtype=np.uint16)
        p = np.ascontiguousarray(self.p, dtype=np.int8)
        if not (t.ndim == x.ndim == y.ndim == p.ndim == 1):
            raise InputError("event columns must be one-dimensional")
        if not (len(t) == len(x) == len(y) == len(p)):
            raise InputError("event columns differ in length")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "p", p)
        if self.duration_us < 0:
            object.__setattr__(self, "duration_us", int(t.max()) + 1 if len(t) else 0)

    # construction helpers -------------------------------------------------

    @classmethod
    def empty(cls, width: int, height: int, duration_us: int = 0) -> "EventStream":
        z = np.zeros(0)
        return cls(z, z, z, z, width, height, duration_us)

    @classmethod
    def from_records(cls, records, width: int, height: int,
                     duration_us: int = -1) -> "EventStream":
        arr = np.array([tuple(r) for r in records], dtype=np.int64).reshape(-1, 4)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], width, height, duration_us)

    # basic protocol -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[EventRecord]:
        for t, x, y, p in zip(self.t.tolist(), self.x.tolist(), self.y.tolist(), self.p.tolist()):
            yield EventRecord(t, x, y, p)

    def __getitem__(self, i: int) -> EventRecord:
        return EventRecord(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.width == other.width and self.height == other.height
                and self.duration_us == other.duration_us
                and np.array_equal(self.t, other.t) and np.array_equal(self.x, other.x)
                and np.array_equal(self.y, other.y) and np.array_equal(self.p, other.p))

    def __repr__(self) -> str:
        return (f"EventStream(n={len(self)}, sensor={self.width}x{self.height}, "
                f"duration={self.duration_us} us)")

    @property
    def duration(self) -> float:
        """Recording length in seconds."""
        return self.duration_us * 1e-6

    # ordering and validation ---------------------------------------------

    def order(self) -> np.ndarray:
        """Permutation sorting by timestamp, ties broken by (y, x, polarity)."""
        return np.lexsort((self.p, self.x, self.y, self.t))

    def is_sorted(self) -> bool:
        """True when timestamps are non-decreasing."""
        return bool(np.all(np.diff(self.t) >= 0))

    def sorted(self) -> "EventStream":
        idx = self.order()
        return EventStream(self.t[idx], self.x[idx], self.y[idx], self.p[idx],
                           self.width, self.height, self.duration_us)

    def validate(self) -> None:
        """Raise :class:`InputError` on out-of-sensor pixels or bad polarities."""
        if len(self) == 0:
            return
        if self.x.max() >= self.width or self.y.max() >= self.height:
            raise InputError(f"event pixel outside {self.width}x{self.height} sensor")
        if not np.all(np.abs(self.p) == 1):
            raise InputError("polarity must be +1 or -1")
        if self.t.min() < 0:
            raise InputError("negative timestamp")

    # selection ------------------------------------------------------------

    def slice_time(self, t_lo_us: int, t_hi_us: int) -> "EventStream":
        """Events with ``t_lo_us <= t < t_hi_us``; requires a sorted stream."""
        i0, i1 = np.searchsorted(self.t, [t_lo_us, t_hi_us], side="left")
        return EventStream(self.t[i0:i1], self.x[i0:i1], self.y[i0:i1], self.p[i0:i1],
                           self.width, self.height, self.duration_us)

    def flipped(self) -> "EventStream":
        """Same events with every polarity negated."""
        return EventStream(self.t, self.x, self.y, -self.p, self.width, self.height,
                           self.duration_us)

    @staticmethod
    def concatenate(streams) -> "EventStream":
        streams = list(streams)
        first = streams[0]
        out = EventStream(np.concatenate([s.t for s in streams]),
                          np.concatenate([s.x for s in streams]),
                          np.concatenate([s.y for s in streams]),
                          np.concatenate([s.p for s in streams]),
                          first.width, first.height,
                          max(s.duration_us for s in streams))
        return out.sorted()
