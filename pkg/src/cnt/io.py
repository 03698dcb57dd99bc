"""Event stream files.

Two formats are supported:

* CSV with the header ``t_us,x,y,p`` and one event per line.
* Binary: the magic ``b"EVS1"`` followed by little-endian 16-byte records
  ``(t_us: u64, x: u16, y: u16, p: i8, 3 zero bytes)``.

Readers re-sort and validate against the sensor size; because neither
format stores the sensor size it must be supplied by the caller.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError
from .events import EventStream

CSV_HEADER = "t_us,x,y,p"
MAGIC = b"EVS1"
RECORD = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "i1"), ("pad", "V3")])
assert RECORD.itemsize == 16


def _format_of(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "bin"):
            raise InputError(f"unknown event format {fmt!r}")
        return fmt
    return "csv" if path.suffix.lower() == ".csv" else "bin"


def write_events(path, stream: EventStream, fmt: str | None = None) -> None:
    """Write ``stream`` as CSV (``.csv`` suffix) or binary (anything else)."""
    path = Path(path)
    if _format_of(path, fmt) == "csv":
        cols = np.column_stack([stream.t, stream.x, stream.y, stream.p]).astype(np.int64)
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            np.savetxt(fh, cols, fmt="%d", delimiter=",")
    else:
        rec = np.zeros(len(stream), dtype=RECORD)
        rec["t"], rec["x"], rec["y"], rec["p"] = stream.t, stream.x, stream.y, stream.p
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(rec.tobytes())


def _parse_csv(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines or lines[0].strip().replace(" ", "") != CSV_HEADER:
        raise ParseError(f"line 1: expected header {CSV_HEADER!r}")
    body = "\n".join(lines[1:])
    if not body.strip():
        return np.zeros((0, 4), dtype=np.int64)
    try:
        arr = np.loadtxt(io.StringIO(body), delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError:
        arr = None
    if arr is None or (arr.size and arr.shape[1] != 4):
        # slow path only to name the offending line
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"line {i}: expected 4 fields, got {len(parts)}")
            try:
                [int(p) for p in parts]
            except ValueError:
                raise ParseError(f"line {i}: non-integer field in {line.strip()!r}") from None
        raise ParseError("malformed CSV event file")
    return arr.reshape(-1, 4)


def read_events(path, width: int, height: int, fmt: str | None = None,
                duration_us: int = -1) -> EventStream:
    """Read a stream written by :func:`write_events`, sort it and validate it."""
    path = Path(path)
    if _format_of(path, fmt) == "csv":
        arr = _parse_csv(path.read_text())
        bad = np.flatnonzero(~np.isin(arr[:, 3], (-1, 1)))
        if bad.size:
            raise ParseError(f"line {bad[0] + 2}: polarity must be +1 or -1, got {arr[bad[0], 3]}")
        neg = np.flatnonzero((arr[:, :3] < 0).any(axis=1))
        if neg.size:
            raise ParseError(f"line {neg[0] + 2}: negative timestamp or coordinate")
        t, x, y, p = arr.T
    else:
        raw = path.read_bytes()
        if raw[:4] != MAGIC:
            raise ParseError("offset 0: missing EVS1 magic")
        body = raw[4:]
        if len(body) % RECORD.itemsize:
            off = 4 + (len(body) // RECORD.itemsize) * RECORD.itemsize
            raise ParseError(f"offset {off}: truncated record")
        rec = np.frombuffer(body, dtype=RECORD)
        bad = np.flatnonzero((rec["p"] != 1) & (rec["p"] != -1))
        if bad.size:
            raise ParseError(f"offset {4 + bad[0] * RECORD.itemsize}: polarity must be +1 or -1, "
                             f"got {rec['p'][bad[0]]}")
        t = rec["t"].astype(np.int64)
        x, y, p = rec["x"], rec["y"], rec["p"]
    if len(t) and (np.max(x) >= width or np.max(y) >= height):
        raise InputError(f"event pixel outside the {width}x{height} sensor")
    stream = EventStream(t, x, y, p, width, height, duration_us)
    if not stream.is_sorted() or len(stream) > 1:
        stream = stream.sorted()
    stream.validate()
    return stream
