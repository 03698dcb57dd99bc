import numpy as np
import pytest

from cnt.errors import InputError, ParseError
from cnt.events import EventRecord, EventStream
from cnt.io import RECORD, read_events, write_events

from conftest import random_stream


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_round_trip_is_identity(tmp_path, rng, suffix):
    s = random_stream(rng)
    path = tmp_path / f"ev{suffix}"
    write_events(path, s)
    back = read_events(path, s.width, s.height, duration_us=s.duration_us)
    assert back == s


def test_csv_line_parses_to_record(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("t_us,x,y,p\n1500,10,20,-1\n")
    s = read_events(path, 32, 32)
    assert s[0] == EventRecord(1500, 10, 20, -1)


def test_csv_is_resorted(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("t_us,x,y,p\n20,1,1,1\n10,2,2,-1\n10,1,2,1\n")
    s = read_events(path, 4, 4)
    assert list(s.t) == [10, 10, 20] and list(s.x) == [1, 2, 1]


def test_zero_polarity_rejected_with_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_us,x,y,p\n1,1,1,1\n2,1,1,0\n")
    with pytest.raises(ParseError, match="line 3"):
        read_events(path, 4, 4)


def test_malformed_line_named(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_us,x,y,p\n1,1,1,1\n2,1,x,1\n")
    with pytest.raises(ParseError, match="line 3"):
        read_events(path, 4, 4)
    path.write_text("t_us,x,y,p\n1,1,1\n")
    with pytest.raises(ParseError, match="line 2"):
        read_events(path, 4, 4)
    path.write_text("time,x,y,p\n")
    with pytest.raises(ParseError, match="line 1"):
        read_events(path, 4, 4)


def test_out_of_bounds_pixel_rejected(tmp_path):
    path = tmp_path / "oob.csv"
    path.write_text("t_us,x,y,p\n1,4,0,1\n")
    with pytest.raises(InputError):
        read_events(path, 4, 4)


def test_binary_layout(tmp_path):
    s = EventStream.from_records([(7, 1, 2, -1), (9, 3, 0, 1)], 4, 4)
    path = tmp_path / "ev.bin"
    write_events(path, s)
    raw = path.read_bytes()
    assert raw[:4] == b"EVS1" and len(raw) == 4 + 2 * 16
    rec = np.frombuffer(raw[4:], dtype=RECORD)
    assert rec["t"].tolist() == [7, 9] and rec["p"].tolist() == [-1, 1]
    assert bytes(rec["pad"][0]) == b"\0\0\0"


def test_binary_errors_name_offset(tmp_path):
    path = tmp_path / "ev.bin"
    path.write_bytes(b"NOPE")
    with pytest.raises(ParseError, match="offset 0"):
        read_events(path, 4, 4)
    good = EventStream.from_records([(1, 1, 1, 1)], 4, 4)
    write_events(path, good)
    path.write_bytes(path.read_bytes() + b"\x01\x02")
    with pytest.raises(ParseError, match="offset 20"):
        read_events(path, 4, 4)
    rec = np.zeros(1, dtype=RECORD)
    rec["p"] = 3
    path.write_bytes(b"EVS1" + rec.tobytes())
    with pytest.raises(ParseError, match="offset 4"):
        read_events(path, 4, 4)


def test_stream_basics(rng):
    s = random_stream(rng, n=50)
    assert len(list(s)) == 50 and s.is_sorted()
    with pytest.raises(InputError):
        EventStream([1, 2], [0], [0], [1], 4, 4)
    sub = s.slice_time(10_000, 50_000)
    assert np.all((sub.t >= 10_000) & (sub.t < 50_000))
    both = EventStream.concatenate([s.slice_time(0, 50_000), s.slice_time(50_000, 10**9)])
    assert both == s
    bad = EventStream([0], [40], [0], [1], 32, 24)
    with pytest.raises(InputError):
        bad.validate()


def test_sorted_order_breaks_ties_by_row_column_polarity():
    s = EventStream.from_records([(5, 2, 1, 1), (5, 1, 1, 1), (5, 0, 2, -1), (5, 1, 1, -1)], 4, 4)
    out = s.sorted()
    assert [(r.y, r.x, r.p) for r in out] == [(1, 1, -1), (1, 1, 1), (1, 2, 1), (2, 0, -1)]
