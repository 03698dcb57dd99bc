import numpy as np
import pytest

from cnt.aggregation import (AggregationParams, aggregate, aggregate_window, map_sequence,
                             max_windows)
from cnt.errors import ConfigurationError, InputError, RangeError
from cnt.events import EventStream

from conftest import random_stream


def _stream(records, w=8, h=6, duration_us=100_000):
    return EventStream.from_records(records, w, h, duration_us)


def test_empty_stream_gives_zero_map():
    m = aggregate(EventStream.empty(8, 6, 100_000), 0.05, AggregationParams())
    assert m.values.shape == (6, 8) and not m.values.any()


def test_single_event_lands_on_its_pixel():
    m = aggregate(_stream([(1000, 3, 4, 1)]), 0.02, AggregationParams())
    assert m.values[4, 3] == 1 and m.values.sum() == 1


def test_opposite_polarities_cancel():
    m = aggregate(_stream([(1000, 3, 4, 1), (1200, 3, 4, -1)]), 0.02, AggregationParams())
    assert not m.values.any()


def test_window_is_half_open():
    s = _stream([(0, 0, 0, 1), (40_000, 1, 0, 1)])
    m = aggregate(s, 0.02, AggregationParams(1, 0.04))
    assert m.values[0, 0] == 1 and m.values[0, 1] == 0


def test_map_sequence_centres_abut():
    s = random_stream(np.random.default_rng(0), duration_us=200_000)
    maps = map_sequence(s, 0.02, 2, AggregationParams(1, 0.04))
    assert maps[1].t_center - maps[0].t_center == pytest.approx(0.04)


def test_map_sequence_past_end_raises():
    s = random_stream(np.random.default_rng(0), duration_us=100_000)
    with pytest.raises(RangeError):
        map_sequence(s, 0.02, 4, AggregationParams(1, 0.04))
    assert max_windows(s, AggregationParams(1, 0.04)) == 2


def test_unsorted_stream_rejected():
    s = EventStream(np.array([5, 1]), np.array([0, 0]), np.array([0, 0]), np.array([1, 1]), 4, 4)
    with pytest.raises(InputError):
        aggregate(s, 0.0, AggregationParams())
    with pytest.raises(InputError):
        map_sequence(s, 0.02, 2, AggregationParams())


def test_params_validation():
    assert AggregationParams(4, 0.04).window == pytest.approx(0.01)
    for bad in ({"n": 0}, {"n": 1.5}, {"tau": 0.0}):
        with pytest.raises(ConfigurationError):
            AggregationParams(**bad)


def test_double_window_is_sum_of_halves():
    s = random_stream(np.random.default_rng(1), duration_us=100_000)
    a, b = map_sequence(s, 0.01, 2, AggregationParams(2, 0.04))
    whole = aggregate_window(s, 0.02, 0.04)
    np.testing.assert_array_equal(a.values + b.values, whole.values)


def test_polarity_flip_negates(rng):
    s = random_stream(rng)
    p = AggregationParams(1, 0.04)
    np.testing.assert_array_equal(aggregate(s.flipped(), 0.05, p).values,
                                  -aggregate(s, 0.05, p).values)


def test_event_conservation(rng):
    s = random_stream(rng, n=300)
    m = aggregate_window(s, 0.05, 0.1)
    assert np.abs(m.values).sum() <= len(s)
    single = random_stream(rng, n=40, width=100, height=100)
    flat = single.y.astype(int) * 100 + single.x
    if len(np.unique(flat)) == len(flat):
        assert np.abs(aggregate_window(single, 0.05, 0.1).values).sum() == len(single)


def test_n_consistency(rng):
    s = random_stream(rng, n=800, duration_us=200_000)
    a = aggregate(s, 0.05, AggregationParams(2, 0.04))
    b = aggregate(s, 0.07, AggregationParams(2, 0.04))
    whole = aggregate(s, 0.06, AggregationParams(1, 0.04))
    np.testing.assert_array_equal(a.values + b.values, whole.values)
