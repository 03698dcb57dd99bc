import csv

import numpy as np
import pytest
from scipy import ndimage

from cnt.aggregation import AggregationParams, SpeckleMap
from cnt.errors import DegenerateInputError, InputError, RangeError
from cnt.events import EventStream
from cnt.filtering import FilterSpec, transfer_function
from cnt.scene import FrameSequence, TrajectorySpec
from cnt.tracker import (Trajectory, cross_correlate, estimate_step, locate_peak, mean_subtract,
                         prepare_spectra, track_frames, track_recursive, track_spectra)

import oracles

PX_PER_MM = 7.5


def _pattern(rng, h=64, w=64, sigma=1.5):
    return ndimage.gaussian_filter(rng.normal(size=(h, w)), sigma, mode="wrap")


def _zero_mean(a):
    return a - a.mean()


# --- mean subtraction --------------------------------------------------------------------

def test_mean_subtract_examples():
    m = SpeckleMap(np.array([[1.0, 2.0], [3.0, 6.0]]), 0.1, 0.04, "denoised")
    out = mean_subtract(m)
    np.testing.assert_allclose(out.values, [[-2, -1], [0, 3]])
    assert out.stage == "mean-subtracted" and out.t_center == 0.1
    assert not mean_subtract(SpeckleMap(np.full((3, 3), 5.0), 0, 1.0)).values.any()


# --- cross-correlation -------------------------------------------------------------------

def test_autocorrelation_peaks_at_origin_with_unit_height(rng):
    a = _zero_mean(_pattern(rng))
    s = cross_correlate(a, a)
    assert s.integer_peak == (0, 0)
    assert s.peak_value == pytest.approx(1.0)
    assert np.allclose(s.peak, (0, 0), atol=1e-9)


def test_integer_shift_is_recovered(rng):
    a = _zero_mean(_pattern(rng))
    b = np.roll(a, (-3, 5), axis=(0, 1))     # b(r) = a(r - d), d = (dx 5, dy -3)
    s = cross_correlate(a, b)
    assert s.integer_peak == (5, -3)
    assert s.peak_value == pytest.approx(1.0)
    assert s.at(5, -3) == pytest.approx(1.0)


def test_surface_matches_direct_summation_oracle(rng):
    a = _zero_mean(rng.normal(size=(16, 16)))
    b = _zero_mean(rng.normal(size=(16, 16)))
    np.testing.assert_allclose(cross_correlate(a, b).values, oracles.circular_correlation(a, b),
                               atol=1e-9)


def test_shift_survives_noise_at_snr_10(rng):
    a = _pattern(rng)
    b = np.roll(a, (2, -4), axis=(0, 1))
    noise = a.std() / np.sqrt(10)
    a_n = _zero_mean(a + rng.normal(0, noise, a.shape))
    b_n = _zero_mean(b + rng.normal(0, noise, a.shape))
    assert cross_correlate(a_n, b_n).integer_peak == (-4, 2)


def test_subpixel_shift_within_a_tenth_pixel(rng):
    a = _pattern(rng, sigma=2.0)
    b = ndimage.shift(a, (0.4, 1.3), order=3, mode="grid-wrap")
    dx, dy = cross_correlate(_zero_mean(a), _zero_mean(b)).peak
    assert abs(dx - 1.3) < 0.1 and abs(dy - 0.4) < 0.1


def test_estimate_step_in_millimetres(rng):
    a = _pattern(rng, sigma=2.0)
    b = ndimage.shift(a, (0.0, 7.5), order=3, mode="grid-wrap")
    dx, dy, pk = estimate_step(_zero_mean(a), _zero_mean(b), PX_PER_MM)
    assert abs(dx - 1.0) < 0.02 and abs(dy) < 0.02
    assert 0.5 < pk <= 1.0 + 1e-9


def test_correlation_errors(rng):
    with pytest.raises(InputError):
        cross_correlate(np.ones((4, 4)), np.ones((4, 5)))
    with pytest.raises(DegenerateInputError):
        cross_correlate(np.zeros((8, 8)), rng.normal(size=(8, 8)))


def test_locate_peak_tie_prefers_smallest_displacement():
    s = np.zeros((8, 8))
    s[0, 3] = s[0, 1] = s[7, 0] = 1.0
    (dx, dy), v, ipk = locate_peak(s)
    assert ipk == (0, -1)
    assert v == 1.0


# --- invariances ---------------------------------------------------------------------------

def test_swapping_inputs_negates_the_shift(rng):
    a = _zero_mean(_pattern(rng))
    b = _zero_mean(ndimage.shift(a, (1.2, -2.6), order=3, mode="grid-wrap"))
    fwd = np.array(cross_correlate(a, b).peak)
    bwd = np.array(cross_correlate(b, a).peak)
    np.testing.assert_allclose(fwd, -bwd, atol=1e-6)


def test_common_shift_leaves_estimate_unchanged(rng):
    a = _zero_mean(_pattern(rng))
    b = np.roll(a, (1, 3), axis=(0, 1))
    base = cross_correlate(a, b).peak
    moved = cross_correlate(np.roll(a, (4, -7), (0, 1)), np.roll(b, (4, -7), (0, 1))).peak
    np.testing.assert_allclose(base, moved, atol=1e-9)


def test_mean_offset_removed_by_mean_subtraction(rng):
    a = _pattern(rng)
    b = np.roll(a, (0, 2), axis=(0, 1))
    ref = cross_correlate(_zero_mean(a), _zero_mean(b))
    off = cross_correlate(_zero_mean(a + 50.0), _zero_mean(b + 50.0))
    np.testing.assert_allclose(off.values, ref.values, atol=1e-9)


# --- the batch tracking core ---------------------------------------------------------------

def _shift_sequence(rng, shifts, sigma=2.0, size=(48, 64)):
    base = _pattern(rng, *size, sigma=sigma)
    pos = np.vstack([[0.0, 0.0], np.cumsum(shifts, axis=0)])
    return [ndimage.shift(base, (y, x), order=3, mode="grid-wrap") for x, y in pos], pos


def test_batch_core_agrees_with_pairwise_estimates(rng):
    shifts = rng.uniform(-2, 2, (20, 2))
    maps, _ = _shift_sequence(rng, shifts)
    steps, peaks, bad = track_spectra(prepare_spectra(maps), maps[0].shape, None, PX_PER_MM)
    assert bad == []
    for k in range(len(maps) - 1):
        dx, dy, pk = estimate_step(_zero_mean(maps[k]), _zero_mean(maps[k + 1]), PX_PER_MM)
        assert np.allclose(steps[k], (dx, dy), atol=1e-4)
        assert peaks[k] == pytest.approx(pk, abs=1e-4)


@pytest.mark.parametrize("spec", [FilterSpec(12, "gaussian"), FilterSpec(9),
                                  FilterSpec(40)])
def test_batch_core_with_filter_matches_filtered_pairs(rng, spec):
    from cnt.filtering import lowpass_array
    maps, _ = _shift_sequence(rng, rng.uniform(-2, 2, (5, 2)), sigma=0.7)
    H = transfer_function(spec, 64, 48)
    steps, _, _ = track_spectra(prepare_spectra(maps), (48, 64), H, PX_PER_MM)
    for k in range(4):
        a = lowpass_array(maps[k], spec)
        b = lowpass_array(maps[k + 1], spec)
        dx, dy, _ = estimate_step(_zero_mean(a), _zero_mean(b), PX_PER_MM)
        assert np.allclose(steps[k], (dx, dy), atol=1e-4)


def test_recursive_sum_equals_trajectory(rng):
    shifts = rng.uniform(-1.5, 1.5, (12, 2))
    maps, pos = _shift_sequence(rng, shifts)
    frames = FrameSequence(np.stack(maps), 25.0, 0.04, np.arange(13) * 0.04)
    rep = track_frames(frames, None, PX_PER_MM, d_ome=2.0)
    np.testing.assert_allclose(rep.trajectory.xy, np.vstack([[0, 0], np.cumsum(rep.steps, 0)]))
    np.testing.assert_allclose(rep.trajectory.xy, pos / PX_PER_MM, atol=0.02)


def test_static_frames_give_zero_trajectory(rng):
    a = _pattern(rng)
    frames = FrameSequence(np.stack([a] * 6), 25.0, 0.04, np.arange(6) * 0.04)
    rep = track_frames(frames, None, PX_PER_MM, d_ome=2.0, truth=TrajectorySpec.static(1.0))
    np.testing.assert_allclose(rep.trajectory.xy, 0.0, atol=1e-6)
    assert rep.endpoint_error_mm() < 1e-6
    assert rep.ok and len(rep.ome_violations) == 0


def test_ome_violations_flag_large_steps(rng):
    maps, _ = _shift_sequence(rng, [[3.0, 0], [20.0, 0], [1.0, 0]])
    frames = FrameSequence(np.stack(maps), 25.0, 0.04, np.arange(4) * 0.04)
    rep = track_frames(frames, None, PX_PER_MM, d_ome=1.0)
    assert list(rep.ome_violations) == [1]
    assert rep.ome_margins[0] == pytest.approx(1.0 - 3.0 / PX_PER_MM, abs=0.02)


def test_empty_windows_are_reported_or_raise():
    t = np.arange(0, 20_000, 7)
    rng = np.random.default_rng(0)
    s = EventStream(t, rng.integers(0, 32, len(t)), rng.integers(0, 24, len(t)),
                    rng.choice([-1, 1], len(t)), 32, 24, 200_000)
    rep = track_recursive(s, AggregationParams(1, 0.02), None, PX_PER_MM, 2.0,
                          truth=TrajectorySpec.static(0.2))
    assert rep.degenerate_steps and not rep.ok
    assert rep.final_error == 1.0
    with pytest.raises(DegenerateInputError):
        track_recursive(s, AggregationParams(1, 0.02), None, PX_PER_MM, 2.0, strict=True)


def test_tracking_needs_two_windows():
    s = EventStream.empty(32, 24, 30_000)
    with pytest.raises(RangeError):
        track_recursive(s, AggregationParams(1, 0.04), None, PX_PER_MM, 2.0)
    with pytest.raises(RangeError):
        track_frames(FrameSequence(np.zeros((1, 8, 8)), 25, 0.04, np.zeros(1)), None, 7.5, 2.0)


# --- reports -------------------------------------------------------------------------------

def test_trajectory_validation():
    with pytest.raises(InputError):
        Trajectory([0, 1], [[0, 0]])
    with pytest.raises(InputError):
        Trajectory([0, 0], [[0, 0], [1, 1]])


def test_report_csv_and_dict(rng, tmp_path):
    maps, _ = _shift_sequence(rng, [[1.0, 0.5]] * 4)
    frames = FrameSequence(np.stack(maps), 25.0, 0.04, np.arange(5) * 0.04 + 0.02)
    rep = track_frames(frames, None, PX_PER_MM, 2.0,
                       truth=TrajectorySpec.constant((1 / PX_PER_MM / 0.04, 0.5 / PX_PER_MM / 0.04),
                                                     1.0))
    rep.write_csv(tmp_path / "t.csv")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["t", "x_mm", "y_mm", "peak_value"]
    assert len(rows) == 6 and float(rows[1][3]) == 1.0
    assert float(rows[-1][1]) == pytest.approx(rep.trajectory.xy[-1, 0])
    d = rep.to_dict()
    assert d["final_error"] < 0.02
    assert rep.path_error() < 0.02
    np.testing.assert_allclose(d["truth_x_mm"], rep.truth.xy[:, 0])


def test_errors_need_ground_truth(rng):
    maps, _ = _shift_sequence(rng, [[1.0, 0]] * 2)
    rep = track_frames(FrameSequence(np.stack(maps), 25, 0.04, np.arange(3) * 0.04), None, 7.5, 2)
    assert rep.relative_errors is None
    for fn in (lambda: rep.final_error, rep.path_error, rep.endpoint_error_mm):
        with pytest.raises(InputError):
            fn()
