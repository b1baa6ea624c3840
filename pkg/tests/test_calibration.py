import numpy as np
import pytest

from leadlag import (CalibrationCache, CalibrationError, DataError,
                     TargetUnattainable, TimeMode, WavelengthCurve,
                     calibrate_timescale, detect_extrema, mean_wavelength,
                     synchronize_pair, truncate_to_common_span)

from synthetic import gapped_walk_series, sinusoid_series, walk_series

BAR = 3600


def test_sinusoid_calibrates_to_its_own_period():
    s = sinusoid_series(12000, period=50, amplitude=100.0, noise=1.0, seed=7)
    result = calibrate_timescale(s, 50 * BAR, TimeMode.CANDLES)
    assert result.relative_error <= 0.02
    assert abs(result.achieved_wavelength - 50 * BAR) / (50 * BAR) <= 0.02
    assert result.extrema_count > 100


def test_target_below_resolution_unreachable(walk_8k):
    with pytest.raises(TargetUnattainable, match="target unreachable"):
        calibrate_timescale(walk_8k, 1 * BAR, TimeMode.CANDLES)


def test_target_beyond_span_unreachable(walk_8k):
    with pytest.raises(TargetUnattainable, match="target unreachable"):
        calibrate_timescale(walk_8k, 4000 * BAR, TimeMode.CANDLES)


def test_wavelength_map_gap_is_reported(walk_8k):
    # a sinusoid-dominated market cannot express wavelengths below its period
    s = sinusoid_series(12000, period=50, amplitude=100.0, noise=1.0, seed=7)
    with pytest.raises(TargetUnattainable):
        calibrate_timescale(s, 30 * BAR, TimeMode.CANDLES)


def test_recalibration_at_achieved_wavelength_is_stable(walk_8k):
    first = calibrate_timescale(walk_8k, 60 * BAR, TimeMode.CANDLES)
    second = calibrate_timescale(walk_8k, first.achieved_wavelength,
                                 TimeMode.CANDLES)
    assert second.relative_error <= 0.02
    assert second.achieved_wavelength == pytest.approx(
        first.achieved_wavelength, rel=0.02)


def test_determinism(walk_8k):
    a = calibrate_timescale(walk_8k, 75 * BAR, TimeMode.CANDLES)
    b = calibrate_timescale(walk_8k, 75 * BAR, TimeMode.CANDLES)
    assert a == b


def test_seconds_mode_on_gapped_series():
    s = gapped_walk_series(8000, seed=13)
    target = 100 * BAR  # wall-clock seconds
    result = calibrate_timescale(s, target, TimeMode.SECONDS)
    ext = detect_extrema(s, result.timescale)
    assert mean_wavelength(ext, s, TimeMode.SECONDS) == result.achieved_wavelength
    assert result.relative_error <= 0.02


def test_curve_is_memoized(walk_8k):
    curve = WavelengthCurve(walk_8k, TimeMode.CANDLES)
    first = curve.evaluate(1.5)
    assert curve.evaluate(1.5) is first


# --- pair synchronization --------------------------------------------------


def test_identical_gap_free_pair_is_symmetric(walk_8k):
    res_p, res_s, lam_star = synchronize_pair(walk_8k, walk_8k, 50)
    assert res_p.relative_error <= 0.02
    assert res_s.relative_error <= 0.02
    # gap-free: candle clock == wall clock, so the seconds target equals
    # the achieved candle wavelength exactly
    assert lam_star == res_p.achieved_wavelength
    assert res_s.achieved_wavelength == lam_star
    assert res_s.timescale == res_p.timescale


def test_weekend_gaps_inflate_wall_clock_target():
    s = gapped_walk_series(8000, seed=13)
    res_p, res_s, lam_star = synchronize_pair(s, s, 50)
    assert lam_star > 50 * BAR
    assert res_p.achieved_wavelength == pytest.approx(50 * BAR, rel=0.02)


def test_disjoint_ranges_rejected():
    a = walk_series(500, seed=1, start=0)
    b = walk_series(500, seed=2, start=10_000_000)
    with pytest.raises(DataError, match="no overlapping span"):
        synchronize_pair(a, b, 50)


def test_common_span_truncation_before_calibration():
    a = walk_series(9000, seed=21, symbol="a")
    b = walk_series(6000, seed=22, symbol="b", start=2000 * BAR)
    ta, tb = truncate_to_common_span(a, b)
    assert ta.start_time == tb.start_time == 2000 * BAR
    assert ta.end_time == tb.end_time == 7999 * BAR
    assert len(ta) == 6000 and len(tb) == 6000


def test_cache_roundtrip(tmp_path, walk_8k):
    path = tmp_path / "cal.cache"
    cache = CalibrationCache(path)
    fresh = calibrate_timescale(walk_8k, 60 * BAR, TimeMode.CANDLES, cache=cache)
    cache.save()
    assert path.exists()

    reloaded = CalibrationCache(path)
    assert reloaded.lookup(walk_8k, TimeMode.CANDLES, 60 * BAR) == fresh.timescale
    hit = calibrate_timescale(walk_8k, 60 * BAR, TimeMode.CANDLES, cache=reloaded)
    assert hit == fresh


def test_cache_ignores_changed_data(tmp_path, walk_8k):
    path = tmp_path / "cal.cache"
    cache = CalibrationCache(path)
    calibrate_timescale(walk_8k, 60 * BAR, TimeMode.CANDLES, cache=cache)
    cache.save()
    other = walk_series(8000, seed=77, symbol="walk8k")  # same name, new data
    reloaded = CalibrationCache(path)
    assert reloaded.lookup(other, TimeMode.CANDLES, 60 * BAR) is None
