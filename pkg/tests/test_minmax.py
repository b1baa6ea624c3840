import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leadlag import (ExtremaError, Extremum, ExtremumKind, ExtremumSeries,
                     TimeMode, detect_extrema, dump_extrema, mean_wavelength,
                     rolling_wavelength)
from leadlag.market_data import CandleSeries

from synthetic import candles_from_path, sinusoid_series, walk_series


def contiguous_series(n, bar=1):
    t = np.arange(n, dtype=np.int64) * bar
    ones = np.ones(n)
    return CandleSeries("unit", bar, t, ones, ones, ones, ones)


def extrema_at(times, start_kind=ExtremumKind.MAX):
    kinds = [start_kind if i % 2 == 0 else
             (ExtremumKind.MIN if start_kind is ExtremumKind.MAX else ExtremumKind.MAX)
             for i in range(len(times))]
    ext = tuple(Extremum(k, int(t), 1.0, int(t), int(t))
                for k, t in zip(kinds, times))
    return ExtremumSeries(ext, 1.0, "unit")


# --- detection ------------------------------------------------------------


def test_monotone_prices_never_reverse():
    prices = np.linspace(100, 200, 400)
    with pytest.raises(ExtremaError, match="fewer than 2"):
        detect_extrema(candles_from_path(prices), timescale=1.0)


def test_constant_prices_never_cross():
    with pytest.raises(ExtremaError, match="fewer than 2|never determined"):
        detect_extrema(candles_from_path(np.full(400, 50.0)), timescale=1.0)


def test_series_too_short_for_warmup():
    with pytest.raises(ExtremaError, match="too short"):
        detect_extrema(candles_from_path(np.ones(20)), timescale=1.0)


def test_sinusoid_extrema_near_true_turning_points():
    period = 64
    s = sinusoid_series(4000, period=period, amplitude=50.0, noise=0.1, seed=3)
    ext = detect_extrema(s, timescale=2.0)
    assert len(ext) > 50
    devs = []
    for e in ext:
        phase = e.candle_index % period
        target = period / 4 if e.kind is ExtremumKind.MAX else 3 * period / 4
        devs.append(min(abs(phase - target), abs(phase - target - period),
                        abs(phase - target + period)))
    assert max(devs) <= 4
    assert np.mean(devs) <= 1.0


def test_alternation_and_causality_on_fixtures(walk_8k):
    for ts in (0.8, 1.5, 3.0):
        ext = detect_extrema(walk_8k, ts)
        kinds = ext.kinds
        assert np.all(kinds[1:] != kinds[:-1]), "kinds must alternate"
        assert np.all(np.diff(ext.times) > 0)
        for e in ext:
            assert e.confirm_time >= e.time


def test_max_prices_dominate_neighboring_mins():
    s = sinusoid_series(3000, period=50, amplitude=100.0, noise=0.5, seed=5)
    ext = detect_extrema(s, timescale=1.0)
    for prev, cur, nxt in zip(ext, ext.extrema[1:], ext.extrema[2:]):
        if cur.kind is ExtremumKind.MAX:
            assert cur.price >= prev.price
            assert cur.price >= nxt.price


def test_coarser_timescale_never_adds_extrema(walk_8k):
    sine = sinusoid_series(6000, period=50, amplitude=100.0, noise=1.0, seed=7)
    for series, scales in ((sine, (0.5, 1.0, 2.0, 4.0, 8.0)),
                           (walk_8k, (0.75, 1.5, 3.0, 6.0, 12.0))):
        counts = [len(detect_extrema(series, t)) for t in scales]
        for a, b in zip(counts, counts[1:]):
            assert b <= a


def test_detection_skips_warmup_bars():
    s = walk_series(2000, seed=9)
    ts = 2.0
    ext = detect_extrema(s, ts)
    assert ext.candle_indices[0] >= math.ceil(26 * ts)


def test_extremum_prices_use_high_for_max_low_for_min(walk_8k):
    ext = detect_extrema(walk_8k, 1.0)
    for e in ext.extrema[:50]:
        if e.kind is ExtremumKind.MAX:
            assert e.price == walk_8k.highs[e.candle_index]
        else:
            assert e.price == walk_8k.lows[e.candle_index]


def test_series_invariants_enforced():
    good = Extremum(ExtremumKind.MAX, 0, 1.0, 5, 0)
    same_kind = Extremum(ExtremumKind.MAX, 10, 1.0, 15, 10)
    with pytest.raises(ExtremaError, match="alternate"):
        ExtremumSeries((good, same_kind), 1.0, "x")
    backwards = Extremum(ExtremumKind.MIN, 0, 1.0, 0, 0)
    with pytest.raises(ExtremaError, match="increasing"):
        ExtremumSeries((good, backwards), 1.0, "x")
    with pytest.raises(ExtremaError, match="confirmation"):
        ExtremumSeries((Extremum(ExtremumKind.MAX, 10, 1.0, 5, 10),), 1.0, "x")


# --- wavelength ----------------------------------------------------------


def test_mean_wavelength_four_extrema():
    series = contiguous_series(200)
    ext = extrema_at([0, 50, 100, 150])
    assert mean_wavelength(ext, series, TimeMode.SECONDS) == 100.0
    assert mean_wavelength(ext, series, TimeMode.CANDLES) == 100.0


def test_mean_wavelength_two_extrema():
    series = contiguous_series(100)
    ext = extrema_at([0, 50])
    assert mean_wavelength(ext, series, TimeMode.SECONDS) == 100.0


def test_mean_wavelength_needs_two():
    series = contiguous_series(10)
    ext = extrema_at([3])
    with pytest.raises(ExtremaError):
        mean_wavelength(ext, series, TimeMode.SECONDS)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=500), min_size=1, max_size=60))
def test_mean_wavelength_telescopes_exactly(gaps):
    # the mean of per-gap wavelengths equals the closed form, bit for bit
    times = np.cumsum([0] + gaps)
    series = contiguous_series(int(times[-1]) + 1)
    ext = extrema_at(times)
    per_gap_sum = sum(2 * (b - a) for a, b in zip(times, times[1:]))
    oracle = per_gap_sum / (len(times) - 1)
    assert mean_wavelength(ext, series, TimeMode.SECONDS) == oracle


def test_rolling_wavelength_constant_gaps():
    ext = extrema_at([0, 7, 14, 21, 28])
    points = rolling_wavelength(ext, window=2)
    assert points == [(14, 14.0), (21, 14.0), (28, 14.0)]


def test_rolling_wavelength_two_gaps():
    ext = extrema_at([0, 10, 40])
    assert rolling_wavelength(ext, window=2) == [(40, 40.0)]


def test_rolling_full_window_equals_mean():
    times = [0, 13, 29, 40, 77]
    series = contiguous_series(100)
    ext = extrema_at(times)
    points = rolling_wavelength(ext, window=len(times) - 1)
    assert len(points) == 1
    assert points[0][1] == mean_wavelength(ext, series, TimeMode.SECONDS)


def test_rolling_needs_enough_extrema():
    with pytest.raises(ExtremaError):
        rolling_wavelength(extrema_at([0, 10]), window=2)


def test_dump_extrema_csv():
    ext = extrema_at([0, 50])
    text = dump_extrema(ext).decode()
    lines = text.strip().split("\n")
    assert lines[0] == "kind,time,price,confirm_time,candle_index"
    assert lines[1].startswith("max,0,")
    assert lines[2].startswith("min,50,")
