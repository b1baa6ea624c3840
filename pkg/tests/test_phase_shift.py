import math

import numpy as np
import pytest

from leadlag import (Extremum, ExtremumKind, ExtremumSeries, PhaseShiftError,
                     TimeSelector, compute_phase_shifts, detect_extrema)
from leadlag.phase_shift import dump_phase_samples

from synthetic import negate_series, walk_series

MAX, MIN = ExtremumKind.MAX, ExtremumKind.MIN


def series_of(spec, symbol="m", confirm_lag=0):
    ext = tuple(Extremum(kind, t, 1.0, t + confirm_lag, i)
                for i, (kind, t) in enumerate(spec))
    return ExtremumSeries(ext, 1.0, symbol)


def test_lagging_maximum_positive_angle():
    primary = series_of([(MAX, 0), (MIN, 100)])
    secondary = series_of([(MAX, 10), (MIN, 150)])
    dist = compute_phase_shifts(primary, secondary)
    assert len(dist) == 1
    assert dist.samples[0].alpha == pytest.approx(0.1 * math.pi, abs=1e-15)
    assert dist.samples[0].alpha > 0  # secondary lags -> positive


def test_leading_minimum_negative_angle():
    primary = series_of([(MAX, 0), (MIN, 100)])
    secondary = series_of([(MIN, 90), (MAX, 200)])
    dist = compute_phase_shifts(primary, secondary)
    assert len(dist) == 1
    assert dist.samples[0].alpha == pytest.approx(-0.1 * math.pi, abs=1e-15)
    assert dist.samples[0].alpha < 0  # secondary leads -> negative


def test_coincident_same_kind_extremum_zero_angle():
    primary = series_of([(MAX, 0), (MIN, 100)])
    secondary = series_of([(MAX, 0), (MIN, 150)])
    dist = compute_phase_shifts(primary, secondary)
    assert len(dist) == 1
    assert dist.samples[0].alpha == 0.0


def test_opposite_kind_at_interval_start_wraps_to_minus_pi():
    primary = series_of([(MAX, 0), (MIN, 100)])
    secondary = series_of([(MIN, 0), (MAX, 90)])
    dist = compute_phase_shifts(primary, secondary)
    # the minimum at t=0 anchors to the minimum at t=100: a full half
    # interval away, which is the wrapped image of +pi
    assert dist.samples[0].alpha == -math.pi
    # the maximum at t=90 anchors to the same-kind maximum at t=0
    assert dist.samples[1].alpha == pytest.approx(0.9 * math.pi, abs=1e-15)


def test_self_comparison_all_zero():
    e = series_of([(MAX, 0), (MIN, 60), (MAX, 130), (MIN, 190), (MAX, 260)])
    dist = compute_phase_shifts(e, e, TimeSelector.EXTREMUM_TIME)
    assert len(dist) == 4  # the last extremum is excluded by the half-open span
    assert np.all(dist.alphas == 0.0)


def test_antiphase_all_minus_pi():
    times = [0, 60, 130, 190, 260]
    e = series_of([(MAX if i % 2 == 0 else MIN, t) for i, t in enumerate(times)])
    flipped = series_of([(MIN if i % 2 == 0 else MAX, t) for i, t in enumerate(times)])
    dist = compute_phase_shifts(e, flipped)
    assert np.all(dist.alphas == -math.pi)


def test_sample_count_matches_secondary_extrema_in_span():
    primary = series_of([(MAX, 100), (MIN, 200), (MAX, 300)])
    secondary = series_of([(MIN, 0), (MAX, 100), (MIN, 170), (MAX, 260), (MIN, 300)])
    # in span: 100, 170, 260 (0 before t_1; 300 not strictly before t_N)
    dist = compute_phase_shifts(primary, secondary)
    assert len(dist) == 3
    assert [s.secondary_index for s in dist.samples] == [1, 2, 3]


def test_empty_overlap_is_an_error():
    primary = series_of([(MAX, 0), (MIN, 100)])
    secondary = series_of([(MAX, 500), (MIN, 600)])
    with pytest.raises(PhaseShiftError, match="empty overlap"):
        compute_phase_shifts(primary, secondary)


def test_confirm_time_selector_applies_to_both_markets():
    primary = series_of([(MAX, 0), (MIN, 100)], confirm_lag=20)
    secondary = series_of([(MAX, 35), (MIN, 150)], confirm_lag=5)
    dist = compute_phase_shifts(primary, secondary, TimeSelector.CONFIRM_TIME)
    # primary bracket on confirm times is [20, 120); the secondary maximum
    # confirms at 40 and anchors to the same-kind confirm time 20
    assert len(dist) == 1
    assert dist.samples[0].time_mode_used is TimeSelector.CONFIRM_TIME
    assert dist.samples[0].alpha == pytest.approx((40 - 20) / 100 * math.pi)


def test_confirm_selector_empty_overlap_raises():
    primary = series_of([(MAX, 0), (MIN, 100)], confirm_lag=20)
    secondary = series_of([(MAX, 10), (MIN, 150)], confirm_lag=5)
    # on confirm times the secondary extrema (15, 155) both fall outside
    # the primary bracket [20, 120)
    with pytest.raises(PhaseShiftError, match="empty overlap"):
        compute_phase_shifts(primary, secondary, TimeSelector.CONFIRM_TIME)


def test_confirm_time_shifts_angles():
    primary = series_of([(MAX, 0), (MIN, 100)], confirm_lag=10)
    secondary = series_of([(MAX, 30), (MIN, 150)], confirm_lag=0)
    dist = compute_phase_shifts(primary, secondary, TimeSelector.CONFIRM_TIME)
    # primary bracket on confirm times: [10, 110); secondary max at 30
    assert dist.samples[0].alpha == pytest.approx((30 - 10) / 100 * math.pi)


def test_range_invariant_on_detected_extrema(walk_8k):
    a = detect_extrema(walk_8k, 1.0)
    b = detect_extrema(negate_series(walk_8k, "neg"), 1.3)
    for sel in TimeSelector:
        dist = compute_phase_shifts(a, b, sel)
        assert np.all(dist.alphas >= -math.pi)
        assert np.all(dist.alphas < math.pi)


def brute_force_alphas(primary, secondary, selector):
    tp = (primary.confirm_times if selector is TimeSelector.CONFIRM_TIME
          else primary.times)
    ts = (secondary.confirm_times if selector is TimeSelector.CONFIRM_TIME
          else secondary.times)
    out = []
    for j, tj in enumerate(ts):
        if not (tp[0] <= tj < tp[-1]):
            continue
        for i in range(len(tp) - 1):
            if tp[i] <= tj < tp[i + 1]:
                if primary.kinds[i] == secondary.kinds[j]:
                    s = tp[i]
                else:
                    s = tp[i + 1]
                alpha = (tj - s) / (tp[i + 1] - tp[i]) * math.pi
                if alpha == math.pi:
                    alpha = -math.pi
                out.append(alpha)
                break
    return np.array(out)


def random_extrema(rng, n, t_max):
    times = np.sort(rng.choice(np.arange(t_max), size=n, replace=False))
    start = MAX if rng.integers(2) == 0 else MIN
    return series_of([(start if i % 2 == 0 else (MIN if start is MAX else MAX),
                       int(t)) for i, t in enumerate(times)])


def test_agrees_with_bruteforce_bracketing_oracle():
    rng = np.random.default_rng(17)
    for _ in range(200):
        primary = random_extrema(rng, int(rng.integers(2, 12)), 1000)
        secondary = random_extrema(rng, int(rng.integers(2, 12)), 1000)
        expected = brute_force_alphas(primary, secondary, TimeSelector.EXTREMUM_TIME)
        try:
            dist = compute_phase_shifts(primary, secondary)
        except PhaseShiftError:
            assert expected.size == 0
            continue
        assert np.allclose(dist.alphas, expected, atol=1e-12)
        assert len(dist) == expected.size


def test_dump_phase_samples_csv():
    primary = series_of([(MAX, 0), (MIN, 100)])
    secondary = series_of([(MAX, 10), (MIN, 150)])
    dist = compute_phase_shifts(primary, secondary, wavelength_candles=42)
    text = dump_phase_samples(dist, secondary).decode()
    lines = text.strip().split("\n")
    assert lines[0] == "wavelength,alpha,secondary_time,mode"
    assert lines[1].startswith("42,")
    assert ",10,extremum" in lines[1]
