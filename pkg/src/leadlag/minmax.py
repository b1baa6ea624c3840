"""Detection of alternating relevant local extrema and their wavelength.

A candle series plus a timescale is turned into an alternating
min/max/min/... sequence: during each up phase of the stop-and-reverse
direction the running maximum of the highs is tracked and emitted once
the phase flips down (symmetrically for minima).  The bar on which the
flip happens is the extremum's confirmation time; the trailing phase
that never flips emits nothing.

The mean wavelength of such a sequence is twice the mean gap between
consecutive extrema, which telescopes to 2*(t_N - t_1)/(N - 1).
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

from .errors import ExtremaError
from .indicators import (DEFAULT_ATR_PERIOD, DEFAULT_DELTA_COEFF, DEFAULT_SLOW,
                         MacdParams, _ema_array, _sar_codes, atr)
from .market_data import CandleSeries, TimeMode, elapsed


class ExtremumKind(enum.Enum):
    MIN = -1
    MAX = 1


@dataclass(frozen=True)
class Extremum:
    """One relevant local extremum.

    ``time`` is the open time of the candle holding the extreme price,
    ``confirm_time`` the open time of the bar whose reversal fixed it;
    confirmation never precedes the extremum itself.
    """

    kind: ExtremumKind
    time: int
    price: float
    confirm_time: int
    candle_index: int


class ExtremumSeries:
    """Ordered, strictly alternating extrema of one market."""

    __slots__ = ("extrema", "timescale", "source_symbol", "__dict__")

    def __init__(self, extrema: Tuple[Extremum, ...], timescale: float,
                 source_symbol: str):
        extrema = tuple(extrema)
        if not extrema:
            raise ExtremaError("extremum series must not be empty")
        for a, b in zip(extrema, extrema[1:]):
            if a.kind is b.kind:
                raise ExtremaError(f"extrema kinds do not alternate at t={b.time}")
            if b.time <= a.time:
                raise ExtremaError(f"extrema times not increasing at t={b.time}")
        for e in extrema:
            if e.confirm_time < e.time:
                raise ExtremaError(f"confirmation before extremum at t={e.time}")
        object.__setattr__(self, "extrema", extrema)
        object.__setattr__(self, "timescale", float(timescale))
        object.__setattr__(self, "source_symbol", source_symbol)

    def __len__(self) -> int:
        return len(self.extrema)

    def __iter__(self):
        return iter(self.extrema)

    def __getitem__(self, i) -> Extremum:
        return self.extrema[i]

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.extrema], dtype=np.int64)

    @cached_property
    def confirm_times(self) -> np.ndarray:
        return np.array([e.confirm_time for e in self.extrema], dtype=np.int64)

    @cached_property
    def kinds(self) -> np.ndarray:
        """+1 for maxima, -1 for minima, aligned with ``times``."""
        return np.array([e.kind.value for e in self.extrema], dtype=np.int8)

    @cached_property
    def candle_indices(self) -> np.ndarray:
        return np.array([e.candle_index for e in self.extrema], dtype=np.int64)

    def __repr__(self) -> str:
        return (f"ExtremumSeries({self.source_symbol!r}, n={len(self)}, "
                f"timescale={self.timescale:g})")


def macd_warmup_bars(timescale: float) -> int:
    """First candle index trusted for phase detection at this timescale."""
    return math.ceil(DEFAULT_SLOW * timescale)


def detect_extrema(series: CandleSeries, timescale: float,
                   delta_coeff: float = DEFAULT_DELTA_COEFF) -> ExtremumSeries:
    """Run the extrema state machine on one candle series.

    Parameters
    ----------
    series : CandleSeries
    timescale : float
        Common scale factor for the (12, 26, 9) MACD periods; larger
        values resolve fewer, larger swings.
    delta_coeff : float
        Reversal threshold as a multiple of ATR(100).

    Returns
    -------
    ExtremumSeries
        Alternating confirmed extrema; the still-open trailing candidate
        is never emitted.

    Raises
    ------
    ExtremaError
        If the series is too short for the MACD warm-up at this
        timescale, or fewer than 2 extrema get confirmed.
    """
    n = len(series)
    if n <= DEFAULT_SLOW * timescale:
        raise ExtremaError(f"series too short: {n} candles <= "
                           f"{DEFAULT_SLOW * timescale:.1f} warm-up bars")
    params = MacdParams.from_timescale(timescale)
    closes = series.closes
    line = _ema_array(closes, params.fast_period) - _ema_array(closes, params.slow_period)
    signal = _ema_array(line, params.signal_period)
    delta = delta_coeff * atr(series, DEFAULT_ATR_PERIOD).values

    state = _sar_codes(line - signal, delta)
    state[:macd_warmup_bars(timescale)] = 0  # seeded-EMA transients excluded

    nz = np.flatnonzero(state)
    if nz.size == 0:
        raise ExtremaError("fewer than 2 extrema: direction never determined")
    start = int(nz[0])
    # runs of constant state; each completed run emits one extremum
    changes = np.flatnonzero(state[start + 1:] != state[start:-1]) + start + 1
    bounds = np.concatenate(([start], changes, [n]))

    highs, lows, times = series.highs, series.lows, series.times
    extrema: List[Extremum] = []
    for r in range(len(bounds) - 2):  # last run has no reversal -> unconfirmed
        a, b = int(bounds[r]), int(bounds[r + 1])
        if state[a] == 1:
            j = a + int(np.argmax(highs[a:b]))  # ties: earliest attainment
            kind, price = ExtremumKind.MAX, float(highs[j])
        else:
            j = a + int(np.argmin(lows[a:b]))
            kind, price = ExtremumKind.MIN, float(lows[j])
        extrema.append(Extremum(kind, int(times[j]), price, int(times[b]), j))

    if len(extrema) < 2:
        raise ExtremaError(f"fewer than 2 extrema confirmed "
                           f"(got {len(extrema)}) at timescale {timescale:g}")
    return ExtremumSeries(tuple(extrema), timescale, series.symbol)


def mean_wavelength(extrema: ExtremumSeries, series: CandleSeries,
                    mode: TimeMode) -> float:
    """Mean wavelength 2*(t_N - t_1)/(N - 1) under the chosen clock.

    CANDLES mode measures t in candle counts times the bar duration and
    is blind to exchange closures; SECONDS mode uses the wall clock.
    """
    n = len(extrema)
    if n < 2:
        raise ExtremaError(f"mean wavelength needs >= 2 extrema, got {n}")
    span = elapsed(series, int(extrema.candle_indices[0]),
                   int(extrema.candle_indices[-1]), mode)
    return 2 * span / (n - 1)


def rolling_wavelength(extrema: ExtremumSeries, window: int) -> List[Tuple[int, float]]:
    """Trailing moving average of per-gap wavelengths (wall clock).

    At each extremum from index ``window`` on, the mean of
    2*(t_{i+1} - t_i) over the ``window`` most recent gaps, reported as
    (extremum time, wavelength seconds) pairs.
    """
    n = len(extrema)
    if window < 1:
        raise ValueError("window must be >= 1")
    if n < window + 1:
        raise ExtremaError(f"rolling wavelength needs >= {window + 1} extrema, got {n}")
    t = extrema.times
    gaps = np.diff(t)
    csum = np.concatenate(([0], np.cumsum(gaps)))
    out = []
    for s in range(window, n):
        mean_gap = (csum[s] - csum[s - window]) / window
        out.append((int(t[s]), 2.0 * mean_gap))
    return out


def dump_extrema(extrema: ExtremumSeries) -> bytes:
    """Diagnostic CSV of the detected extrema."""
    out = io.StringIO()
    out.write("kind,time,price,confirm_time,candle_index\n")
    for e in extrema:
        kind = "max" if e.kind is ExtremumKind.MAX else "min"
        out.write(f"{kind},{e.time},{repr(e.price)},{e.confirm_time},{e.candle_index}\n")
    return out.getvalue().encode("utf-8")
