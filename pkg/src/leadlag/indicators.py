"""EMA, MACD, ATR and the thresholded stop-and-reverse direction series.

The direction series drives extrema detection: it flips to up when the
MACD line exceeds its signal line by more than ``delta = delta_coeff *
ATR(100)``, to down when the signal line exceeds the MACD line by the
same margin, and otherwise keeps its previous state.  The threshold
suppresses the insignificant oscillations a raw MACD/signal crossing
rule would produce.

EMA periods are real-valued on purpose: the three MACD periods are
scaled by one continuous ``timescale`` factor, and rounding them would
put plateaus into the calibration search.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter

from .market_data import CandleSeries

DEFAULT_FAST = 12.0
DEFAULT_SLOW = 26.0
DEFAULT_SIGNAL = 9.0
DEFAULT_DELTA_COEFF = 0.3
DEFAULT_ATR_PERIOD = 100


@dataclass(frozen=True)
class IndicatorSeries:
    """Indicator values aligned 1:1 with a candle series.

    Entries before ``valid_from`` are warm-up output and should not be
    trusted by consumers that care about transients.
    """

    values: np.ndarray
    valid_from: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class MacdParams:
    """Fast/slow/signal EMA periods plus the common scale factor."""

    fast_period: float
    slow_period: float
    signal_period: float
    timescale: float = 1.0

    def __post_init__(self):
        if min(self.fast_period, self.slow_period, self.signal_period) <= 0:
            raise ValueError("MACD periods must be positive")
        if not self.fast_period < self.slow_period:
            raise ValueError("fast_period must be smaller than slow_period")
        if self.timescale <= 0:
            raise ValueError("timescale must be positive")

    @classmethod
    def from_timescale(cls, timescale: float) -> "MacdParams":
        """Scale the (12, 26, 9) defaults by a single factor."""
        return cls(DEFAULT_FAST * timescale, DEFAULT_SLOW * timescale,
                   DEFAULT_SIGNAL * timescale, timescale)


class SarState(enum.Enum):
    UP = 1
    DOWN = -1
    UNDETERMINED = 0


ArrayLike = Union[np.ndarray, Sequence[float], IndicatorSeries]


def _values(x: ArrayLike) -> np.ndarray:
    if isinstance(x, IndicatorSeries):
        return x.values
    return np.asarray(x, dtype=np.float64)


def _ema_array(prices: np.ndarray, period: float) -> np.ndarray:
    # y[i] = k*x[i] + (1-k)*y[i-1], seeded with y[0] = x[0]
    k = 2.0 / (period + 1.0)
    zi = np.array([(1.0 - k) * prices[0]])
    y, _ = lfilter([k], [1.0, -(1.0 - k)], prices, zi=zi)
    return y


def ema(prices: ArrayLike, period: float) -> IndicatorSeries:
    """Exponential moving average with smoothing factor k = 2/(period+1).

    Seeded with the first price, so it is defined from bar 0.  Real-valued
    periods are accepted.

    Raises
    ------
    ValueError
        If ``period < 1`` or the input is empty.
    """
    x = _values(prices)
    if x.size == 0:
        raise ValueError("ema: empty input")
    if period < 1:
        raise ValueError(f"ema: period must be >= 1, got {period}")
    return IndicatorSeries(_ema_array(x, float(period)))


def macd(prices: ArrayLike, params: MacdParams) -> Tuple[IndicatorSeries, IndicatorSeries]:
    """MACD line (fast EMA - slow EMA) and its signal line (EMA of the MACD).

    Raises
    ------
    ValueError
        If the series is not longer than the slow period.
    """
    x = _values(prices)
    if x.size <= params.slow_period:
        raise ValueError(f"macd: series of length {x.size} too short for "
                         f"slow period {params.slow_period}")
    line = _ema_array(x, params.fast_period) - _ema_array(x, params.slow_period)
    signal = _ema_array(line, params.signal_period)
    return IndicatorSeries(line), IndicatorSeries(signal)


def atr(series: CandleSeries, period: int = DEFAULT_ATR_PERIOD) -> IndicatorSeries:
    """Average true range: simple moving average of the true range.

    TR[0] is the first bar's high-low range; afterwards the true range
    also covers gaps against the previous close.  Before ``period`` bars
    exist the average runs over the available prefix.
    """
    n = len(series)
    if n == 0:
        raise ValueError("atr: empty series")
    if period < 1:
        raise ValueError("atr: period must be >= 1")
    tr = np.empty(n)
    tr[0] = series.highs[0] - series.lows[0]
    if n > 1:
        prev_close = series.closes[:-1]
        tr[1:] = np.maximum(series.highs[1:] - series.lows[1:],
                            np.maximum(np.abs(series.highs[1:] - prev_close),
                                       np.abs(series.lows[1:] - prev_close)))
    csum = np.cumsum(tr)
    out = np.empty(n)
    head = min(period, n)
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if n > period:
        out[period:] = (csum[period:] - csum[:-period]) / period
    return IndicatorSeries(out)


def _sar_codes(diff: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Hysteresis state codes (+1 up, -1 down, 0 undetermined) per bar.

    A bar emits +1 when diff > delta, -1 when -diff > delta; every other
    bar inherits the last emitted state (0 before the first emission).
    Strict inequalities, so delta == 0 still suppresses exact ties.
    """
    n = len(diff)
    raw = np.zeros(n, dtype=np.int8)
    raw[diff > delta] = 1
    raw[-diff > delta] = -1
    last = np.where(raw != 0, np.arange(n), -1)
    np.maximum.accumulate(last, out=last)
    state = np.where(last >= 0, raw[np.maximum(last, 0)], 0).astype(np.int8)
    return state


def sar_direction(macd_line: ArrayLike, signal_line: ArrayLike,
                  atr_series: ArrayLike,
                  delta_coeff: float = DEFAULT_DELTA_COEFF) -> List[SarState]:
    """Stop-and-reverse direction per bar, gated by delta_coeff * ATR.

    Raises
    ------
    ValueError
        On misaligned input lengths or negative ``delta_coeff``.
    """
    m = _values(macd_line)
    s = _values(signal_line)
    a = _values(atr_series)
    if not (len(m) == len(s) == len(a)):
        raise ValueError(f"sar_direction: misaligned lengths "
                         f"({len(m)}, {len(s)}, {len(a)})")
    if delta_coeff < 0:
        raise ValueError("sar_direction: delta_coeff must be >= 0")
    codes = _sar_codes(m - s, delta_coeff * a)
    return [SarState(int(c)) for c in codes]
