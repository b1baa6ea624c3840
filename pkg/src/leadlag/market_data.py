"""OHLC candle series: CSV loading, validation and elapsed-time views.

Timestamps are bar *open* times in integer epoch seconds (UTC).  A series
may contain gaps (exchange closures) but candles never overlap and
duplicate timestamps are rejected outright: silently merging them would
corrupt every wavelength estimate downstream.

Two clocks are exposed for the distance between two candles:

* ``TimeMode.CANDLES`` counts bars and is blind to closures,
* ``TimeMode.SECONDS`` is the wall clock and includes closures.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DataError


class TimeMode(enum.Enum):
    """Clock used when measuring the distance between two candles."""

    CANDLES = "candles"
    SECONDS = "seconds"


@dataclass(frozen=True)
class Candle:
    """One OHLC bar; ``time`` is the bar open in epoch seconds (UTC)."""

    time: int
    open: float
    high: float
    low: float
    close: float
    volume: Optional[float] = None


@dataclass(frozen=True)
class ColumnSchema:
    """Maps candle fields to CSV columns.

    Each field is either a header name (``str``, requires ``has_header``)
    or a zero-based column position (``int``).  ``volume`` may be ``None``
    when the file carries no volume column.
    """

    time: Union[str, int] = "time"
    open: Union[str, int] = "open"
    high: Union[str, int] = "high"
    low: Union[str, int] = "low"
    close: Union[str, int] = "close"
    volume: Union[str, int, None] = "volume"
    has_header: bool = True

    @classmethod
    def positional(cls, with_volume: bool = False) -> "ColumnSchema":
        """Schema for header-less files laid out time,open,high,low,close[,volume]."""
        return cls(time=0, open=1, high=2, low=3, close=4,
                   volume=5 if with_volume else None, has_header=False)


class CandleSeries:
    """Validated, immutable series of OHLC candles for one symbol.

    Internally column-oriented (numpy arrays) so indicator code can work
    on whole columns; safe for concurrent read access once constructed.
    """

    __slots__ = ("symbol", "bar_duration", "times", "opens", "highs",
                 "lows", "closes", "volumes")

    def __init__(self, symbol: str, bar_duration: int, times, opens, highs,
                 lows, closes, volumes=None):
        times = np.asarray(times, dtype=np.int64)
        opens = np.asarray(opens, dtype=np.float64)
        highs = np.asarray(highs, dtype=np.float64)
        lows = np.asarray(lows, dtype=np.float64)
        closes = np.asarray(closes, dtype=np.float64)
        if volumes is not None:
            volumes = np.asarray(volumes, dtype=np.float64)

        n = len(times)
        if n == 0:
            raise DataError("empty input: no candles")
        if bar_duration <= 0:
            raise ValueError("bar_duration must be positive")
        for name, arr in (("open", opens), ("high", highs), ("low", lows),
                          ("close", closes)):
            if len(arr) != n:
                raise DataError(f"column '{name}' has {len(arr)} rows, expected {n}")
        if volumes is not None and len(volumes) != n:
            raise DataError(f"column 'volume' has {len(volumes)} rows, expected {n}")

        _validate_times(times, bar_duration)
        _validate_ohlc(opens, highs, lows, closes, volumes)

        for arr in (times, opens, highs, lows, closes, volumes):
            if arr is not None:
                arr.setflags(write=False)

        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "bar_duration", int(bar_duration))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "opens", opens)
        object.__setattr__(self, "highs", highs)
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "volumes", volumes)

    def __setattr__(self, name, value):
        raise AttributeError("CandleSeries is immutable")

    def __len__(self) -> int:
        return len(self.times)

    def candle(self, i: int) -> Candle:
        vol = None if self.volumes is None else float(self.volumes[i])
        return Candle(int(self.times[i]), float(self.opens[i]),
                      float(self.highs[i]), float(self.lows[i]),
                      float(self.closes[i]), vol)

    @property
    def candles(self) -> tuple:
        return tuple(self.candle(i) for i in range(len(self)))

    @property
    def start_time(self) -> int:
        return int(self.times[0])

    @property
    def end_time(self) -> int:
        return int(self.times[-1])

    def slice_span(self, t_lo: int, t_hi: int, symbol: Optional[str] = None) -> "CandleSeries":
        """Sub-series of candles whose open time lies in [t_lo, t_hi]."""
        i = int(np.searchsorted(self.times, t_lo, side="left"))
        j = int(np.searchsorted(self.times, t_hi, side="right"))
        if j <= i:
            raise DataError(f"no candles of '{self.symbol}' in [{t_lo}, {t_hi}]")
        vols = None if self.volumes is None else self.volumes[i:j]
        return CandleSeries(symbol or self.symbol, self.bar_duration,
                            self.times[i:j], self.opens[i:j], self.highs[i:j],
                            self.lows[i:j], self.closes[i:j], vols)

    def data_hash(self) -> str:
        """Stable hex digest of the series content (used as cache key)."""
        h = hashlib.sha256()
        h.update(str(self.bar_duration).encode())
        for arr in (self.times, self.opens, self.highs, self.lows, self.closes):
            h.update(arr.tobytes())
        if self.volumes is not None:
            h.update(self.volumes.tobytes())
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, CandleSeries):
            return NotImplemented
        if (self.symbol != other.symbol
                or self.bar_duration != other.bar_duration
                or len(self) != len(other)):
            return False
        same = (np.array_equal(self.times, other.times)
                and np.array_equal(self.opens, other.opens)
                and np.array_equal(self.highs, other.highs)
                and np.array_equal(self.lows, other.lows)
                and np.array_equal(self.closes, other.closes))
        if not same:
            return False
        if (self.volumes is None) != (other.volumes is None):
            return False
        return self.volumes is None or np.array_equal(self.volumes, other.volumes)

    def __repr__(self) -> str:
        return (f"CandleSeries({self.symbol!r}, bar={self.bar_duration}s, "
                f"n={len(self)}, span=[{self.start_time}, {self.end_time}])")


def _validate_times(times: np.ndarray, bar_duration: int) -> None:
    if len(times) < 2:
        return
    gaps = np.diff(times)
    bad = np.flatnonzero(gaps <= 0)
    if bad.size:
        i = int(bad[0])
        raise DataError(f"non-increasing timestamps at candle {i + 1} "
                        f"({times[i]} -> {times[i + 1]})")
    short = np.flatnonzero(gaps < bar_duration)
    if short.size:
        i = int(short[0])
        raise DataError(f"overlapping candles at index {i + 1}: gap {gaps[i]}s "
                        f"< bar duration {bar_duration}s")


def _validate_ohlc(opens, highs, lows, closes, volumes) -> None:
    body_lo = np.minimum(opens, closes)
    body_hi = np.maximum(opens, closes)
    bad = np.flatnonzero((lows > body_lo) | (highs < body_hi) | (lows > highs))
    if bad.size:
        i = int(bad[0])
        raise DataError(f"OHLC invariant violated at candle {i}: "
                        f"o={opens[i]} h={highs[i]} l={lows[i]} c={closes[i]}")
    if volumes is not None:
        neg = np.flatnonzero(volumes < 0)
        if neg.size:
            raise DataError(f"negative volume at candle {int(neg[0])}")


def _parse_time(text: str) -> int:
    """Epoch seconds from either an integer or ISO-8601 'YYYY-MM-DDTHH:MM:SSZ'."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    except ValueError as exc:
        raise ValueError(f"unrecognized time value {text!r}") from exc
    return int(dt.replace(tzinfo=timezone.utc).timestamp())


def _open_text(source) -> io.TextIOBase:
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    # binary file object
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def load_candles(source, schema: Optional[ColumnSchema] = None,
                 bar_duration: int = 3600, symbol: str = "series") -> CandleSeries:
    """Load and validate a candle series from CSV.

    Parameters
    ----------
    source : path, str, bytes or file object
        CSV content with columns time,open,high,low,close[,volume].  The
        time column holds integer epoch seconds or ISO-8601 Zulu stamps.
    schema : ColumnSchema, optional
        Column mapping; defaults to the named standard layout with header.
    bar_duration : int
        Bar length in seconds (3600 for the 60-minute chart).
    symbol : str
        Identifier attached to the resulting series.

    Raises
    ------
    DataError
        On malformed rows (with the offending row number), non-increasing
        timestamps, OHLC violations or empty input.
    """
    schema = schema or ColumnSchema()
    fh = _open_text(source)
    reader = csv.reader(fh)

    rows = [r for r in reader if r and any(cell.strip() for cell in r)]
    row_offset = 1  # 1-based row numbers in error messages
    if schema.has_header:
        if not rows:
            raise DataError("empty input: no header row")
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        row_offset = 2

        def col(spec):
            if spec is None:
                return None
            if isinstance(spec, int):
                return spec
            try:
                return header.index(spec)
            except ValueError:
                return None
    else:
        def col(spec):
            return spec if isinstance(spec, int) or spec is None else None

    idx = {name: col(getattr(schema, name))
           for name in ("time", "open", "high", "low", "close", "volume")}
    for name in ("time", "open", "high", "low", "close"):
        if idx[name] is None:
            raise DataError(f"column '{getattr(schema, name)}' ({name}) not found")

    if not rows:
        raise DataError("empty input: no data rows")

    n = len(rows)
    times = np.empty(n, dtype=np.int64)
    cols = {name: np.empty(n, dtype=np.float64)
            for name in ("open", "high", "low", "close")}
    has_vol = idx["volume"] is not None and all(idx["volume"] < len(r) for r in rows)
    vols = np.empty(n, dtype=np.float64) if has_vol else None

    for k, row in enumerate(rows):
        rownum = k + row_offset
        try:
            times[k] = _parse_time(row[idx["time"]])
            for name in ("open", "high", "low", "close"):
                cols[name][k] = float(row[idx[name]])
            if vols is not None:
                vols[k] = float(row[idx["volume"]])
        except (ValueError, IndexError) as exc:
            raise DataError(f"malformed row {rownum}: {exc}") from exc

    return CandleSeries(symbol, bar_duration, times, cols["open"], cols["high"],
                        cols["low"], cols["close"], vols)


def dump_candles(series: CandleSeries) -> bytes:
    """Serialize a series back to CSV (epoch-second times, full precision).

    ``load_candles(dump_candles(s))`` reproduces ``s`` field for field.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    has_vol = series.volumes is not None
    writer.writerow(["time", "open", "high", "low", "close"] + (["volume"] if has_vol else []))
    for i in range(len(series)):
        row = [int(series.times[i]), repr(float(series.opens[i])),
               repr(float(series.highs[i])), repr(float(series.lows[i])),
               repr(float(series.closes[i]))]
        if has_vol:
            row.append(repr(float(series.volumes[i])))
        writer.writerow(row)
    return out.getvalue().encode("utf-8")


def elapsed(series: CandleSeries, i: int, j: int, mode: TimeMode) -> int:
    """Elapsed time between candles i and j (i <= j), per the chosen clock.

    CANDLES mode returns (j - i) * bar_duration and ignores closures;
    SECONDS mode returns the wall-clock difference of the bar open times.
    """
    n = len(series)
    if not (0 <= i <= j < n):
        raise IndexError(f"candle indices ({i}, {j}) out of range for length {n}")
    if mode is TimeMode.CANDLES:
        return (j - i) * series.bar_duration
    return int(series.times[j] - series.times[i])
