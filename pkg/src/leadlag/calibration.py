"""Timescale calibration: hit a target mean wavelength for one market.

The wavelength-versus-timescale map of a market is noisy and piecewise
constant (extrema sets change at discrete timescales), but broadly
increasing.  The search therefore evaluates a coarse geometric grid over
timescale in [0.1, 100] to bracket the target, bisects the bracketing
interval, and falls back to dense grid refinement when the map refuses
to behave.  Every evaluated point is kept; an exact hit on the target
wins outright (the fixed point when recalibrating at an achieved
wavelength), otherwise the smallest timescale within tolerance does.
Either way the search is a deterministic function of its inputs.

Pair synchronization follows the two-clock scheme: the primary market is
calibrated in candle counts (closure-blind), its achieved extrema are
re-measured on the wall clock to produce the target handed to the
secondary market.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import (CalibrationError, DataError, ExtremaError,
                     TargetUnattainable)
from .indicators import DEFAULT_DELTA_COEFF
from .market_data import CandleSeries, TimeMode
from .minmax import ExtremumSeries, detect_extrema, mean_wavelength

TIMESCALE_MIN = 0.1
TIMESCALE_MAX = 100.0
COARSE_GRID_POINTS = 41
BISECTION_STEPS = 30
DENSE_REFINE_POINTS = 96
DEFAULT_TOLERANCE = 0.02


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of a successful timescale search."""

    timescale: float
    achieved_wavelength: float
    target_wavelength: float
    relative_error: float
    extrema_count: int


class WavelengthCurve:
    """Memoized timescale -> mean-wavelength map for one series and clock.

    Evaluations are pure functions of (series, mode, delta_coeff), so the
    cache may be shared by concurrent calibrations; a racing duplicate
    recomputation yields the identical value.
    """

    def __init__(self, series: CandleSeries, mode: TimeMode,
                 delta_coeff: float = DEFAULT_DELTA_COEFF):
        self.series = series
        self.mode = mode
        self.delta_coeff = delta_coeff
        self._cache: Dict[float, Optional[Tuple[float, ExtremumSeries]]] = {}
        self._grid: Optional[List[float]] = None

    def evaluate(self, timescale: float) -> Optional[Tuple[float, ExtremumSeries]]:
        """(wavelength, extrema) at this timescale, or None if undefined."""
        timescale = float(timescale)
        hit = self._cache.get(timescale, _MISS)
        if hit is not _MISS:
            return hit
        try:
            ext = detect_extrema(self.series, timescale, self.delta_coeff)
            value = (mean_wavelength(ext, self.series, self.mode), ext)
        except ExtremaError:
            value = None
        self._cache[timescale] = value
        return value

    def coarse_grid(self) -> List[float]:
        """Standard geometric probe grid over the timescale range."""
        if self._grid is None:
            ratio = (TIMESCALE_MAX / TIMESCALE_MIN) ** (1.0 / (COARSE_GRID_POINTS - 1))
            self._grid = [TIMESCALE_MIN * ratio ** k for k in range(COARSE_GRID_POINTS)]
        return self._grid


_MISS = object()


def _pick_candidate(evaluated: Dict[float, float], target: float,
                    tolerance: float):
    """Select the winning probe, or None if nothing is within tolerance.

    An exact hit on the target takes precedence (it is the natural fixed
    point when recalibrating at an achieved wavelength); otherwise the
    smallest feasible timescale wins, which keeps the resolution as fine
    as the tolerance allows.
    """
    exact = None
    feasible = None
    for ts in sorted(evaluated):
        err = abs(evaluated[ts] - target) / target
        if err < 1e-15 and exact is None:
            exact = (ts, err)
        if err <= tolerance and feasible is None:
            feasible = (ts, err)
    return exact or feasible


def _closest_error(evaluated: Dict[float, float], target: float) -> float:
    return min(abs(lam - target) / target for lam in evaluated.values())


def calibrate_timescale(series: CandleSeries, target: float, mode: TimeMode,
                        tolerance: float = DEFAULT_TOLERANCE, *,
                        delta_coeff: float = DEFAULT_DELTA_COEFF,
                        hint: Optional[float] = None,
                        curve: Optional[WavelengthCurve] = None,
                        cache: Optional["CalibrationCache"] = None) -> CalibrationResult:
    """Find a timescale whose mean wavelength matches ``target``.

    Parameters
    ----------
    series : CandleSeries
    target : float
        Desired mean wavelength in seconds (for CANDLES mode this is
        candle count times bar duration).
    mode : TimeMode
        Clock used to measure the achieved wavelength.
    tolerance : float
        Maximal acceptable relative error.
    hint : float, optional
        Extra timescale probe, e.g. the value found for a companion
        market; evaluated alongside the grid.
    curve : WavelengthCurve, optional
        Shared memoized map; must belong to the same series and mode.
    cache : CalibrationCache, optional
        Cross-run store; hits are re-validated against the current
        tolerance before being trusted.

    Raises
    ------
    CalibrationError
        If the target is below resolution, the series never yields two
        extrema, or no probed timescale lands within tolerance.
    """
    if target <= 2 * series.bar_duration:
        raise TargetUnattainable(f"target unreachable: {target:.0f}s is not above "
                                 f"two bar durations ({2 * series.bar_duration}s)")
    span = (series.times[-1] - series.times[0] if mode is TimeMode.SECONDS
            else (len(series) - 1) * series.bar_duration)
    if span < 4.5 * target:
        raise TargetUnattainable(f"target unreachable: series span {span:.0f}s "
                                 f"cannot host 10 extrema of wavelength {target:.0f}s")
    if curve is None:
        curve = WavelengthCurve(series, mode, delta_coeff)

    if cache is not None:
        cached_ts = cache.lookup(series, mode, target)
        if cached_ts is not None:
            res = curve.evaluate(cached_ts)
            if res is not None:
                err = abs(res[0] - target) / target
                if err <= tolerance:
                    return CalibrationResult(cached_ts, res[0], float(target),
                                             err, len(res[1]))

    evaluated: Dict[float, float] = {}

    def probe(ts: float) -> Optional[float]:
        res = curve.evaluate(ts)
        if res is None:
            return None
        evaluated[float(ts)] = res[0]
        return res[0]

    if hint is not None and TIMESCALE_MIN <= hint <= TIMESCALE_MAX:
        probe(hint)
    grid = curve.coarse_grid()
    for ts in grid:
        probe(ts)

    defined = [(ts, evaluated[ts]) for ts in grid if ts in evaluated]
    if not defined:
        raise CalibrationError("series yields < 2 extrema everywhere in the "
                               "timescale range")

    best = _pick_candidate(evaluated, target, tolerance)
    if best is None:
        # bracket the first upward crossing of the target on the grid
        bracket = None
        for (a, la), (b, lb) in zip(defined, defined[1:]):
            if la < target <= lb:
                bracket = (a, b)
                break
        if bracket is not None:
            lo, hi = bracket
            for _ in range(BISECTION_STEPS):
                mid = math.sqrt(lo * hi)
                lam = probe(mid)
                if lam is None or lam >= target:
                    hi = mid
                else:
                    lo = mid
                if hi / lo < 1.0 + 1e-6:
                    break
            best = _pick_candidate(evaluated, target, tolerance)
            if best is None:
                # map jumped over the target; sweep the bracket densely
                lo, hi = bracket
                for ts in np.geomspace(lo, hi, DENSE_REFINE_POINTS):
                    probe(float(ts))
                best = _pick_candidate(evaluated, target, tolerance)

    if best is None:
        lams = [lam for _, lam in defined]
        if target < min(lams) * (1 - tolerance) or target > max(lams) * (1 + tolerance):
            raise TargetUnattainable(
                f"target unreachable: wavelength {target:.0f}s outside the "
                f"attainable range [{min(lams):.0f}, {max(lams):.0f}]s")
        raise TargetUnattainable(
            f"non-bracketable target: wavelength map never comes within "
            f"{tolerance:.1%} of {target:.0f}s (closest miss "
            f"{_closest_error(evaluated, target):.1%})")

    ts = best[0]
    lam, ext = curve.evaluate(ts)
    if cache is not None:
        cache.store(series, mode, target, ts)
    return CalibrationResult(ts, lam, float(target), best[1], len(ext))


def common_span(primary: CandleSeries, secondary: CandleSeries) -> Tuple[int, int]:
    """Overlapping [start, end] of the two series' bar open times."""
    lo = max(primary.start_time, secondary.start_time)
    hi = min(primary.end_time, secondary.end_time)
    if hi < lo:
        raise DataError(f"no overlapping span between '{primary.symbol}' "
                        f"and '{secondary.symbol}'")
    return lo, hi


def truncate_to_common_span(primary: CandleSeries,
                            secondary: CandleSeries) -> Tuple[CandleSeries, CandleSeries]:
    """Both series restricted to their shared period of time."""
    lo, hi = common_span(primary, secondary)
    if primary.start_time == secondary.start_time and primary.end_time == secondary.end_time:
        return primary, secondary
    return primary.slice_span(lo, hi), secondary.slice_span(lo, hi)


def synchronize_pair(primary: CandleSeries, secondary: CandleSeries,
                     target_candles: int,
                     tolerance: float = DEFAULT_TOLERANCE, *,
                     delta_coeff: float = DEFAULT_DELTA_COEFF,
                     curves: Optional[Tuple[WavelengthCurve, WavelengthCurve]] = None,
                     cache: Optional["CalibrationCache"] = None,
                     ) -> Tuple[CalibrationResult, CalibrationResult, float]:
    """Calibrate a market pair to one wavelength; returns the seconds target.

    The primary is calibrated so its wavelength in candle counts matches
    ``target_candles``; the achieved extrema are then measured on the
    wall clock, and the secondary is calibrated in seconds against that
    value.  Both series are first truncated to their common span.

    Raises
    ------
    CalibrationError
        Propagated from either side, labeled by market.
    """
    if curves is None:
        primary, secondary = truncate_to_common_span(primary, secondary)
        curve_p = WavelengthCurve(primary, TimeMode.CANDLES, delta_coeff)
        curve_s = WavelengthCurve(secondary, TimeMode.SECONDS, delta_coeff)
    else:
        curve_p, curve_s = curves
        primary, secondary = curve_p.series, curve_s.series

    try:
        res_p = calibrate_timescale(primary, target_candles * primary.bar_duration,
                                    TimeMode.CANDLES, tolerance,
                                    delta_coeff=delta_coeff, curve=curve_p,
                                    cache=cache)
    except CalibrationError as exc:
        raise type(exc)(f"primary '{primary.symbol}': {exc}") from exc

    _, extrema_p = curve_p.evaluate(res_p.timescale)
    lambda_star = mean_wavelength(extrema_p, primary, TimeMode.SECONDS)

    try:
        res_s = calibrate_timescale(secondary, lambda_star, TimeMode.SECONDS,
                                    tolerance, delta_coeff=delta_coeff,
                                    hint=res_p.timescale, curve=curve_s,
                                    cache=cache)
    except CalibrationError as exc:
        raise type(exc)(f"secondary '{secondary.symbol}': {exc}") from exc

    return res_p, res_s, lambda_star


class CalibrationCache:
    """Optional plain-text store of finished calibrations.

    One line per entry: ``symbol <TAB> data-hash <TAB> mode <TAB> target-repr
    = timescale-repr``.  Keyed by the series content hash, so a stale file
    never poisons a run on changed data.
    """

    def __init__(self, path: Optional[Path] = None):
        self.path = Path(path) if path else None
        self._entries: Dict[Tuple[str, str, str, str], float] = {}
        if self.path and self.path.exists():
            self._load()

    def _load(self) -> None:
        for line in self.path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            parts = key.strip().split("\t")
            if len(parts) != 4:
                continue
            try:
                self._entries[tuple(parts)] = float(value.strip())
            except ValueError:
                continue

    @staticmethod
    def _key(series: CandleSeries, mode: TimeMode, target: float):
        return (series.symbol, series.data_hash(), mode.value, repr(float(target)))

    def lookup(self, series: CandleSeries, mode: TimeMode,
               target: float) -> Optional[float]:
        return self._entries.get(self._key(series, mode, target))

    def store(self, series: CandleSeries, mode: TimeMode, target: float,
              timescale: float) -> None:
        self._entries[self._key(series, mode, target)] = timescale

    def save(self) -> None:
        if self.path is None:
            return
        lines = [f"{k[0]}\t{k[1]}\t{k[2]}\t{k[3]} = {repr(v)}"
                 for k, v in sorted(self._entries.items())]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("\n".join(lines) + "\n", encoding="utf-8")
