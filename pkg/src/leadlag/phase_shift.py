"""Local phase shifts between the extrema of two calibrated markets.

Every secondary extremum falling inside the primary's time span is
located within its bracketing pair of primary extrema and mapped to an
angle: the signed linear distance from the same-kind primary extremum,
scaled so one bracketing interval spans pi.  Because the primary
alternates, exactly one end of the bracket matches the secondary's kind.
Negative angles mean the secondary market ran ahead (lead), positive
ones that it lagged.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np

from .errors import PhaseShiftError
from .minmax import ExtremumSeries


class TimeSelector(enum.Enum):
    """Which timestamp of an extremum enters the phase computation."""

    EXTREMUM_TIME = "extremum"
    CONFIRM_TIME = "confirm"


@dataclass(frozen=True)
class PhaseSample:
    """One secondary extremum placed inside a primary bracket."""

    alpha: float
    secondary_index: int
    primary_interval: Tuple[int, int]
    time_mode_used: TimeSelector


@dataclass(frozen=True)
class AngularDistribution:
    """All phase-shift angles of one market pair at one wavelength."""

    samples: Tuple[PhaseSample, ...]
    wavelength_candles: int
    lambda_star_seconds: float
    pair: Tuple[str, str]

    def __len__(self) -> int:
        return len(self.samples)

    @cached_property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.samples], dtype=np.float64)


def _selected_times(extrema: ExtremumSeries, selector: TimeSelector) -> np.ndarray:
    if selector is TimeSelector.CONFIRM_TIME:
        return extrema.confirm_times
    return extrema.times


def compute_phase_shifts(primary: ExtremumSeries, secondary: ExtremumSeries,
                         selector: TimeSelector = TimeSelector.EXTREMUM_TIME,
                         *, wavelength_candles: int = 0,
                         lambda_star_seconds: float = 0.0) -> AngularDistribution:
    """Circular phase-shift distribution of secondary vs primary extrema.

    The selector picks either the extremum times or the confirmation
    times, applied to both markets alike.  Secondary extrema are used
    from the first at or after the primary's first time up to the last
    strictly before the primary's last time.  Each angle is

        alpha = (t_sec - t_same_kind) / (t_next - t_prev) * pi

    wrapped into [-pi, pi); the same-kind anchor is the bracket end whose
    extremum kind equals the secondary's kind.

    Raises
    ------
    PhaseShiftError
        If no secondary extremum lies inside the primary's span.
    """
    t_prim = _selected_times(primary, selector)
    t_sec = _selected_times(secondary, selector)
    if len(t_prim) < 2 or len(t_sec) < 2:
        raise PhaseShiftError("both markets need at least 2 extrema")

    j1 = int(np.searchsorted(t_sec, t_prim[0], side="left"))
    j2 = int(np.searchsorted(t_sec, t_prim[-1], side="left")) - 1
    if j1 >= len(t_sec) or j2 < j1:
        raise PhaseShiftError(
            f"empty overlap: no extrema of '{secondary.source_symbol}' inside "
            f"the span of '{primary.source_symbol}'")

    js = np.arange(j1, j2 + 1)
    tj = t_sec[js]
    # bracketing interval i with t_i <= tj < t_{i+1}
    i = np.searchsorted(t_prim, tj, side="right") - 1
    i = np.minimum(i, len(t_prim) - 2)
    t_lo = t_prim[i]
    t_hi = t_prim[i + 1]
    width = t_hi - t_lo
    assert np.all(width > 0), "degenerate primary interval"

    same_kind_low = primary.kinds[i] == secondary.kinds[js]
    s = np.where(same_kind_low, t_lo, t_hi)
    alpha = (tj - s).astype(np.float64) / width.astype(np.float64) * math.pi
    alpha[alpha == math.pi] = -math.pi  # half-open domain [-pi, pi)

    samples = tuple(
        PhaseSample(float(alpha[k]), int(js[k]), (int(i[k]), int(i[k] + 1)), selector)
        for k in range(len(js)))
    return AngularDistribution(samples, wavelength_candles, lambda_star_seconds,
                               (primary.source_symbol, secondary.source_symbol))


def dump_phase_samples(dist: AngularDistribution,
                       secondary: ExtremumSeries) -> bytes:
    """Raw-sample CSV: wavelength, angle, secondary time, selector mode."""
    out = io.StringIO()
    out.write("wavelength,alpha,secondary_time,mode\n")
    t_by_mode = {sel: _selected_times(secondary, sel) for sel in TimeSelector}
    for s in dist.samples:
        t = int(t_by_mode[s.time_mode_used][s.secondary_index])
        out.write(f"{dist.wavelength_candles},{repr(s.alpha)},{t},"
                  f"{s.time_mode_used.value}\n")
    return out.getvalue().encode("utf-8")
