"""Full pair analysis: wavelength sweep, pooled statistics, histograms.

For every wavelength in the configured range the pair is synchronized,
extrema are detected and phase shifts extracted for each requested time
selector; the per-wavelength distributions feed the Watson-Williams test
and the per-bin histogram aggregation, their union feeds the pooled
summary, hat-weighted statistics and the lead classification.  Both
market orderings are always analyzed.

Wavelength groups run as independent work items (optionally on a thread
pool); results are reduced in wavelength order, so the report does not
depend on scheduling.  Groups whose target wavelength the market simply
cannot express are skipped with a note; other per-group failures are
tolerated up to a configurable fraction.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .calibration import (CalibrationCache, CalibrationResult, WavelengthCurve,
                          synchronize_pair, truncate_to_common_span)
from .circular_stats import (CircularSummary, LeadClass, LeadLagEstimate,
                             TestResults, classify_lead, confidence_interval,
                             hat_weights, lead_lag, mean_direction,
                             mean_test_decision, summarize, watson_williams)
from .errors import (AnalysisError, DataError, IntervalUndefined,
                     LeadLagError, StatsError, TargetUnattainable)
from .indicators import DEFAULT_DELTA_COEFF
from .market_data import CandleSeries, TimeMode
from .phase_shift import AngularDistribution, TimeSelector, compute_phase_shifts

log = logging.getLogger(__name__)

HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class SweepConfig:
    """Knobs of one pair analysis run."""

    wavelengths: range = range(30, 181)
    bar_duration: int = 3600
    time_modes: Tuple[TimeSelector, ...] = (TimeSelector.EXTREMUM_TIME,
                                            TimeSelector.CONFIRM_TIME)
    histogram_bins: int = 24
    hat_center: float = 0.0
    tolerance: float = 0.02
    delta_coeff: float = DEFAULT_DELTA_COEFF
    max_failed_fraction: float = 0.2
    jobs: Optional[int] = None

    def __post_init__(self):
        if len(self.wavelengths) == 0:
            raise ValueError("wavelength range must not be empty")
        if self.histogram_bins < 4 or self.histogram_bins % 2:
            raise ValueError("histogram_bins must be even and >= 4")
        if not self.time_modes:
            raise ValueError("at least one time selector required")
        if self.bar_duration <= 0:
            raise ValueError("bar_duration must be positive")


@dataclass(frozen=True)
class AggregatedHistogram:
    """Per-bin statistics across the per-wavelength histograms.

    ``pooled_freq`` is the histogram of the union sample; the other
    arrays hold the mean/min/max/standard deviation of the relative
    frequencies of the individual wavelength groups per bin.
    """

    bin_edges: np.ndarray
    mean_freq: np.ndarray
    min_freq: np.ndarray
    max_freq: np.ndarray
    std_freq: np.ndarray
    pooled_freq: np.ndarray


@dataclass(frozen=True)
class GroupStats:
    """Weighted per-wavelength statistics feeding the lead aggregation."""

    wavelength: int
    n_samples: int
    alpha_w: Optional[float]
    d_w: Optional[float]
    lead_minutes: Optional[float]
    lead_ci_minutes: Optional[float]


@dataclass(frozen=True)
class GroupOutcome:
    """Result of one wavelength group for one market ordering."""

    wavelength: int
    status: str  # "ok" | "unattainable" | "error"
    message: str = ""
    primary: Optional[CalibrationResult] = None
    secondary: Optional[CalibrationResult] = None
    lambda_star_seconds: Optional[float] = None
    distributions: Dict[TimeSelector, AngularDistribution] = field(default_factory=dict)


@dataclass(frozen=True)
class DirectionModeResult:
    """Pooled analysis of one market ordering under one time selector."""

    direction: str  # "ab" or "ba"
    primary_symbol: str
    secondary_symbol: str
    selector: TimeSelector
    summary: CircularSummary
    tests: TestResults
    lead: LeadLagEstimate
    lead_pooled_minutes: Optional[float]
    lead_pooled_ci_minutes: Optional[float]
    histogram: AggregatedHistogram
    groups: Tuple[GroupStats, ...]
    n_groups: int


@dataclass(frozen=True)
class PairReport:
    """Everything one pair analysis produced, for report writers."""

    symbol_a: str
    symbol_b: str
    config: SweepConfig
    results: Tuple[DirectionModeResult, ...]
    outcomes: Dict[str, Tuple[GroupOutcome, ...]]  # per direction
    data_hashes: Dict[str, str]

    def result(self, direction: str, selector: TimeSelector) -> DirectionModeResult:
        for r in self.results:
            if r.direction == direction and r.selector is selector:
                return r
        raise KeyError((direction, selector))


def aggregate_histograms(distributions: Sequence[AngularDistribution],
                         bins: int) -> AggregatedHistogram:
    """Combine per-wavelength angle distributions on a common bin grid.

    Every distribution is turned into relative frequencies over
    equal-width bins on [-pi, pi); the aggregate keeps their per-bin
    mean, extremes and population standard deviation together with the
    histogram of the pooled sample.
    """
    if not distributions:
        raise ValueError("aggregate_histograms: no distributions")
    edges = np.linspace(-math.pi, math.pi, bins + 1)
    freqs = np.empty((len(distributions), bins))
    for i, dist in enumerate(distributions):
        counts, _ = np.histogram(dist.alphas, bins=edges)
        freqs[i] = counts / len(dist)
    pooled = np.concatenate([d.alphas for d in distributions])
    pooled_counts, _ = np.histogram(pooled, bins=edges)
    return AggregatedHistogram(
        bin_edges=edges,
        mean_freq=freqs.mean(axis=0),
        min_freq=freqs.min(axis=0),
        max_freq=freqs.max(axis=0),
        std_freq=freqs.std(axis=0),
        pooled_freq=pooled_counts / pooled.size,
    )


def _group_job(wavelength: int, primary: CandleSeries, secondary: CandleSeries,
               curves: Tuple[WavelengthCurve, WavelengthCurve],
               config: SweepConfig,
               cache: Optional[CalibrationCache]) -> GroupOutcome:
    try:
        res_p, res_s, lam_star = synchronize_pair(
            primary, secondary, wavelength, config.tolerance,
            delta_coeff=config.delta_coeff, curves=curves, cache=cache)
        extrema_p = curves[0].evaluate(res_p.timescale)[1]
        extrema_s = curves[1].evaluate(res_s.timescale)[1]
        dists = {}
        for selector in config.time_modes:
            dists[selector] = compute_phase_shifts(
                extrema_p, extrema_s, selector,
                wavelength_candles=wavelength, lambda_star_seconds=lam_star)
        return GroupOutcome(wavelength, "ok", "", res_p, res_s, lam_star, dists)
    except TargetUnattainable as exc:
        return GroupOutcome(wavelength, "unattainable", str(exc))
    except LeadLagError as exc:
        return GroupOutcome(wavelength, "error", str(exc))


def _group_lead_stats(dist: AngularDistribution, config: SweepConfig) -> GroupStats:
    bar_minutes = config.bar_duration / 60.0
    alphas = dist.alphas
    weights = hat_weights(alphas, config.hat_center)
    alpha_w = d_w = lead_min = lead_ci = None
    if float(np.sum(weights)) > 0.0:
        try:
            alpha_w = mean_direction(alphas, weights)
        except StatsError:
            alpha_w = None
        if alpha_w is not None:
            try:
                d_w = confidence_interval(alphas, weights)
            except (IntervalUndefined, StatsError):
                d_w = None
            lam_minutes = dist.wavelength_candles * bar_minutes
            lead_min, _ = lead_lag(alpha_w, 0.0, lam_minutes)
            if d_w is not None:
                _, lead_ci = lead_lag(alpha_w, d_w, lam_minutes)
    return GroupStats(dist.wavelength_candles, len(dist), alpha_w, d_w,
                      lead_min, lead_ci)


def _weighted_mean(pairs: List[Tuple[float, int]]) -> Optional[float]:
    total = sum(n for _, n in pairs)
    if total == 0:
        return None
    return sum(v * n for v, n in pairs) / total


def _classify(summary: CircularSummary) -> LeadClass:
    # classification prefers the hat-weighted direction; when the whole
    # mass sits at the antipode the weights vanish and the unweighted
    # direction is the only signal left
    alpha = summary.weighted_mean
    d = summary.weighted_ci
    if alpha is None:
        alpha, d = summary.mean_direction, summary.ci_halfwidth
    if alpha is None:
        return LeadClass.UNDECIDED
    if abs(alpha) > HALF_PI:
        return LeadClass.NOT_POSITIVELY_CORRELATED
    if d is None:
        return LeadClass.UNDECIDED
    return classify_lead(alpha, d)


def _direction_result(direction: str, primary_symbol: str, secondary_symbol: str,
                      selector: TimeSelector,
                      outcomes: Sequence[GroupOutcome],
                      config: SweepConfig) -> DirectionModeResult:
    dists = [o.distributions[selector] for o in outcomes if o.status == "ok"]
    pooled = np.concatenate([d.alphas for d in dists])
    summary = summarize(pooled, config.hat_center)

    h_m = None
    if summary.mean_direction is not None and summary.ci_halfwidth is not None:
        h_m = mean_test_decision(summary.mean_direction, summary.ci_halfwidth)
    ww_groups = [d.alphas for d in dists if len(d) >= 2]
    p_ww = watson_williams(ww_groups) if len(ww_groups) >= 2 else None

    group_stats = tuple(_group_lead_stats(d, config) for d in dists)
    lead_min = _weighted_mean([(g.lead_minutes, g.n_samples)
                               for g in group_stats if g.lead_minutes is not None])
    lead_ci = _weighted_mean([(g.lead_ci_minutes, g.n_samples)
                              for g in group_stats if g.lead_ci_minutes is not None])

    # pooled-direction variant: one angle, mean wavelength of the pool
    pooled_lead = pooled_lead_ci = None
    mean_lam_minutes = _weighted_mean(
        [(d.wavelength_candles * config.bar_duration / 60.0, len(d)) for d in dists])
    if summary.weighted_mean is not None and mean_lam_minutes:
        pooled_lead, _ = lead_lag(summary.weighted_mean, 0.0, mean_lam_minutes)
        if summary.weighted_ci is not None:
            _, pooled_lead_ci = lead_lag(summary.weighted_mean,
                                         summary.weighted_ci, mean_lam_minutes)

    estimate = LeadLagEstimate(lead_min, lead_ci, _classify(summary))
    hist = aggregate_histograms(dists, config.histogram_bins)
    return DirectionModeResult(direction, primary_symbol, secondary_symbol,
                               selector, summary, TestResults(h_m, p_ww),
                               estimate, pooled_lead, pooled_lead_ci, hist,
                               group_stats, len(dists))


def run_pair_analysis(primary: CandleSeries, secondary: CandleSeries,
                      config: SweepConfig,
                      cache: Optional[CalibrationCache] = None) -> PairReport:
    """Analyze a market pair over the configured wavelength sweep.

    Both orderings (each market once as primary) and every configured
    time selector are evaluated.  Identical inputs produce identical
    reports regardless of the parallelism degree.

    Raises
    ------
    DataError
        If the series do not overlap in time or disagree on bar duration.
    AnalysisError
        If no wavelength group calibrates at all, or more than the
        tolerated fraction of groups fails outright.
    """
    if primary.bar_duration != secondary.bar_duration:
        raise DataError(f"bar durations differ: {primary.bar_duration}s vs "
                        f"{secondary.bar_duration}s")
    series_a, series_b = truncate_to_common_span(primary, secondary)
    jobs = config.jobs or os.cpu_count() or 1

    outcomes: Dict[str, Tuple[GroupOutcome, ...]] = {}
    results: List[DirectionModeResult] = []
    for direction, prim, sec in (("ab", series_a, series_b),
                                 ("ba", series_b, series_a)):
        curves = (WavelengthCurve(prim, TimeMode.CANDLES, config.delta_coeff),
                  WavelengthCurve(sec, TimeMode.SECONDS, config.delta_coeff))

        def job(w: int) -> GroupOutcome:
            return _group_job(w, prim, sec, curves, config, cache)

        wavelengths = list(config.wavelengths)
        if jobs > 1 and len(wavelengths) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                direction_outcomes = tuple(pool.map(job, wavelengths))
        else:
            direction_outcomes = tuple(job(w) for w in wavelengths)

        n_error = sum(1 for o in direction_outcomes if o.status == "error")
        n_ok = sum(1 for o in direction_outcomes if o.status == "ok")
        for o in direction_outcomes:
            if o.status != "ok":
                log.warning("wavelength %d (%s as primary) skipped: %s",
                            o.wavelength, prim.symbol, o.message)
        if n_error > config.max_failed_fraction * len(wavelengths):
            raise AnalysisError(
                f"{n_error} of {len(wavelengths)} wavelength groups failed for "
                f"'{prim.symbol}' as primary; first failure: "
                f"{next(o.message for o in direction_outcomes if o.status == 'error')}")
        if n_ok == 0:
            raise AnalysisError(
                f"no wavelength group calibrated for '{prim.symbol}' as primary "
                f"(all targets unattainable on this data)")

        outcomes[direction] = direction_outcomes
        for selector in config.time_modes:
            results.append(_direction_result(direction, prim.symbol, sec.symbol,
                                             selector, direction_outcomes, config))

    return PairReport(series_a.symbol, series_b.symbol, config, tuple(results),
                      outcomes, {series_a.symbol: series_a.data_hash(),
                                 series_b.symbol: series_b.data_hash()})
