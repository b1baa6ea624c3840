"""Directional statistics for phase-shift distributions.

Angles live on the unit circle as (sin a, cos a); a = 0 points at the
top and positive angles run clockwise.  All estimators follow the
standard circular-statistics literature:

* mean resultant vector, mean angular direction, circular variance,
  skewness and kurtosis (Fisher, "Statistical Analysis of Circular
  Data"),
* confidence interval for the mean direction and the one-sample mean
  angle test (Zar, "Biostatistical Analysis", sections 26.7 and 27.1),
* Watson-Williams multi-sample test (Zar, section 27.4b) with the
  usual three-branch von Mises concentration approximation,
* a triangular "hat" weighting that damps outliers far from a chosen
  center, used for the weighted mean direction.

Every angle returned by this module is wrapped into [-pi, pi).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betainc
from scipy.stats import chi2 as _chi2

from .errors import IntervalUndefined, StatsError

# 95% quantile of chi-square with 1 degree of freedom
CHI2_95_1DF = 3.841459

# resultant lengths below this are rounding noise of an exact cancellation
ZERO_RESULTANT_EPS = 1e-12


def wrap_angle(a):
    """Map angles into the half-open interval [-pi, pi)."""
    return np.mod(np.asarray(a, dtype=np.float64) + math.pi, 2.0 * math.pi) - math.pi


def _angles(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("empty angle sample")
    return arr


def mean_resultant(angles: Sequence[float],
                   weights: Optional[Sequence[float]] = None
                   ) -> Tuple[Tuple[float, float], float]:
    """Mean resultant vector of a (possibly weighted) angle sample.

    Parameters
    ----------
    angles : array-like
        Sample in radians.
    weights : array-like, optional
        Nonnegative weights, same length; uniform when omitted.

    Returns
    -------
    ((x, y), length)
        The averaged unit vectors as (mean sin, mean cos) and their
        Euclidean norm, which is at most 1.
    """
    a = _angles(angles)
    if weights is None:
        x = float(np.mean(np.sin(a)))
        y = float(np.mean(np.cos(a)))
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != a.shape:
            raise ValueError("weights must match angles in length")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = float(np.sum(w))
        if total == 0.0:
            raise StatsError("all-zero weights: weighted resultant undefined")
        x = float(np.sum(w * np.sin(a)) / total)
        y = float(np.sum(w * np.cos(a)) / total)
    return (x, y), math.hypot(x, y)


def mean_direction(angles: Sequence[float],
                   weights: Optional[Sequence[float]] = None) -> float:
    """Angle of the normalized mean resultant vector, in [-pi, pi).

    Raises
    ------
    StatsError
        If the resultant vector vanishes (no unique direction exists,
        e.g. for angles spread uniformly around the circle).
    """
    (x, y), r = mean_resultant(angles, weights)
    if r < ZERO_RESULTANT_EPS:
        raise StatsError("zero resultant: no unique mean angular direction")
    a = math.atan2(x, y)
    return -math.pi if a == math.pi else a


def circular_variance(angles: Sequence[float]) -> float:
    """1 minus the resultant length: 0 = concentrated, 1 = dispersed."""
    _, r = mean_resultant(angles)
    return 1.0 - r


def circular_skewness(angles: Sequence[float], alpha_hat: float) -> float:
    """Mean of sin(2*(a - alpha_hat)) over the sample."""
    a = _angles(angles)
    return float(np.mean(np.sin(2.0 * (a - alpha_hat))))


def circular_kurtosis(angles: Sequence[float], alpha_hat: float) -> float:
    """Mean of cos(2*(a - alpha_hat)) over the sample."""
    a = _angles(angles)
    return float(np.mean(np.cos(2.0 * (a - alpha_hat))))


def hat_weights(angles: Sequence[float], center: float = 0.0) -> np.ndarray:
    """Triangular weights on the circle: 1 at ``center``, 0 at its antipode.

    w = 1 - |wrap(a - center)| / pi, linear in angular distance.
    """
    a = np.asarray(angles, dtype=np.float64)
    dist = np.abs(wrap_angle(a - center))
    return 1.0 - dist / math.pi


def _effective_n(weights: Optional[np.ndarray], n: int) -> float:
    if weights is None:
        return float(n)
    total = float(np.sum(weights))
    square = float(np.sum(weights * weights))
    return total * total / square


def confidence_interval(angles: Sequence[float],
                        weights: Optional[Sequence[float]] = None,
                        level: float = 0.95) -> float:
    """Halfwidth d of the confidence interval for the mean direction.

    Uses the two-branch chi-square construction of Zar section 26.7; for
    weighted samples the sample size is replaced by the design-effect
    size (sum w)^2 / sum w^2 and the resultant by the weighted resultant.

    Raises
    ------
    IntervalUndefined
        When the sample is too diffuse for the formula (2R^2 <= N*chi2)
        or the upper-branch root turns negative.
    StatsError
        On a vanishing resultant.
    """
    a = _angles(angles)
    w = None if weights is None else np.asarray(weights, dtype=np.float64).ravel()
    _, rbar = mean_resultant(a, w)
    if rbar < ZERO_RESULTANT_EPS:
        raise StatsError("zero resultant: confidence interval undefined")
    n = _effective_n(w, a.size)
    big_r = n * rbar
    c2 = CHI2_95_1DF if level == 0.95 else float(_chi2.isf(1.0 - level, 1))

    if rbar <= 0.9:
        inner = 2.0 * n * (2.0 * big_r ** 2 - n * c2) / (4.0 * n - c2)
        if inner <= 0.0:
            raise IntervalUndefined(
                f"CI undefined: sample too diffuse (R̄={rbar:.4f}, n={n:.1f})")
        arg = math.sqrt(inner) / big_r
    else:
        inner = n ** 2 - (n ** 2 - big_r ** 2) * math.exp(c2 / n)
        if inner <= 0.0:
            raise IntervalUndefined(
                f"CI undefined: upper-branch root negative (R̄={rbar:.4f}, n={n:.1f})")
        arg = math.sqrt(inner) / big_r
    arg = min(arg, 1.0)  # guard rounding at full concentration
    return math.acos(arg)


def interval_contains(alpha_hat: float, d: float, alpha0: float = 0.0) -> bool:
    """True when alpha0 lies within d of alpha_hat along the circle."""
    return abs(float(wrap_angle(alpha_hat - alpha0))) <= d


def mean_test_decision(alpha_hat: float, d: float, alpha0: float = 0.0) -> int:
    """h = 0 keeps the hypothesis mean==alpha0, h = 1 rejects it."""
    return 0 if interval_contains(alpha_hat, d, alpha0) else 1


def one_sample_mean_test(angles: Sequence[float], alpha0: float = 0.0,
                         weights: Optional[Sequence[float]] = None,
                         level: float = 0.95) -> int:
    """One-sample test for the mean angle via confidence-interval coverage.

    Returns 0 when ``alpha0`` falls inside the interval around the mean
    direction, 1 otherwise.

    Raises
    ------
    IntervalUndefined
        The test cannot be performed when the interval does not exist.
    """
    a_hat = mean_direction(angles, weights)
    d = confidence_interval(angles, weights, level)
    return mean_test_decision(a_hat, d, alpha0)


def von_mises_kappa(rbar: float) -> float:
    """Concentration parameter estimate from the mean resultant length.

    Standard three-branch approximation (Fisher):
    below 0.53, between 0.53 and 0.85, and above.
    """
    if rbar < 0.53:
        return 2.0 * rbar + rbar ** 3 + 5.0 * rbar ** 5 / 6.0
    if rbar < 0.85:
        return -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar)
    denom = rbar ** 3 - 4.0 * rbar ** 2 + 3.0 * rbar
    if denom <= 0.0:
        return math.inf
    return 1.0 / denom


def _f_sf(f_stat: float, d1: float, d2: float) -> float:
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if f_stat <= 0.0:
        return 1.0
    x = d2 / (d2 + d1 * f_stat)
    return float(betainc(d2 / 2.0, d1 / 2.0, x))


def watson_williams(groups: Sequence[Sequence[float]]) -> float:
    """p-value of the Watson-Williams common-mean-direction test.

    Parameters
    ----------
    groups : sequence of angle samples
        At least two groups with at least two angles each.

    Returns
    -------
    float
        Probability of a between-group dispersion at least this large
        under a shared mean direction.  Perfectly concentrated groups
        short-circuit to 1.0 when all group means coincide, 0.0
        otherwise.
    """
    if len(groups) < 2:
        raise ValueError(f"watson_williams needs >= 2 groups, got {len(groups)}")
    arrays = [_angles(g) for g in groups]
    for g in arrays:
        if g.size < 2:
            raise ValueError("every group needs >= 2 samples")

    k = len(arrays)
    sizes = np.array([g.size for g in arrays], dtype=np.float64)
    n_total = float(np.sum(sizes))
    r_groups = np.array([mean_resultant(g)[1] * g.size for g in arrays])
    sum_r = float(np.sum(r_groups))
    pooled = np.concatenate(arrays)
    r_total = mean_resultant(pooled)[1] * pooled.size

    if n_total - sum_r <= 1e-12 * n_total:
        # perfectly concentrated groups: decided by their means alone
        means = [mean_direction(g) for g in arrays]
        spread = max(abs(float(wrap_angle(m - means[0]))) for m in means)
        return 1.0 if spread <= 1e-12 else 0.0

    between = sum_r - r_total
    if between <= 1e-12 * n_total:
        return 1.0  # between-group dispersion is rounding noise
    rbar_w = sum_r / n_total
    kappa = von_mises_kappa(rbar_w)
    correction = 1.0 + 3.0 / (8.0 * kappa) if math.isfinite(kappa) else 1.0
    f_stat = correction * (n_total - k) * between / ((k - 1) * (n_total - sum_r))
    return _f_sf(f_stat, k - 1.0, n_total - k)


def lead_lag(alpha_hat: float, d: float,
             wavelength_minutes: float) -> Tuple[float, float]:
    """Convert a mean direction and CI halfwidth to minutes of lead or lag.

    One full wavelength equates 2*pi, so l = alpha/(2*pi) * wavelength.
    Positive values mean the primary market leads.
    """
    if wavelength_minutes <= 0:
        raise ValueError("wavelength_minutes must be positive")
    scale = wavelength_minutes / (2.0 * math.pi)
    return alpha_hat * scale, d * scale


class LeadClass(enum.Enum):
    PRIMARY_LEADS = "primary_leads"
    SECONDARY_LEADS = "secondary_leads"
    UNDECIDED = "undecided"
    NOT_POSITIVELY_CORRELATED = "not_positively_correlated"


def classify_lead(alpha_w: float, d_w: float) -> LeadClass:
    """Lead classification from the weighted mean direction and its CI.

    Positively correlated pairs have |alpha_w| <= pi/2; outside that the
    pair is flagged instead of classified.  Within it, the market leads
    whose side of zero the whole interval falls on.
    """
    if abs(alpha_w) > math.pi / 2.0:
        return LeadClass.NOT_POSITIVELY_CORRELATED
    if alpha_w - d_w > 0.0:
        return LeadClass.PRIMARY_LEADS
    if alpha_w + d_w < 0.0:
        return LeadClass.SECONDARY_LEADS
    return LeadClass.UNDECIDED


@dataclass(frozen=True)
class CircularSummary:
    """All pooled directional statistics of one phase-shift distribution.

    Angle fields are None when undefined (vanishing resultant or
    nonexistent confidence interval); ``variance`` is 1 - resultant
    length by construction.
    """

    mean_direction: Optional[float]
    resultant_length: float
    variance: float
    skewness: Optional[float]
    kurtosis: Optional[float]
    ci_halfwidth: Optional[float]
    weighted_mean: Optional[float]
    weighted_ci: Optional[float]
    n: int


@dataclass(frozen=True)
class TestResults:
    """Mean-angle test decision and Watson-Williams p-value (None when
    not performable)."""

    h_m: Optional[int]
    p_ww: Optional[float]


@dataclass(frozen=True)
class LeadLagEstimate:
    """Lead/lag in minutes (positive: primary leads) plus classification."""

    lead_minutes: Optional[float]
    ci_minutes: Optional[float]
    classification: LeadClass


def summarize(angles: Sequence[float], hat_center: float = 0.0,
              level: float = 0.95) -> CircularSummary:
    """Full circular summary of one angle sample.

    Weighted statistics use the hat function centered at ``hat_center``.
    Undefined quantities are stored as None rather than raised, so a
    degenerate distribution still yields a reportable summary.
    """
    a = _angles(angles)
    _, rbar = mean_resultant(a)
    variance = 1.0 - rbar

    alpha_hat = d = skew = kurt = None
    if rbar >= ZERO_RESULTANT_EPS:
        alpha_hat = mean_direction(a)
        skew = circular_skewness(a, alpha_hat)
        kurt = circular_kurtosis(a, alpha_hat)
        try:
            d = confidence_interval(a, level=level)
        except IntervalUndefined:
            d = None

    alpha_w = d_w = None
    w = hat_weights(a, hat_center)
    if float(np.sum(w)) > 0.0:
        try:
            alpha_w = mean_direction(a, w)
            d_w = confidence_interval(a, w, level=level)
        except IntervalUndefined:
            d_w = None
        except StatsError:
            alpha_w = None
    return CircularSummary(alpha_hat, rbar, variance, skew, kurt, d,
                           alpha_w, d_w, int(a.size))
