"""Exception hierarchy shared across the package.

``DataError`` covers everything wrong with input data (CSV parsing,
invariant violations, disjoint spans).  ``AnalysisError`` and its
subclasses cover failures of the method itself (calibration dead ends,
degenerate statistics).  Programming errors (bad arguments) raise the
usual ``ValueError``/``IndexError`` instead.
"""


class LeadLagError(Exception):
    """Base class for all package-specific errors."""


class DataError(LeadLagError):
    """Invalid or inconsistent input data."""


class AnalysisError(LeadLagError):
    """The analysis could not be carried out on the given data."""


class ExtremaError(AnalysisError):
    """Extrema detection failed (series too short, fewer than 2 extrema)."""


class CalibrationError(AnalysisError):
    """No timescale attains the requested mean wavelength."""


class TargetUnattainable(CalibrationError):
    """The requested wavelength lies outside what the series can express
    (below bar resolution, beyond its span, or skipped over by the
    piecewise-constant wavelength map)."""


class PhaseShiftError(AnalysisError):
    """Phase-shift extraction failed (e.g. no secondary extrema in span)."""


class StatsError(AnalysisError):
    """A directional statistic is undefined for the given sample."""


class IntervalUndefined(StatsError):
    """The confidence interval for the mean direction does not exist
    (sample too diffuse for the chi-square based formula)."""
