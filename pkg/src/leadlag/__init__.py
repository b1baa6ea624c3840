"""Lead-lag analysis of market pairs via local extrema and circular statistics.

The package detects relevant local extrema of two price series with a
MACD-driven stop-and-reverse process, matches their mean wavelengths,
turns the relative positions of the extrema into a distribution of
phase-shift angles on the unit circle, and summarizes that distribution
with directional statistics, hypothesis tests and a lead/lag estimate in
minutes.
"""

from .calibration import (CalibrationCache, CalibrationResult, WavelengthCurve,
                          calibrate_timescale, synchronize_pair,
                          truncate_to_common_span)
from .circular_stats import (CircularSummary, LeadClass, LeadLagEstimate,
                             TestResults, circular_kurtosis, circular_skewness,
                             circular_variance, classify_lead,
                             confidence_interval, hat_weights, lead_lag,
                             mean_direction, mean_resultant,
                             one_sample_mean_test, summarize, watson_williams,
                             wrap_angle)
from .errors import (AnalysisError, CalibrationError, DataError, ExtremaError,
                     IntervalUndefined, LeadLagError, PhaseShiftError,
                     StatsError, TargetUnattainable)
from .indicators import (IndicatorSeries, MacdParams, SarState, atr, ema, macd,
                         sar_direction)
from .market_data import (Candle, CandleSeries, ColumnSchema, TimeMode,
                          dump_candles, elapsed, load_candles)
from .minmax import (Extremum, ExtremumKind, ExtremumSeries, detect_extrema,
                     dump_extrema, mean_wavelength, rolling_wavelength)
from .phase_shift import (AngularDistribution, PhaseSample, TimeSelector,
                          compute_phase_shifts)
from .pipeline import (AggregatedHistogram, DirectionModeResult, GroupOutcome,
                       PairReport, SweepConfig, aggregate_histograms,
                       run_pair_analysis)
from .report import (ReportRow, render_rose_svg, row_from_result, write_table,
                     write_pair_outputs, write_rose_plot)

__version__ = "0.1.0"
