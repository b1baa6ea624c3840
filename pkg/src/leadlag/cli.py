"""Command-line interface.

Subcommands expose the pipeline end to end and its intermediate stages:

* ``analyze``   full pair analysis, writes tables, rose SVGs, figures
* ``extrema``   dump the detected extrema of one market
* ``calibrate`` search the timescale for a target wavelength
* ``stats``     directional statistics of a raw angle file

Exit codes: 0 success, 1 usage error, 2 data error, 3 analysis error.
Every flag can also be given in a plain ``key = value`` config file via
``--config``; explicit flags win over file values.  The calibration
cache path may come from the ``LEADLAG_CACHE`` environment variable.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .calibration import CalibrationCache, calibrate_timescale
from .circular_stats import mean_test_decision, summarize
from .errors import AnalysisError, DataError, IntervalUndefined, LeadLagError
from .market_data import ColumnSchema, TimeMode, load_candles
from .minmax import detect_extrema, dump_extrema, mean_wavelength
from .phase_shift import TimeSelector
from .pipeline import SweepConfig, run_pair_analysis
from .report import save_rolling_wavelength_png, write_pair_outputs

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ANALYSIS = 3

CACHE_ENV_VAR = "LEADLAG_CACHE"


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_wavelengths(text: str) -> range:
    try:
        lo, _, hi = text.partition(":")
        lo_i, hi_i = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LO:HI (e.g. 30:180), got {text!r}")
    if hi_i < lo_i:
        raise argparse.ArgumentTypeError(f"empty wavelength range {text!r}")
    return range(lo_i, hi_i + 1)


def _parse_modes(text: str):
    out = []
    for token in text.split(","):
        token = token.strip().lower()
        if token in ("extremum", "extrema"):
            out.append(TimeSelector.EXTREMUM_TIME)
        elif token in ("confirm", "confirmed"):
            out.append(TimeSelector.CONFIRM_TIME)
        else:
            raise argparse.ArgumentTypeError(
                f"unknown time mode {token!r} (use extremum, confirm)")
    return tuple(out)


def _parse_time_mode(text: str) -> TimeMode:
    token = text.strip().lower()
    if token == "candles":
        return TimeMode.CANDLES
    if token == "seconds":
        return TimeMode.SECONDS
    raise argparse.ArgumentTypeError(f"unknown mode {text!r} (candles or seconds)")


def build_parser() -> _Parser:
    parser = _Parser(prog="leadlag",
                     description="Lead-lag analysis of market pairs via "
                                 "local extrema and circular statistics.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p):
        p.add_argument("--config", type=Path, default=None,
                       help="key = value file with defaults for any flag")
        p.add_argument("--bar-duration", type=int, default=3600,
                       help="bar length in seconds (default 3600)")
        p.add_argument("--no-header", action="store_true",
                       help="CSV files carry no header row")
        p.add_argument("--delta-coeff", type=float, default=0.3,
                       help="reversal threshold as multiple of ATR(100)")
        p.add_argument("-v", "--verbose", action="store_true",
                       help="log per-wavelength progress")

    p_an = sub.add_parser("analyze", help="full pair analysis")
    p_an.add_argument("--primary", type=Path, required=True, help="CSV of market A")
    p_an.add_argument("--secondary", type=Path, required=True, help="CSV of market B")
    p_an.add_argument("--out", type=Path, required=True, help="output directory")
    p_an.add_argument("--symbols", default=None,
                      help="comma-separated symbol names (default: file stems)")
    p_an.add_argument("--wavelengths", type=_parse_wavelengths,
                      default=range(30, 181), metavar="LO:HI",
                      help="wavelength sweep in candles, inclusive (default 30:180)")
    p_an.add_argument("--modes", type=_parse_modes,
                      default=(TimeSelector.EXTREMUM_TIME, TimeSelector.CONFIRM_TIME),
                      help="time selectors: extremum,confirm (default both)")
    p_an.add_argument("--bins", type=int, default=24, help="histogram bins")
    p_an.add_argument("--hat-center", type=float, default=0.0,
                      help="center of the hat weighting (radians)")
    p_an.add_argument("--tolerance", type=float, default=0.02,
                      help="relative calibration tolerance")
    p_an.add_argument("--max-failed-fraction", type=float, default=0.2,
                      help="tolerated fraction of failing wavelength groups")
    p_an.add_argument("--cache", type=Path,
                      default=os.environ.get(CACHE_ENV_VAR) or None,
                      help=f"calibration cache file (env {CACHE_ENV_VAR})")
    p_an.add_argument("--jobs", type=int, default=None,
                      help="worker threads (default: all cores; 1 = sequential)")
    p_an.add_argument("--no-figures", action="store_true",
                      help="skip PNG diagnostic figures")
    common(p_an)

    p_ex = sub.add_parser("extrema", help="dump detected extrema of one market")
    p_ex.add_argument("--csv", type=Path, required=True)
    p_ex.add_argument("--symbol", default=None)
    group = p_ex.add_mutually_exclusive_group(required=True)
    group.add_argument("--timescale", type=float, default=None)
    group.add_argument("--target-wavelength", type=float, default=None,
                       help="calibrate to this wavelength first (candles)")
    p_ex.add_argument("--mode", type=_parse_time_mode, default=TimeMode.CANDLES,
                      help="clock for --target-wavelength (default candles)")
    p_ex.add_argument("--tolerance", type=float, default=0.02)
    p_ex.add_argument("--out", type=Path, default=None,
                      help="extrema CSV path (default: stdout)")
    p_ex.add_argument("--plot", type=Path, default=None,
                      help="write a rolling-wavelength PNG here")
    p_ex.add_argument("--window", type=int, default=49,
                      help="cycles in the rolling wavelength window")
    common(p_ex)

    p_ca = sub.add_parser("calibrate", help="find the timescale for a wavelength")
    p_ca.add_argument("--csv", type=Path, required=True)
    p_ca.add_argument("--symbol", default=None)
    p_ca.add_argument("--target", type=float, required=True,
                      help="target wavelength: candles in candles mode, "
                           "seconds in seconds mode")
    p_ca.add_argument("--mode", type=_parse_time_mode, default=TimeMode.CANDLES)
    p_ca.add_argument("--tolerance", type=float, default=0.02)
    p_ca.add_argument("--cache", type=Path,
                      default=os.environ.get(CACHE_ENV_VAR) or None)
    common(p_ca)

    p_st = sub.add_parser("stats", help="directional statistics of an angle file")
    p_st.add_argument("--angles", type=Path, required=True,
                      help="text file, one angle (radians) per line")
    p_st.add_argument("--hat-center", type=float, default=0.0)
    p_st.add_argument("--alpha0", type=float, default=0.0,
                      help="hypothesized mean angle for the h_m test")
    common(p_st)

    return parser


# --- config-file support ---------------------------------------------------


def _read_config_file(path: Path) -> dict:
    values = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser,
                       argv: Sequence[str]) -> None:
    """Overlay config-file values onto defaults; explicit flags win."""
    if not getattr(args, "config", None):
        return
    values = _read_config_file(args.config)
    actions = {a.dest: a for a in parser._actions if a.option_strings}
    for dest, raw in values.items():
        action = actions.get(dest)
        if action is None or any(opt in argv for opt in action.option_strings):
            continue
        if isinstance(action, argparse._StoreTrueAction):
            parsed = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                parsed = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise DataError(f"{args.config}: bad value for {dest}: {exc}")
        else:
            parsed = raw
        setattr(args, dest, parsed)


def _subparser_for(parser: _Parser, command: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


# --- subcommand bodies -----------------------------------------------------


def _schema(args) -> ColumnSchema:
    return ColumnSchema.positional() if args.no_header else ColumnSchema()


def _load(path: Path, args, symbol: Optional[str] = None):
    try:
        return load_candles(path, _schema(args), args.bar_duration,
                            symbol or path.stem)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _fmt_opt(value: Optional[float], digits: int = 3) -> str:
    return "undefined" if value is None else f"{value:.{digits}f}"


def _cmd_analyze(args) -> int:
    symbols = (None, None)
    if args.symbols:
        parts = [s.strip() for s in args.symbols.split(",")]
        if len(parts) != 2:
            raise DataError("--symbols needs exactly two comma-separated names")
        symbols = (parts[0], parts[1])
    series_a = _load(args.primary, args, symbols[0])
    series_b = _load(args.secondary, args, symbols[1])

    config = SweepConfig(wavelengths=args.wavelengths,
                         bar_duration=args.bar_duration,
                         time_modes=args.modes,
                         histogram_bins=args.bins,
                         hat_center=args.hat_center,
                         tolerance=args.tolerance,
                         delta_coeff=args.delta_coeff,
                         max_failed_fraction=args.max_failed_fraction,
                         jobs=args.jobs)
    cache = CalibrationCache(args.cache) if args.cache else None
    report = run_pair_analysis(series_a, series_b, config, cache)
    if cache is not None:
        cache.save()

    inputs = {
        series_a.symbol: {"path": str(args.primary), "candles": len(series_a)},
        series_b.symbol: {"path": str(args.secondary), "candles": len(series_b)},
    }
    written = write_pair_outputs(report, args.out, figures=not args.no_figures,
                                 extra_inputs=inputs)
    for result in report.results:
        print(f"{result.primary_symbol} vs {result.secondary_symbol} "
              f"[{result.selector.value}]: "
              f"alpha_hat={_fmt_opt(result.summary.mean_direction)} "
              f"alpha_w={_fmt_opt(result.summary.weighted_mean)} "
              f"lead={_fmt_opt(result.lead.lead_minutes)} min "
              f"p_ww={_fmt_opt(result.tests.p_ww)} "
              f"-> {result.lead.classification.value} "
              f"({result.summary.n} samples, {result.n_groups} groups)")
    print(f"wrote {len(written)} files to {args.out}")
    return EXIT_OK


def _cmd_extrema(args) -> int:
    series = _load(args.csv, args, args.symbol)
    if args.timescale is not None:
        timescale = args.timescale
    else:
        target = (args.target_wavelength * series.bar_duration
                  if args.mode is TimeMode.CANDLES else args.target_wavelength)
        result = calibrate_timescale(series, target, args.mode, args.tolerance,
                                     delta_coeff=args.delta_coeff)
        timescale = result.timescale
        print(f"# calibrated timescale {timescale:.6g} "
              f"(achieved {result.achieved_wavelength:.1f}s, "
              f"error {result.relative_error:.2%})", file=sys.stderr)
    extrema = detect_extrema(series, timescale, args.delta_coeff)
    payload = dump_extrema(extrema)
    if args.out:
        Path(args.out).write_bytes(payload)
        print(f"wrote {len(extrema)} extrema to {args.out}")
    else:
        sys.stdout.write(payload.decode("utf-8"))
    if args.plot:
        save_rolling_wavelength_png(extrema, series.bar_duration, args.plot,
                                    args.window)
        print(f"wrote rolling-wavelength plot to {args.plot}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    series = _load(args.csv, args, args.symbol)
    target = (args.target * series.bar_duration
              if args.mode is TimeMode.CANDLES else args.target)
    cache = CalibrationCache(args.cache) if args.cache else None
    result = calibrate_timescale(series, target, args.mode, args.tolerance,
                                 delta_coeff=args.delta_coeff, cache=cache)
    if cache is not None:
        cache.save()
    unit = "candles" if args.mode is TimeMode.CANDLES else "seconds"
    achieved = (result.achieved_wavelength / series.bar_duration
                if args.mode is TimeMode.CANDLES else result.achieved_wavelength)
    print(f"timescale {result.timescale:.6f}")
    print(f"achieved_wavelength {achieved:.3f} {unit}")
    print(f"target_wavelength {args.target:.3f} {unit}")
    print(f"relative_error {result.relative_error:.4%}")
    print(f"extrema_count {result.extrema_count}")
    return EXIT_OK


def _read_angles(path: Path) -> List[float]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    angles = []
    for lineno, line in enumerate(text.splitlines(), 1):
        token = line.split(",")[0].strip()
        if not token or token.lower() in ("alpha", "angle"):
            continue
        try:
            angles.append(float(token))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: not an angle: {line!r}") from exc
    if not angles:
        raise DataError(f"{path}: no angles found")
    return angles


def _cmd_stats(args) -> int:
    angles = _read_angles(args.angles)
    summary = summarize(angles, args.hat_center)
    print(f"n {summary.n}")
    print(f"mean_direction {_fmt_opt(summary.mean_direction)}")
    print(f"resultant_length {summary.resultant_length:.3f}")
    print(f"variance {summary.variance:.3f}")
    print(f"skewness {_fmt_opt(summary.skewness)}")
    print(f"kurtosis {_fmt_opt(summary.kurtosis)}")
    print(f"ci_halfwidth {_fmt_opt(summary.ci_halfwidth)}")
    print(f"weighted_mean {_fmt_opt(summary.weighted_mean)}")
    print(f"weighted_ci {_fmt_opt(summary.weighted_ci)}")
    if summary.mean_direction is not None and summary.ci_halfwidth is not None:
        h = mean_test_decision(summary.mean_direction, summary.ci_halfwidth,
                               args.alpha0)
        print(f"h_m {h}")
    else:
        print("h_m not_performable")
    return EXIT_OK


_COMMANDS = {
    "analyze": _cmd_analyze,
    "extrema": _cmd_extrema,
    "calibrate": _cmd_calibrate,
    "stats": _cmd_stats,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")

    try:
        _apply_config_file(args, _subparser_for(parser, args.command), argv)
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"leadlag: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AnalysisError as exc:
        print(f"leadlag: analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except LeadLagError as exc:
        print(f"leadlag: error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
