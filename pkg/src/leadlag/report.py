"""Report writers: delimited tables, rose-histogram SVGs, figures, manifest.

Tables come in two flavors: CSV with fixed 3-decimal formatting for
reading, JSON with full double precision for machines.  The rose plot is
written as hand-assembled SVG so its bytes are a pure function of the
data (golden-file diffable); the supporting diagnostic figures use
matplotlib PNGs.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .circular_stats import CircularSummary, LeadClass
from .minmax import ExtremumSeries, rolling_wavelength
from .pipeline import AggregatedHistogram, DirectionModeResult, PairReport

LEADER_LABEL = {
    LeadClass.PRIMARY_LEADS: "prime",
    LeadClass.SECONDARY_LEADS: "sec",
    LeadClass.UNDECIDED: "none",
    LeadClass.NOT_POSITIVELY_CORRELATED: "none",
}

CSV_COLUMNS = ["prime", "sec", "alpha_hat", "d", "alpha_w", "d_w",
               "lead_minutes", "d_lead", "S_hat", "b_hat", "k_hat",
               "p_ww", "h_m", "leader"]


@dataclass(frozen=True)
class ReportRow:
    """One table row: pooled statistics of one ordering and time mode."""

    prime: str
    sec: str
    alpha_hat: Optional[float]
    d: Optional[float]
    alpha_w: Optional[float]
    d_w: Optional[float]
    lead_minutes: Optional[float]
    d_lead: Optional[float]
    s_hat: float
    b_hat: Optional[float]
    k_hat: Optional[float]
    p_ww: Optional[float]
    h_m: Optional[int]
    leader: str


def row_from_result(result: DirectionModeResult) -> ReportRow:
    s = result.summary
    return ReportRow(
        prime=result.primary_symbol,
        sec=result.secondary_symbol,
        alpha_hat=s.mean_direction,
        d=s.ci_halfwidth,
        alpha_w=s.weighted_mean,
        d_w=s.weighted_ci,
        lead_minutes=result.lead.lead_minutes,
        d_lead=result.lead.ci_minutes,
        s_hat=s.variance,
        b_hat=s.skewness,
        k_hat=s.kurtosis,
        p_ww=result.tests.p_ww,
        h_m=result.tests.h_m,
        leader=LEADER_LABEL[result.lead.classification],
    )


def _fmt3(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.3f}"


def write_table(rows: Sequence[ReportRow], format: str = "csv") -> bytes:
    """Serialize report rows; CSV rounds to 3 decimals, JSON is lossless."""
    if format == "csv":
        out = io.StringIO()
        out.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            cells = [r.prime, r.sec, _fmt3(r.alpha_hat), _fmt3(r.d),
                     _fmt3(r.alpha_w), _fmt3(r.d_w), _fmt3(r.lead_minutes),
                     _fmt3(r.d_lead), _fmt3(r.s_hat), _fmt3(r.b_hat),
                     _fmt3(r.k_hat), _fmt3(r.p_ww),
                     "" if r.h_m is None else str(r.h_m), r.leader]
            out.write(",".join(cells) + "\n")
        return out.getvalue().encode("utf-8")
    if format == "json":
        payload = [{
            "prime": r.prime, "sec": r.sec,
            "alpha_hat": r.alpha_hat, "d": r.d,
            "alpha_w": r.alpha_w, "d_w": r.d_w,
            "lead_minutes": r.lead_minutes, "d_lead": r.d_lead,
            "S_hat": r.s_hat, "b_hat": r.b_hat, "k_hat": r.k_hat,
            "p_ww": r.p_ww, "h_m": r.h_m, "leader": r.leader,
        } for r in rows]
        return (json.dumps(payload, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown table format {format!r}")


# --- rose-histogram SVG -------------------------------------------------
#
# Angles are drawn compass-style: 0 at the top, increasing clockwise, so
# the point for angle a sits at (cx + r sin a, cy - r cos a).

_SVG_SIZE = 560
_SVG_RADIUS = 230.0


def _polar(cx: float, cy: float, radius: float, angle: float):
    return cx + radius * math.sin(angle), cy - radius * math.cos(angle)


def _path_wedge(cx, cy, r, a0, a1) -> str:
    x0, y0 = _polar(cx, cy, r, a0)
    x1, y1 = _polar(cx, cy, r, a1)
    large = 1 if (a1 - a0) % (2 * math.pi) > math.pi else 0
    return (f"M {cx:.2f} {cy:.2f} L {x0:.4f} {y0:.4f} "
            f"A {r:.4f} {r:.4f} 0 {large} 1 {x1:.4f} {y1:.4f} Z")


def _radial_line(cx, cy, r0, r1, angle) -> str:
    x0, y0 = _polar(cx, cy, r0, angle)
    x1, y1 = _polar(cx, cy, r1, angle)
    return f'x1="{x0:.4f}" y1="{y0:.4f}" x2="{x1:.4f}" y2="{y1:.4f}"'


def render_rose_svg(hist: AggregatedHistogram, summary: CircularSummary,
                    title: str = "") -> bytes:
    """Polar bar chart of an aggregated angle histogram.

    Each bin draws the pooled relative frequency as a wedge, a whisker
    from the per-wavelength minimum to maximum, and tick marks at pooled
    frequency plus/minus one standard deviation.  Radial lines mark the
    mean direction (green) and the hat-weighted mean direction (red);
    either is omitted when undefined.  Output bytes depend only on the
    inputs.
    """
    edges = np.asarray(hist.bin_edges)
    if len(edges) < 5:
        raise ValueError("rose plot needs at least 4 bins")
    cx = cy = _SVG_SIZE / 2.0
    rmax = float(max(np.max(hist.max_freq), np.max(hist.pooled_freq)))
    scale = _SVG_RADIUS / rmax if rmax > 0 else 0.0

    parts: List[str] = []
    parts.append(f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                 f'width="{_SVG_SIZE}" height="{_SVG_SIZE}" '
                 f'viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">')
    parts.append(f'<rect width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>')
    if title:
        parts.append(f'<text x="{cx:.1f}" y="18" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="13">{_xml_escape(title)}</text>')

    # reference circle and axes
    parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{_SVG_RADIUS:.1f}" '
                 f'fill="none" stroke="#888888" stroke-width="1"/>')
    for angle, label in ((0.0, "0"), (math.pi / 2, "&#960;/2"),
                         (-math.pi, "&#177;&#960;"), (-math.pi / 2, "-&#960;/2")):
        lx, ly = _polar(cx, cy, _SVG_RADIUS + 14, angle)
        parts.append(f'<line {_radial_line(cx, cy, 0, _SVG_RADIUS, angle)} '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{lx:.1f}" y="{ly + 4:.1f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="12">{label}</text>')

    # bars with min/max whiskers and +-std ticks
    for b in range(len(edges) - 1):
        a0, a1 = float(edges[b]), float(edges[b + 1])
        mid = (a0 + a1) / 2.0
        r_bar = float(hist.pooled_freq[b]) * scale
        if r_bar > 0:
            parts.append(f'<path d="{_path_wedge(cx, cy, r_bar, a0, a1)}" '
                         f'fill="#4477aa" fill-opacity="0.55" '
                         f'stroke="#225588" stroke-width="0.8"/>')
        r_lo = float(hist.min_freq[b]) * scale
        r_hi = float(hist.max_freq[b]) * scale
        if r_hi > r_lo:
            parts.append(f'<line {_radial_line(cx, cy, r_lo, r_hi, mid)} '
                         f'stroke="#222222" stroke-width="1.2"/>')
        std = float(hist.std_freq[b]) * scale
        for r_tick in (max(r_bar - std, 0.0), r_bar + std):
            t0 = mid - 0.25 * (a1 - a0)
            t1 = mid + 0.25 * (a1 - a0)
            x0, y0 = _polar(cx, cy, r_tick, t0)
            x1, y1 = _polar(cx, cy, r_tick, t1)
            parts.append(f'<line x1="{x0:.4f}" y1="{y0:.4f}" x2="{x1:.4f}" '
                         f'y2="{y1:.4f}" stroke="#cc6677" stroke-width="1"/>')

    # mean directions: plain mean in green, hat-weighted mean in red; a
    # zero resultant means no direction exists, and then the weighted
    # line would only echo the hat center, so both are suppressed
    if summary.mean_direction is not None:
        parts.append(f'<line {_radial_line(cx, cy, 0, _SVG_RADIUS, summary.mean_direction)} '
                     f'stroke="#117733" stroke-width="2"/>')
        if summary.weighted_mean is not None:
            parts.append(f'<line {_radial_line(cx, cy, 0, _SVG_RADIUS, summary.weighted_mean)} '
                         f'stroke="#cc3311" stroke-width="2" stroke-dasharray="6 3"/>')

    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def _xml_escape(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def write_rose_plot(hist: AggregatedHistogram, summary: CircularSummary,
                    path) -> bytes:
    """Render the rose SVG and write it to ``path``; returns the bytes."""
    data = render_rose_svg(hist, summary)
    Path(path).write_bytes(data)
    return data


# --- matplotlib diagnostics ---------------------------------------------


def save_lead_by_wavelength_png(result: DirectionModeResult, path) -> None:
    """Lead/lag minutes per wavelength group with CI bars."""
    groups = [g for g in result.groups if g.lead_minutes is not None]
    fig, ax = plt.subplots(figsize=(7.0, 3.6))
    if groups:
        w = [g.wavelength for g in groups]
        lead = [g.lead_minutes for g in groups]
        err = [g.lead_ci_minutes if g.lead_ci_minutes is not None else 0.0
               for g in groups]
        ax.errorbar(w, lead, yerr=err, fmt="o", ms=3, lw=1, capsize=2,
                    color="#225588", ecolor="#99bbdd")
    if result.lead.lead_minutes is not None:
        ax.axhline(result.lead.lead_minutes, color="#cc3311", lw=1.2,
                   label=f"aggregate {result.lead.lead_minutes:.1f} min")
        ax.legend(loc="best", fontsize=8)
    ax.axhline(0.0, color="#888888", lw=0.8)
    ax.set_xlabel("wavelength (candles)")
    ax.set_ylabel("lead (min), + = primary leads")
    ax.set_title(f"{result.primary_symbol} vs {result.secondary_symbol} "
                 f"({result.selector.value} times)", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_rolling_wavelength_png(extrema: ExtremumSeries, bar_duration: int,
                                path, window: int = 49) -> None:
    """Moving average of per-cycle wavelengths over recent cycles."""
    window = min(window, len(extrema) - 1)
    points = rolling_wavelength(extrema, window)
    t = [p[0] for p in points]
    lam = [p[1] / bar_duration for p in points]
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    ax.plot(t, lam, lw=0.9, color="#225588")
    ax.set_xlabel("time (epoch s)")
    ax.set_ylabel("wavelength (candles)")
    ax.set_title(f"{extrema.source_symbol}: rolling mean wavelength "
                 f"({window} cycles)", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# --- output bundle --------------------------------------------------------


def _histogram_json(hist: AggregatedHistogram) -> dict:
    return {
        "bin_edges": hist.bin_edges.tolist(),
        "mean_freq": hist.mean_freq.tolist(),
        "min_freq": hist.min_freq.tolist(),
        "max_freq": hist.max_freq.tolist(),
        "std_freq": hist.std_freq.tolist(),
        "pooled_freq": hist.pooled_freq.tolist(),
    }


def _row_json(row: ReportRow) -> dict:
    return json.loads(write_table([row], "json"))[0]


def direction_report_json(result: DirectionModeResult) -> dict:
    """Full-precision JSON payload for one ordering and time mode."""
    return {
        "row": _row_json(row_from_result(result)),
        "classification": result.lead.classification.value,
        "n_pooled": result.summary.n,
        "n_groups": result.n_groups,
        "resultant_length": result.summary.resultant_length,
        "lead_pooled_minutes": result.lead_pooled_minutes,
        "lead_pooled_ci_minutes": result.lead_pooled_ci_minutes,
        "histogram": _histogram_json(result.histogram),
        "groups": [{
            "wavelength": g.wavelength,
            "n_samples": g.n_samples,
            "alpha_w": g.alpha_w,
            "d_w": g.d_w,
            "lead_minutes": g.lead_minutes,
            "lead_ci_minutes": g.lead_ci_minutes,
        } for g in result.groups],
    }


def _manifest(report: PairReport, extra_inputs: Optional[dict]) -> dict:
    cfg = report.config
    manifest = {
        "pair": [report.symbol_a, report.symbol_b],
        "config": {
            "wavelengths": [cfg.wavelengths.start, cfg.wavelengths.stop - 1],
            "bar_duration": cfg.bar_duration,
            "time_modes": [m.value for m in cfg.time_modes],
            "histogram_bins": cfg.histogram_bins,
            "hat_center": cfg.hat_center,
            "tolerance": cfg.tolerance,
            "delta_coeff": cfg.delta_coeff,
        },
        "data_hashes": dict(sorted(report.data_hashes.items())),
        "directions": {},
    }
    if extra_inputs:
        manifest["inputs"] = extra_inputs
    for direction, outcomes in sorted(report.outcomes.items()):
        entries = []
        for o in outcomes:
            entry = {"wavelength": o.wavelength, "status": o.status}
            if o.status == "ok":
                entry.update({
                    "timescale_primary": o.primary.timescale,
                    "timescale_secondary": o.secondary.timescale,
                    "achieved_primary": o.primary.achieved_wavelength,
                    "achieved_secondary": o.secondary.achieved_wavelength,
                    "lambda_star_seconds": o.lambda_star_seconds,
                    "samples": {sel.value: len(dist)
                                for sel, dist in o.distributions.items()},
                })
            else:
                entry["message"] = o.message
            entries.append(entry)
        manifest["directions"][direction] = entries
    return manifest


def _safe_name(symbol: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in symbol)


def write_pair_outputs(report: PairReport, outdir, *,
                       figures: bool = True,
                       extra_inputs: Optional[dict] = None) -> List[Path]:
    """Write every report artifact for a finished pair analysis.

    Per ordering and time mode: a one-row CSV table, a full-precision
    JSON report and the rose-histogram SVG; optionally a lead-by-
    wavelength PNG.  A manifest records the configuration, input hashes
    and every per-wavelength calibration outcome.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    pair = f"{_safe_name(report.symbol_a)}-{_safe_name(report.symbol_b)}"
    written: List[Path] = []

    for result in report.results:
        stem = f"{pair}_{result.direction}_{result.selector.value}"
        row = row_from_result(result)

        csv_path = outdir / f"{stem}.csv"
        csv_path.write_bytes(write_table([row], "csv"))
        written.append(csv_path)

        json_path = outdir / f"{stem}.json"
        payload = json.dumps(direction_report_json(result), indent=2) + "\n"
        json_path.write_text(payload, encoding="utf-8")
        written.append(json_path)

        svg_path = outdir / f"{stem}_rose.svg"
        write_rose_plot(result.histogram, result.summary, svg_path)
        written.append(svg_path)

        if figures:
            png_path = outdir / f"{stem}_leads.png"
            save_lead_by_wavelength_png(result, png_path)
            written.append(png_path)

    manifest_path = outdir / "manifest.json"
    manifest_path.write_text(
        json.dumps(_manifest(report, extra_inputs), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    written.append(manifest_path)
    return written
