import json
import math
from pathlib import Path

import numpy as np
import pytest

from leadlag import dump_candles
from leadlag.cli import main

from synthetic import walk_series


@pytest.fixture(scope="module")
def pair_csvs(tmp_path_factory):
    root = tmp_path_factory.mktemp("csv")
    a = root / "alpha.csv"
    b = root / "beta.csv"
    a.write_bytes(dump_candles(walk_series(4500, seed=51, symbol="alpha")))
    b.write_bytes(dump_candles(walk_series(4500, seed=52, symbol="beta")))
    return a, b


ANALYZE_FAST = ["--wavelengths", "44:48", "--modes", "extremum", "--jobs", "2"]


def test_analyze_happy_path(pair_csvs, tmp_path, capsys):
    a, b = pair_csvs
    out = tmp_path / "out"
    code = main(["analyze", "--primary", str(a), "--secondary", str(b),
                 "--out", str(out)] + ANALYZE_FAST)
    assert code == 0
    captured = capsys.readouterr().out
    assert "alpha vs beta" in captured
    assert (out / "alpha-beta_ab_extremum.csv").exists()
    assert (out / "alpha-beta_ba_extremum_rose.svg").exists()
    assert (out / "alpha-beta_ab_extremum_leads.png").exists()
    assert (out / "manifest.json").exists()


def test_missing_required_flag_exits_one(pair_csvs, tmp_path, capsys):
    a, _ = pair_csvs
    code = main(["analyze", "--primary", str(a), "--out", str(tmp_path)])
    assert code == 1
    assert "--secondary" in capsys.readouterr().err


def test_unknown_flag_exits_one(capsys):
    assert main(["analyze", "--frobnicate"]) == 1


def test_missing_file_exits_two(tmp_path, capsys):
    code = main(["analyze", "--primary", str(tmp_path / "nope.csv"),
                 "--secondary", str(tmp_path / "nope2.csv"),
                 "--out", str(tmp_path)])
    assert code == 2
    assert "data error" in capsys.readouterr().err


def test_malformed_csv_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,open,high,low,close\n100,1,0.4,0.5,0.45\n")
    code = main(["stats", "--angles", str(bad)])  # stats rejects non-floats
    assert code == 2


def test_analysis_failure_exits_three(pair_csvs, tmp_path, capsys):
    a, _ = pair_csvs
    flat = tmp_path / "flat.csv"
    n = 4500
    rows = "\n".join(f"{i * 3600},100,100,100,100" for i in range(n))
    flat.write_text("time,open,high,low,close\n" + rows + "\n")
    code = main(["analyze", "--primary", str(a), "--secondary", str(flat),
                 "--out", str(tmp_path / "o")] + ANALYZE_FAST)
    assert code == 3
    assert "analysis error" in capsys.readouterr().err


def test_stats_two_angles(tmp_path, capsys):
    angles = tmp_path / "angles.csv"
    angles.write_text(f"0.0\n{math.pi / 2}\n")
    assert main(["stats", "--angles", str(angles)]) == 0
    out = capsys.readouterr().out
    assert "mean_direction 0.785" in out
    assert "variance 0.293" in out
    assert "ci_halfwidth undefined" in out
    assert "h_m not_performable" in out


def test_stats_accepts_header_line(tmp_path, capsys):
    angles = tmp_path / "angles.csv"
    angles.write_text("alpha\n0.5\n0.5\n0.5\n")
    assert main(["stats", "--angles", str(angles)]) == 0
    assert "mean_direction 0.500" in capsys.readouterr().out


def test_extrema_dump_with_timescale(pair_csvs, tmp_path, capsys):
    a, _ = pair_csvs
    out = tmp_path / "ext.csv"
    code = main(["extrema", "--csv", str(a), "--timescale", "1.5",
                 "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "kind,time,price,confirm_time,candle_index"
    assert len(lines) > 50


def test_extrema_with_target_and_plot(pair_csvs, tmp_path, capsys):
    a, _ = pair_csvs
    png = tmp_path / "rolling.png"
    code = main(["extrema", "--csv", str(a), "--target-wavelength", "50",
                 "--out", str(tmp_path / "e.csv"), "--plot", str(png)])
    assert code == 0
    assert png.stat().st_size > 0


def test_extrema_requires_timescale_or_target(pair_csvs, tmp_path):
    a, _ = pair_csvs
    assert main(["extrema", "--csv", str(a)]) == 1


def test_calibrate_prints_result(pair_csvs, capsys):
    a, _ = pair_csvs
    code = main(["calibrate", "--csv", str(a), "--target", "50",
                 "--mode", "candles"])
    assert code == 0
    out = capsys.readouterr().out
    assert "timescale " in out
    assert "achieved_wavelength" in out
    assert "candles" in out
    assert "extrema_count" in out


def test_calibrate_unreachable_exits_three(pair_csvs, capsys):
    a, _ = pair_csvs
    code = main(["calibrate", "--csv", str(a), "--target", "1"])
    assert code == 3


def test_calibrate_uses_cache_file(pair_csvs, tmp_path, capsys):
    a, _ = pair_csvs
    cache = tmp_path / "cal.cache"
    assert main(["calibrate", "--csv", str(a), "--target", "50",
                 "--cache", str(cache)]) == 0
    first = capsys.readouterr().out
    assert cache.exists()
    assert main(["calibrate", "--csv", str(a), "--target", "50",
                 "--cache", str(cache)]) == 0
    assert capsys.readouterr().out == first


def test_config_file_supplies_defaults(pair_csvs, tmp_path, capsys):
    a, b = pair_csvs
    cfg = tmp_path / "run.conf"
    cfg.write_text("wavelengths = 44:48\nmodes = extremum\njobs = 2\n"
                   "# comment line\nno-figures = true\n")
    out = tmp_path / "out"
    code = main(["analyze", "--primary", str(a), "--secondary", str(b),
                 "--out", str(out), "--config", str(cfg)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["wavelengths"] == [44, 48]
    assert not list(out.glob("*.png"))  # no-figures honored


def test_explicit_flag_overrides_config(pair_csvs, tmp_path):
    a, b = pair_csvs
    cfg = tmp_path / "run.conf"
    cfg.write_text("wavelengths = 30:180\nmodes = extremum\n")
    out = tmp_path / "out"
    code = main(["analyze", "--primary", str(a), "--secondary", str(b),
                 "--out", str(out), "--config", str(cfg),
                 "--wavelengths", "44:46", "--jobs", "2", "--no-figures"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["wavelengths"] == [44, 46]


def test_symbols_flag_renames_outputs(pair_csvs, tmp_path):
    a, b = pair_csvs
    out = tmp_path / "out"
    code = main(["analyze", "--primary", str(a), "--secondary", str(b),
                 "--out", str(out), "--symbols", "DAX,SP500",
                 "--no-figures"] + ANALYZE_FAST)
    assert code == 0
    assert (out / "DAX-SP500_ab_extremum.csv").exists()


def test_jobs_do_not_change_outputs(pair_csvs, tmp_path):
    a, b = pair_csvs
    out1, out2 = tmp_path / "j1", tmp_path / "jN"
    base = ["analyze", "--primary", str(a), "--secondary", str(b),
            "--wavelengths", "44:48", "--modes", "extremum"]
    assert main(base + ["--out", str(out1), "--jobs", "1"]) == 0
    assert main(base + ["--out", str(out2), "--jobs", "4"]) == 0
    files1 = sorted(p.name for p in out1.iterdir())
    files2 = sorted(p.name for p in out2.iterdir())
    assert files1 == files2
    for name in files1:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
