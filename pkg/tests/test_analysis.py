"""Window metrics and deterministic report emission."""

import json
import math

import numpy as np
import pytest

from oamem import analysis as ana
from oamem.counting import CountHistogram
from oamem.analysis import MetricsReport, WindowSpec


def make_hist(plus, minus, trials=100, bin_width=1e-8, t0=0.0):
    counts = np.array([plus, minus], dtype=np.uint64)
    return CountHistogram(counts=counts, trials=trials, bin_width=bin_width, t0=t0)


def test_window_selects_by_bin_center():
    hist = make_hist([1, 2, 4, 8], [16, 32, 64, 128])
    # centers at 0.5, 1.5, 2.5, 3.5 (x 1e-8); [1e-8, 3e-8) takes bins 1, 2
    per = ana.window_counts(hist, WindowSpec(1e-8, 3e-8))
    assert per.tolist() == [6, 96]
    # boundary: a center exactly at t_start is in, at t_stop is out
    per = ana.window_counts(hist, WindowSpec(1.5e-8, 2.5e-8))
    assert per.tolist() == [2, 32]
    with pytest.raises(ValueError):
        WindowSpec(2e-8, 2e-8)


def test_efficiency_is_trial_normalized():
    mem = make_hist([10, 7], [6, 4], trials=100)
    ref = make_hist([20, 10], [10, 5], trials=50)
    win = WindowSpec(0.0, 4e-8)
    out = ana.efficiency(mem, ref, win, win)
    assert out["retrieved_counts"] == 27
    assert out["input_counts"] == 45
    assert out["value"] == pytest.approx((27 / 100) / (45 / 50), rel=1e-15)
    assert out["err"] == pytest.approx(out["value"] * math.sqrt(1 / 27 + 1 / 45),
                                       rel=1e-12)


def test_efficiency_guards():
    win = WindowSpec(0.0, 4e-8)
    empty = make_hist([0, 0, 0, 0], [0, 0, 0, 0], trials=10)
    full = make_hist([1, 2, 3, 4], [0, 0, 0, 0], trials=10)
    with pytest.raises(ValueError):
        ana.efficiency(full, empty, win, win)
    out = ana.efficiency(empty, full, win, win)
    assert out["value"] == 0.0
    assert math.isnan(out["err"])


def test_distinction_ratio_db():
    hist = make_hist([1000], [10], bin_width=1e-8)
    out = ana.distinction_ratio(hist, WindowSpec(0.0, 1e-8), matched="plus")
    assert out["ratio"] == pytest.approx(100.0)
    assert out["db"] == pytest.approx(20.0, abs=1e-12)
    assert out["db_err"] == pytest.approx(
        10.0 / math.log(10.0) * math.sqrt(1 / 1000 + 1 / 10), rel=1e-12)
    flipped = ana.distinction_ratio(hist, WindowSpec(0.0, 1e-8), matched="minus")
    assert flipped["db"] == pytest.approx(-20.0, abs=1e-12)


def test_distinction_sentinels_and_guards():
    win = WindowSpec(0.0, 1e-8)
    clean = ana.distinction_ratio(make_hist([54], [0]), win, matched="plus")
    assert math.isinf(clean["ratio"]) and math.isinf(clean["db"])
    assert math.isnan(clean["db_err"])
    silent = ana.distinction_ratio(make_hist([0], [0]), win, matched="plus")
    assert math.isnan(silent["ratio"])
    with pytest.raises(ValueError):
        ana.distinction_ratio(make_hist([1], [1]), win, matched="up")


def test_imbalance_closed_form():
    out = ana.imbalance_from_counts(109, 100)
    assert out["value"] == pytest.approx(2.0 * 9.0 / 209.0, rel=1e-15)
    assert out["err"] == pytest.approx(4.0 * math.sqrt(109 * 100) / 209.0 ** 1.5,
                                       rel=1e-12)
    assert out["ratio"] == pytest.approx(1.09)
    empty = ana.imbalance_from_counts(0, 0)
    assert math.isnan(empty["value"]) and math.isnan(empty["err"])
    assert ana.imbalance_from_counts(5, 0)["ratio"] == float("inf")


def test_imbalance_pools_windows():
    hist = make_hist([10, 0, 30, 2], [8, 1, 25, 3])
    w1 = WindowSpec(0.0, 1e-8)     # bin 0
    w2 = WindowSpec(2e-8, 3e-8)    # bin 2
    pooled = ana.imbalance(hist, (w1, w2))
    assert pooled["plus"] == 40 and pooled["minus"] == 33
    single = ana.imbalance(hist, w1)
    assert single["plus"] == 10 and single["minus"] == 8
    assert pooled == ana.imbalance_from_counts(40, 33)
    bad = CountHistogram(counts=np.zeros((2, 2), dtype=np.uint64), trials=1,
                         bin_width=1e-8, channels=("a", "b"))
    with pytest.raises(ValueError):
        ana.imbalance(bad, w1)


def test_report_to_dict_skips_missing_blocks():
    rep = MetricsReport(config_hash="abc", seed=1, trials=10,
                        windows={"input": [0.0, 1.0]}, totals={"plus": 3})
    d = rep.to_dict()
    assert "efficiency" not in d and "imbalance" not in d and "extras" not in d
    rep2 = MetricsReport(config_hash="abc", seed=1, trials=10, windows={},
                         totals={}, imbalance={"value": 0.1}, extras={"name": "x"})
    d2 = rep2.to_dict()
    assert d2["imbalance"] == {"value": 0.1}
    assert d2["extras"] == {"name": "x"}


def emit_once(tmp_path, sub):
    hist = make_hist([3, 1, 4, 1], [5, 9, 2, 6], trials=7, t0=1e-6)
    rep = MetricsReport(
        config_hash="deadbeef", seed=11, trials=7,
        windows={"input": [0.0, 2e-8]},
        totals={"reference": {"plus": 9, "minus": 22}},
        distinction={"ratio": float("inf"), "db": float("inf"),
                     "db_err": float("nan"), "matched_counts": np.int64(9)},
        efficiency={"value": np.float64(0.16)},
    )
    out = tmp_path / sub
    return ana.emit_report(rep, {"reference": hist, "memory": hist}, out,
                           stem="demo"), out


def test_emit_report_layout(tmp_path):
    paths, out = emit_once(tmp_path, "a")
    names = [p.name for p in paths]
    assert names == ["demo_memory_counts.csv", "demo_reference_counts.csv",
                     "demo_metrics.json"]
    text = (out / "demo_reference_counts.csv").read_text().splitlines()
    assert text[0] == "time_s,channel,counts"
    # channel-major rows, times as %.9e bin centers
    assert text[1] == "1.005000000e-06,plus,3"
    assert [ln.split(",")[1] for ln in text[1:]] == ["plus"] * 4 + ["minus"] * 4
    meta = json.loads((out / "demo_metrics.json").read_text())
    assert meta["config_hash"] == "deadbeef"
    assert meta["distinction"]["ratio"] == "inf"
    assert meta["distinction"]["db_err"] == "nan"
    assert meta["distinction"]["matched_counts"] == 9
    assert meta["efficiency"]["value"] == 0.16
    assert list(meta) == sorted(meta)


def test_emit_report_is_byte_deterministic(tmp_path):
    paths_a, _ = emit_once(tmp_path, "a")
    paths_b, _ = emit_once(tmp_path, "b")
    for pa, pb in zip(paths_a, paths_b):
        assert pa.read_bytes() == pb.read_bytes()
