"""Window metrics and report emission for count histograms.

Conventions fixed here so every consumer agrees:

* a window [t_start, t_stop) selects bins by their centers,
* efficiency is trial-normalized: (retrieved/trials) / (input/trials),
  with the fractional Poisson error sqrt(1/N_ret + 1/N_in),
* channel distinction is matched/crossed in the same window, reported
  both as a ratio and in dB; a zero crossed count gives +inf,
* imbalance between the two channels is 2(C+ - C-)/(C+ + C-) with its
  propagated Poisson error; the raw ratio C+/C- rides along.

Reports are deterministic: CSV rows in fixed channel-major order, JSON
with sorted keys, no timestamps, non-finite values serialized as strings.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .counting import CountHistogram

__all__ = [
    "WindowSpec",
    "window_counts",
    "efficiency",
    "distinction_ratio",
    "imbalance",
    "imbalance_from_counts",
    "MetricsReport",
    "emit_report",
]


@dataclass(frozen=True)
class WindowSpec:
    """Half-open time window [t_start, t_stop)."""

    t_start: float
    t_stop: float
    label: str = ""

    def __post_init__(self) -> None:
        if not self.t_start < self.t_stop:
            raise ValueError(f"empty window [{self.t_start}, {self.t_stop})")

    def contains(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        return (t >= self.t_start) & (t < self.t_stop)


def window_counts(hist: CountHistogram, window: WindowSpec) -> np.ndarray:
    """Per-channel count totals inside the window (bin centers decide)."""
    sel = window.contains(hist.times())
    return hist.counts[:, sel].sum(axis=1, dtype=np.uint64)


def efficiency(
    memory_hist: CountHistogram,
    reference_hist: CountHistogram,
    retrieval_window: WindowSpec,
    input_window: WindowSpec,
) -> dict:
    """Trial-normalized retrieved/input count ratio over both channels."""
    n_ret = int(window_counts(memory_hist, retrieval_window).sum())
    n_in = int(window_counts(reference_hist, input_window).sum())
    if memory_hist.trials <= 0 or reference_hist.trials <= 0:
        raise ValueError("both histograms need at least one trial")
    if n_in == 0:
        raise ValueError("reference window holds no counts; cannot normalize")
    value = (n_ret / memory_hist.trials) / (n_in / reference_hist.trials)
    err = value * math.sqrt(1.0 / max(n_ret, 1) + 1.0 / n_in) if n_ret else float("nan")
    return {
        "value": value,
        "err": err,
        "retrieved_counts": n_ret,
        "input_counts": n_in,
    }


def distinction_ratio(hist: CountHistogram, window: WindowSpec, matched: str) -> dict:
    """Matched-to-crossed channel power ratio in the window."""
    if matched not in hist.channels:
        raise ValueError(f"unknown channel {matched!r}; have {hist.channels}")
    if len(hist.channels) != 2:
        raise ValueError("distinction needs exactly two channels")
    per = window_counts(hist, window)
    i = hist.channels.index(matched)
    m, x = int(per[i]), int(per[1 - i])
    if x == 0:
        ratio = float("inf") if m > 0 else float("nan")
    else:
        ratio = m / x
    db = 10.0 * math.log10(ratio) if ratio > 0 else float("nan")
    err_db = (
        (10.0 / math.log(10.0)) * math.sqrt(1.0 / m + 1.0 / x)
        if m > 0 and x > 0
        else float("nan")
    )
    return {
        "ratio": ratio,
        "db": db,
        "db_err": err_db,
        "matched_counts": m,
        "crossed_counts": x,
        "matched_channel": matched,
    }


def imbalance_from_counts(plus: int, minus: int) -> dict:
    """Normalized channel asymmetry 2(C+ - C-)/(C+ + C-) with Poisson error."""
    total = plus + minus
    if total == 0:
        return {"value": float("nan"), "err": float("nan"), "plus": 0, "minus": 0,
                "ratio": float("nan")}
    value = 2.0 * (plus - minus) / total
    err = 4.0 * math.sqrt(max(plus, 1) * max(minus, 1)) / total ** 1.5
    ratio = plus / minus if minus > 0 else float("inf")
    return {"value": value, "err": err, "plus": plus, "minus": minus, "ratio": ratio}


def imbalance(hist: CountHistogram, window) -> dict:
    """Channel asymmetry of one histogram.

    ``window`` may be one WindowSpec or an iterable of disjoint windows
    whose counts pool.
    """
    if hist.channels != ("plus", "minus"):
        raise ValueError(f"imbalance expects ('plus', 'minus'), have {hist.channels}")
    windows = (window,) if isinstance(window, WindowSpec) else tuple(window)
    per = sum(window_counts(hist, w).astype(np.int64) for w in windows)
    return imbalance_from_counts(int(per[0]), int(per[1]))


@dataclass(frozen=True)
class MetricsReport:
    """Everything a run writes to metrics.json.

    Metric blocks are optional: a storage run carries efficiency and
    distinction, a splitter run carries imbalance.
    """

    config_hash: str
    seed: int
    trials: int
    windows: dict
    totals: dict
    efficiency: dict | None = None
    distinction: dict | None = None
    imbalance: dict | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "trials": self.trials,
            "windows": self.windows,
            "totals": self.totals,
        }
        for name in ("efficiency", "distinction", "imbalance"):
            block = getattr(self, name)
            if block is not None:
                out[name] = block
        if self.extras:
            out["extras"] = self.extras
        return out


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj).replace("float('", "").replace("')", "")
    return obj


def _write_histogram_csv(path: Path, hist: CountHistogram) -> None:
    times = hist.times()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "channel", "counts"])
        for c, name in enumerate(hist.channels):
            for i in range(hist.n_bins):
                w.writerow([f"{times[i]:.9e}", name, int(hist.counts[c, i])])


def emit_report(
    report: MetricsReport,
    histograms: dict,
    out_dir,
    stem: str = "run",
) -> list:
    """Write <stem>_metrics.json plus one <stem>_<run>_counts.csv per histogram.

    Returns the written paths. Output is byte-deterministic for identical
    inputs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for run_name in sorted(histograms):
        p = out / f"{stem}_{run_name}_counts.csv"
        _write_histogram_csv(p, histograms[run_name])
        paths.append(p)
    meta = out / f"{stem}_metrics.json"
    meta.write_text(json.dumps(_json_safe(report.to_dict()), sort_keys=True, indent=2) + "\n")
    paths.append(meta)
    return paths
