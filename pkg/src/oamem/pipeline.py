"""End-to-end experiment assembly.

One experiment = one configuration = two recorded runs sharing a seed:

* "reference": the storage medium is bypassed, so the input pulse itself
  reaches the sorter; it normalizes the efficiency denominator,
* "memory": full store/hold/retrieve through the ensemble.

Both runs share the transverse chain. The source field F (unit power) is
split 50/50 onto two sorter arms; each arm applies a fork of order
l_shift and couples into a single-mode fiber. Because every element after
the medium is linear, per-bin detection means follow from a handful of
per-shell constants:

    gamma_ck = <fiber | F restricted to shell k, winding shifted by arm c>
    m_c(t)   = |sum_k gamma_ck u_k(t)|^2      matched (coupled) power
    S(t)     = sum_k w_k |u_k(t)|^2           total arriving power
    flux_c   = (n/2) eta_c a_c [ m_c + eps_c (S - m_c) ]

with u_k the per-shell temporal envelopes (the pulse itself for the
reference run, the memory output for the storage run), n the source mean
photon number, eta_c the fork efficiency, a_c the arm acceptance and
eps_c the crosstalk floor of the fiber stage. Partitioning the fiber
overlap over shells is exact: the shells tile the radial grid.

Counts are sampled per (trial, channel, bin) on the config seed; the
reference run draws on stream 0, the memory run on stream 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import analysis as ana
from . import counting, memory, modes
from .config import ExperimentConfig, config_hash, resolved_dict

__all__ = [
    "PreparedExperiment",
    "ExperimentResult",
    "prepare",
    "expected_bin_means",
    "run_experiment",
    "sweep_values",
    "STREAM_REFERENCE",
    "STREAM_MEMORY",
]

STREAM_REFERENCE = 0
STREAM_MEMORY = 1

_ARMS = ("plus", "minus")


@dataclass(frozen=True)
class PreparedExperiment:
    """Everything deterministic that precedes photon counting."""

    cfg: ExperimentConfig
    source_field: modes.TransverseField
    source_coefficients: modes.ModeCoefficients
    pulse: memory.PulseEnvelope
    shells: memory.RadialShells
    gamma: np.ndarray            # (2, K) complex fiber overlaps per arm, shell
    matched_channel: str | None
    n_bins: int
    samples_per_bin: int

    @property
    def arm_order(self) -> tuple:
        return _ARMS


def _arm_params(cfg: ExperimentConfig):
    return (cfg.sorter.plus, cfg.sorter.minus)


def prepare(cfg: ExperimentConfig) -> PreparedExperiment:
    """Synthesize the source and precompute the per-arm shell overlaps."""
    grid = modes.grid_for_waist(
        cfg.source.waist_m,
        n_radial=cfg.grid.n_radial,
        n_azimuthal=cfg.grid.n_azimuthal,
        extent_waists=cfg.grid.extent_waists,
    )
    target = modes.ModeCoefficients.from_terms(
        [(p, l, a) for p, l, a in cfg.source.target], cfg.source.waist_m
    ).normalized()
    fld = modes.synthesize_slm(
        target, phase_only=cfg.source.phase_only, grid=grid
    )
    coeffs = modes.decompose(fld, p_max=8, l_max=_l_span(cfg), basis_waist=cfg.source.waist_m)

    shells = memory.shells_for_field(fld, cfg.memory.n_shells if cfg.memory.enabled else 1)

    # fiber fundamental mode profile, unit power (same convention as optics)
    fiber = modes.lg_radial(0, 0, cfg.sorter.fiber_waist_m, grid.r)
    gamma = np.empty((2, shells.count), dtype=complex)
    for c, arm in enumerate(_arm_params(cfg)):
        phase = np.exp(1j * arm.l_shift * grid.theta)
        ring = (fld.values @ phase) * grid.area_weights * np.conj(fiber)
        b = shells.bounds
        for k in range(shells.count):
            gamma[c, k] = ring[b[k]:b[k + 1]].sum()

    dom = target.dominant_winding()
    matched = None
    if dom is not None:
        for name, arm in zip(_ARMS, _arm_params(cfg)):
            if arm.l_shift == -dom:
                matched = name
                break

    spb = int(round(cfg.detector.bin_width_s / cfg.dt_s))
    n_bins = int(round(cfg.detector.duration_s / cfg.detector.bin_width_s))

    pulse = memory.half_gaussian_pulse(
        cfg.dt_s,
        peak_time=cfg.source.pulse_peak_s,
        fwhm=cfg.source.pulse_fwhm_s,
        t_end=cfg.source.pulse_peak_s,
        energy=1.0,
    )
    return PreparedExperiment(
        cfg=cfg,
        source_field=fld,
        source_coefficients=coeffs,
        pulse=pulse,
        shells=shells,
        gamma=gamma,
        matched_channel=matched,
        n_bins=n_bins,
        samples_per_bin=spb,
    )


def _l_span(cfg: ExperimentConfig) -> int:
    top = max(abs(l) for _, l, _ in cfg.source.target)
    return max(3, top + max(abs(cfg.sorter.plus.l_shift), abs(cfg.sorter.minus.l_shift)))


def _shell_envelopes(prep: PreparedExperiment, run: str):
    """Per-shell complex envelopes u_k(t) on the detection timeline.

    Returns (u (K, T), diagnostics dict). T covers exactly the binned
    duration.
    """
    cfg = prep.cfg
    n_t = prep.n_bins * prep.samples_per_bin
    K = prep.shells.count
    u = np.zeros((K, n_t), dtype=complex)
    if run == "reference" or not cfg.memory.enabled:
        take = min(prep.pulse.samples.size, n_t)
        u[:, :take] = prep.pulse.samples[None, :take]
        return u, {}
    if run != "memory":
        raise ValueError(f"unknown run {run!r}")
    ens = memory.EnsembleParams(
        optical_depth=cfg.memory.optical_depth,
        gamma=cfg.memory.gamma_rad_s,
        gamma_s=cfg.memory.gamma_s_rad_s,
        length=cfg.memory.length_m,
        control_waist=cfg.memory.control_waist_m,
        signal_waist=cfg.source.waist_m,
    )
    sched = memory.ControlSchedule(
        omega0=cfg.memory.omega0_rad_s,
        off_time=cfg.memory.off_time_s,
        on_time=cfg.memory.on_time_s,
        switch_duration=cfg.memory.switch_duration_s,
        shape=cfg.memory.switch_shape,
    )
    mo = memory.run_memory(
        prep.source_field,
        prep.pulse,
        ens,
        sched,
        t_end=cfg.detector.duration_s,
        n_shells=cfg.memory.n_shells,
        n_z=cfg.memory.n_z,
    )
    if not np.array_equal(mo.shells.bounds, prep.shells.bounds):
        raise AssertionError("memory stage rebuilt different shells than prepare()")
    take = min(mo.shell_envelopes.shape[1], n_t)
    u[:, :take] = mo.shell_envelopes[:, :take]
    diag = {
        "store": mo.store_diagnostics,
        "retrieve": mo.retrieve_diagnostics,
    }
    return u, diag


def expected_bin_means(prep: PreparedExperiment, run: str):
    """Per-bin detection means, shape (2, n_bins); plus diagnostics."""
    cfg = prep.cfg
    u, diag = _shell_envelopes(prep, run)
    w = prep.shells.weights
    total_power = np.einsum("k,kt->t", w, np.abs(u) ** 2)
    det = counting.DetectorParams(
        quantum_efficiency=cfg.detector.quantum_efficiency,
        dark_count_rate=cfg.detector.dark_count_rate_hz,
    )
    photons = np.empty((2, prep.n_bins))
    for c, arm in enumerate(_arm_params(cfg)):
        matched_power = np.abs(prep.gamma[c] @ u) ** 2
        flux = (
            (cfg.source.mean_photons / 2.0)
            * arm.diffraction_efficiency
            * arm.acceptance
            * (matched_power + arm.crosstalk_floor * np.maximum(total_power - matched_power, 0.0))
        )
        per_bin = flux.reshape(prep.n_bins, prep.samples_per_bin).sum(axis=1) * cfg.dt_s
        photons[c] = per_bin
    leak = cfg.memory.leak_rate_at_detector_hz if (run == "memory" and cfg.memory.enabled) else 0.0
    means = counting.expected_counts(photons, det, cfg.detector.bin_width_s, background_rate=leak)
    return means, diag


@dataclass(frozen=True)
class ExperimentResult:
    cfg: ExperimentConfig
    config_hash: str
    matched_channel: str | None
    expected: dict
    histograms: dict
    report: ana.MetricsReport
    diagnostics: dict = field(default_factory=dict)


def run_experiment(
    cfg: ExperimentConfig,
    seed: int | None = None,
    trials: int | None = None,
    workers: int = 1,
) -> ExperimentResult:
    """Full deterministic experiment: prepare, sample both runs, reduce."""
    seed = cfg.seed if seed is None else seed
    trials = cfg.trials if trials is None else trials
    prep = prepare(cfg)
    expected = {}
    histograms = {}
    diagnostics = {}
    for run, stream in (("reference", STREAM_REFERENCE), ("memory", STREAM_MEMORY)):
        means, diag = expected_bin_means(prep, run)
        expected[run] = means
        if diag:
            diagnostics[run] = diag
        histograms[run] = counting.sample_histogram(
            means,
            trials,
            seed,
            stream=stream,
            bin_width=cfg.detector.bin_width_s,
            t0=0.0,
            channels=_ARMS,
            workers=workers,
        )

    win_in = ana.WindowSpec(*cfg.analysis.input_window_s, label="input")
    win_ret = ana.WindowSpec(*cfg.analysis.retrieval_window_s, label="retrieval")
    eff = ana.efficiency(histograms["memory"], histograms["reference"], win_ret, win_in)
    dist = (
        ana.distinction_ratio(histograms["memory"], win_ret, prep.matched_channel)
        if prep.matched_channel is not None
        else None
    )
    # the arm asymmetry is identical in every window (the chain after the
    # splitter is linear and azimuthally symmetric), so pool all recorded
    # light from both runs for the tightest estimate
    pooled = np.zeros(2, dtype=np.int64)
    for h in histograms.values():
        for w in (win_in, win_ret):
            pooled += ana.window_counts(h, w).astype(np.int64)
    imb = ana.imbalance_from_counts(int(pooled[0]), int(pooled[1]))
    imb["pooled_over"] = "reference+memory runs, input+retrieval windows"

    totals = {
        run: {
            ch: int(n)
            for ch, n in zip(_ARMS, histograms[run].counts.sum(axis=1, dtype=np.uint64))
        }
        for run in histograms
    }
    report = ana.MetricsReport(
        config_hash=config_hash(cfg),
        seed=seed,
        trials=trials,
        windows={
            "input_s": list(cfg.analysis.input_window_s),
            "retrieval_s": list(cfg.analysis.retrieval_window_s),
        },
        totals=totals,
        efficiency=eff,
        distinction=dist,
        imbalance=imb,
        extras={
            "name": cfg.name,
            "matched_channel": prep.matched_channel,
            "source_winding_power": {
                str(l): prep.source_coefficients.winding_power(l)
                for l in prep.source_coefficients.windings()
            },
            "expected_totals": {
                run: {ch: float(expected[run][c].sum()) * trials for c, ch in enumerate(_ARMS)}
                for run in expected
            },
        },
    )
    return ExperimentResult(
        cfg=cfg,
        config_hash=config_hash(cfg),
        matched_channel=prep.matched_channel,
        expected=expected,
        histograms=histograms,
        report=report,
        diagnostics=diagnostics,
    )


def sweep_values(raw_cfg: dict, param: str, values, seed=None, trials=None, workers: int = 1):
    """Run the experiment once per value of a dotted config path.

    Yields (value, ExperimentResult) in order.
    """
    from .config import parse_config, set_by_path

    for v in values:
        cfg = parse_config(set_by_path(raw_cfg, param, v))
        yield v, run_experiment(cfg, seed=seed, trials=trials, workers=workers)
