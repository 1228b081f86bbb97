"""Experiment configuration: strict JSON in, fully resolved dict out.

Rules:

* unknown keys anywhere are errors (catches typos before they silently
  fall back to defaults),
* every error names the offending dotted path,
* units ride on key names (_s, _m, _hz, _rad_s, _db) instead of comments,
* the resolved form spells out every default, round-trips through
  validation, and hashes canonically, so a config's sha256 identifies the
  physics exactly.

Built-in configs ship inside the package under oamem/configs/ and load by
bare name.
"""

from __future__ import annotations

import json
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "resolved_dict",
    "config_hash",
    "set_by_path",
    "builtin_names",
]

_REQUIRED = object()


class ConfigError(ValueError):
    """Invalid configuration content; message carries the dotted path."""


def _ctx(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _take(d: dict, key: str, path: str, default=_REQUIRED, kind=None, check=None):
    if key not in d:
        if default is _REQUIRED:
            raise ConfigError(f"missing required field {_ctx(path, key)}")
        return default
    val = d.pop(key)
    if kind is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"{_ctx(path, key)} must be a boolean, got {val!r}")
    elif kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{_ctx(path, key)} must be an integer, got {val!r}")
    elif kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{_ctx(path, key)} must be a number, got {val!r}")
        val = float(val)
        if not math.isfinite(val):
            raise ConfigError(f"{_ctx(path, key)} must be finite")
    elif kind is str:
        if not isinstance(val, str):
            raise ConfigError(f"{_ctx(path, key)} must be a string, got {val!r}")
    elif kind is dict:
        if not isinstance(val, dict):
            raise ConfigError(f"{_ctx(path, key)} must be an object, got {val!r}")
    elif kind is list:
        if not isinstance(val, list):
            raise ConfigError(f"{_ctx(path, key)} must be an array, got {val!r}")
    if check is not None and not check(val):
        raise ConfigError(f"{_ctx(path, key)} has invalid value {val!r}")
    return val


def _done(d: dict, path: str) -> None:
    if d:
        keys = ", ".join(sorted(d))
        raise ConfigError(f"unknown field(s) under {path or 'top level'}: {keys}")


def _positive(x) -> bool:
    return x > 0


def _non_negative(x) -> bool:
    return x >= 0


def _fraction(x) -> bool:
    return 0.0 < x <= 1.0


@dataclass(frozen=True)
class SourceConfig:
    target: tuple          # ((p, l, complex amp), ...)
    phase_only: bool
    mean_photons: float
    waist_m: float
    pulse_fwhm_s: float
    pulse_peak_s: float


@dataclass(frozen=True)
class GridConfig:
    n_radial: int
    n_azimuthal: int
    extent_waists: float


@dataclass(frozen=True)
class MemoryConfig:
    enabled: bool
    optical_depth: float
    gamma_rad_s: float
    gamma_s_rad_s: float
    length_m: float
    control_waist_m: float
    omega0_rad_s: float
    off_time_s: float
    on_time_s: float
    switch_duration_s: float
    switch_shape: str
    n_shells: int
    n_z: int
    control_leak_photon_rate_hz: float
    control_suppression_db: float

    @property
    def leak_rate_at_detector_hz(self) -> float:
        return self.control_leak_photon_rate_hz * 10.0 ** (-self.control_suppression_db / 10.0)


@dataclass(frozen=True)
class ArmConfig:
    l_shift: int
    diffraction_efficiency: float
    crosstalk_floor: float
    acceptance: float


@dataclass(frozen=True)
class SorterConfig:
    fiber_waist_m: float
    plus: ArmConfig
    minus: ArmConfig


@dataclass(frozen=True)
class DetectorConfig:
    quantum_efficiency: float
    dark_count_rate_hz: float
    bin_width_s: float
    duration_s: float


@dataclass(frozen=True)
class AnalysisConfig:
    input_window_s: tuple
    retrieval_window_s: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    notes: str
    seed: int
    trials: int
    source: SourceConfig
    grid: GridConfig
    memory: MemoryConfig
    sorter: SorterConfig
    detector: DetectorConfig
    analysis: AnalysisConfig
    dt_s: float


def _parse_target(raw, path: str) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path} must be a non-empty array of mode terms")
    terms = []
    for i, item in enumerate(raw):
        tp = f"{path}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{tp} must be an object with p, l, amp")
        item = dict(item)
        p = _take(item, "p", tp, kind=int, check=_non_negative)
        l = _take(item, "l", tp, kind=int)
        amp_raw = _take(item, "amp", tp, default=1.0)
        if isinstance(amp_raw, (int, float)) and not isinstance(amp_raw, bool):
            amp = complex(float(amp_raw), 0.0)
        elif (
            isinstance(amp_raw, list)
            and len(amp_raw) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in amp_raw)
        ):
            amp = complex(float(amp_raw[0]), float(amp_raw[1]))
        else:
            raise ConfigError(f"{tp}.amp must be a number or [re, im] pair")
        _done(item, tp)
        if amp == 0:
            raise ConfigError(f"{tp}.amp must be nonzero")
        terms.append((p, l, amp))
    return tuple(terms)


def _parse_window(raw, path: str, default: tuple) -> tuple:
    if raw is _REQUIRED or raw is None:
        return default
    if (
        not isinstance(raw, list)
        or len(raw) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw)
    ):
        raise ConfigError(f"{path} must be a [t_start, t_stop] pair of numbers")
    a, b = float(raw[0]), float(raw[1])
    if not a < b:
        raise ConfigError(f"{path} must satisfy t_start < t_stop")
    return (a, b)


def _parse_arm(raw: dict, path: str) -> ArmConfig:
    arm = ArmConfig(
        l_shift=_take(raw, "l_shift", path, kind=int),
        diffraction_efficiency=_take(
            raw, "diffraction_efficiency", path, default=0.9, kind=float, check=_fraction
        ),
        crosstalk_floor=_take(
            raw, "crosstalk_floor", path, default=0.0, kind=float, check=_non_negative
        ),
        acceptance=_take(raw, "acceptance", path, default=1.0, kind=float, check=_fraction),
    )
    _done(raw, path)
    return arm


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a raw JSON object into an ExperimentConfig."""
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    d = dict(data)

    name = _take(d, "name", "", kind=str, check=lambda s: bool(s))
    notes = _take(d, "notes", "", default="", kind=str)
    seed = _take(d, "seed", "", default=12345, kind=int, check=_non_negative)
    trials = _take(d, "trials", "", default=100000, kind=int, check=_positive)

    s = dict(_take(d, "source", "", kind=dict))
    source = SourceConfig(
        target=_parse_target(_take(s, "target", "source"), "source.target"),
        phase_only=_take(s, "phase_only", "source", default=True, kind=bool),
        mean_photons=_take(s, "mean_photons", "source", default=0.6, kind=float, check=_positive),
        waist_m=_take(s, "waist_m", "source", kind=float, check=_positive),
        pulse_fwhm_s=_take(s, "pulse_fwhm_s", "source", default=5e-7, kind=float, check=_positive),
        pulse_peak_s=_take(s, "pulse_peak_s", "source", default=1.5e-6, kind=float, check=_positive),
    )
    _done(s, "source")

    g = _take(d, "grid", "", default={}, kind=dict)
    g = dict(g)
    grid = GridConfig(
        n_radial=_take(g, "n_radial", "grid", default=128, kind=int, check=lambda v: v >= 16),
        n_azimuthal=_take(
            g, "n_azimuthal", "grid", default=64, kind=int, check=lambda v: v >= 8 and v % 2 == 0
        ),
        extent_waists=_take(
            g, "extent_waists", "grid", default=7.0, kind=float, check=lambda v: v >= 3.0
        ),
    )
    _done(g, "grid")

    m = dict(_take(d, "memory", "", kind=dict))
    memory = MemoryConfig(
        enabled=_take(m, "enabled", "memory", default=True, kind=bool),
        optical_depth=_take(m, "optical_depth", "memory", default=15.0, kind=float, check=_positive),
        gamma_rad_s=_take(
            m, "gamma_rad_s", "memory", default=2 * math.pi * 5.2e6, kind=float, check=_positive
        ),
        gamma_s_rad_s=_take(
            m, "gamma_s_rad_s", "memory", default=0.0, kind=float, check=_non_negative
        ),
        length_m=_take(m, "length_m", "memory", default=3e-3, kind=float, check=_positive),
        control_waist_m=_take(m, "control_waist_m", "memory", kind=float, check=_positive),
        omega0_rad_s=_take(
            m, "omega0_rad_s", "memory", default=2 * math.pi * 3e6, kind=float, check=_positive
        ),
        off_time_s=_take(m, "off_time_s", "memory", default=1.55e-6, kind=float, check=_positive),
        on_time_s=_take(m, "on_time_s", "memory", default=2.55e-6, kind=float, check=_positive),
        switch_duration_s=_take(
            m, "switch_duration_s", "memory", default=1e-7, kind=float, check=_positive
        ),
        switch_shape=_take(
            m, "switch_shape", "memory", default="smooth_step", kind=str,
            check=lambda v: v in ("smooth_step", "linear"),
        ),
        n_shells=_take(m, "n_shells", "memory", default=8, kind=int, check=_positive),
        n_z=_take(m, "n_z", "memory", default=200, kind=int, check=lambda v: v >= 16),
        control_leak_photon_rate_hz=_take(
            m, "control_leak_photon_rate_hz", "memory", default=0.0, kind=float,
            check=_non_negative,
        ),
        control_suppression_db=_take(
            m, "control_suppression_db", "memory", default=0.0, kind=float, check=_non_negative
        ),
    )
    _done(m, "memory")

    so = dict(_take(d, "sorter", "", kind=dict))
    sorter = SorterConfig(
        fiber_waist_m=_take(so, "fiber_waist_m", "sorter", kind=float, check=_positive),
        plus=_parse_arm(dict(_take(so, "plus", "sorter", kind=dict)), "sorter.plus"),
        minus=_parse_arm(dict(_take(so, "minus", "sorter", kind=dict)), "sorter.minus"),
    )
    _done(so, "sorter")

    de = _take(d, "detector", "", default={}, kind=dict)
    de = dict(de)
    detector = DetectorConfig(
        quantum_efficiency=_take(
            de, "quantum_efficiency", "detector", default=0.5, kind=float, check=_fraction
        ),
        dark_count_rate_hz=_take(
            de, "dark_count_rate_hz", "detector", default=100.0, kind=float, check=_non_negative
        ),
        bin_width_s=_take(de, "bin_width_s", "detector", default=1e-8, kind=float, check=_positive),
        duration_s=_take(de, "duration_s", "detector", default=4.6e-6, kind=float, check=_positive),
    )
    _done(de, "detector")

    an = _take(d, "analysis", "", default={}, kind=dict)
    an = dict(an)
    default_input = (source.pulse_peak_s - 1.0e-6, source.pulse_peak_s + 0.6e-6)
    default_ret = (memory.on_time_s, memory.on_time_s + 2.0e-6)
    analysis = AnalysisConfig(
        input_window_s=_parse_window(
            _take(an, "input_window_s", "analysis", default=None), "analysis.input_window_s",
            default_input,
        ),
        retrieval_window_s=_parse_window(
            _take(an, "retrieval_window_s", "analysis", default=None),
            "analysis.retrieval_window_s", default_ret,
        ),
    )
    _done(an, "analysis")

    sa = _take(d, "sampling", "", default={}, kind=dict)
    sa = dict(sa)
    dt_s = _take(sa, "dt_s", "sampling", default=2e-9, kind=float, check=_positive)
    _done(sa, "sampling")

    _done(d, "")

    cfg = ExperimentConfig(
        name=name, notes=notes, seed=seed, trials=trials, source=source, grid=grid,
        memory=memory, sorter=sorter, detector=detector, analysis=analysis, dt_s=dt_s,
    )
    _check_consistency(cfg)
    return cfg


def _check_consistency(cfg: ExperimentConfig) -> None:
    m, det = cfg.memory, cfg.detector
    if m.off_time_s + m.switch_duration_s > m.on_time_s:
        raise ConfigError("memory: switch-off must finish before on_time_s")
    if m.control_waist_m < cfg.source.waist_m:
        raise ConfigError("memory.control_waist_m must cover the signal waist")
    ratio = det.bin_width_s / cfg.dt_s
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigError("detector.bin_width_s must be an integer multiple of sampling.dt_s")
    n_bins = det.duration_s / det.bin_width_s
    if abs(n_bins - round(n_bins)) > 1e-9 or round(n_bins) < 1:
        raise ConfigError("detector.duration_s must be an integer multiple of bin_width_s")
    if m.enabled and m.on_time_s >= det.duration_s:
        raise ConfigError("memory.on_time_s lies outside the detection duration")
    for label, (a, b) in (
        ("analysis.input_window_s", cfg.analysis.input_window_s),
        ("analysis.retrieval_window_s", cfg.analysis.retrieval_window_s),
    ):
        if a < 0 or b > det.duration_s + 1e-12:
            raise ConfigError(f"{label} must lie inside [0, detector.duration_s]")
    if cfg.source.pulse_peak_s >= m.off_time_s + m.switch_duration_s and m.enabled:
        raise ConfigError("source.pulse_peak_s must precede the end of the control switch-off")


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Fully explicit nested dict; parse_config(resolved_dict(c)) == c."""
    return {
        "name": cfg.name,
        "notes": cfg.notes,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "source": {
            "target": [
                {"p": p, "l": l, "amp": [amp.real, amp.imag]} for p, l, amp in cfg.source.target
            ],
            "phase_only": cfg.source.phase_only,
            "mean_photons": cfg.source.mean_photons,
            "waist_m": cfg.source.waist_m,
            "pulse_fwhm_s": cfg.source.pulse_fwhm_s,
            "pulse_peak_s": cfg.source.pulse_peak_s,
        },
        "grid": {
            "n_radial": cfg.grid.n_radial,
            "n_azimuthal": cfg.grid.n_azimuthal,
            "extent_waists": cfg.grid.extent_waists,
        },
        "memory": {
            "enabled": cfg.memory.enabled,
            "optical_depth": cfg.memory.optical_depth,
            "gamma_rad_s": cfg.memory.gamma_rad_s,
            "gamma_s_rad_s": cfg.memory.gamma_s_rad_s,
            "length_m": cfg.memory.length_m,
            "control_waist_m": cfg.memory.control_waist_m,
            "omega0_rad_s": cfg.memory.omega0_rad_s,
            "off_time_s": cfg.memory.off_time_s,
            "on_time_s": cfg.memory.on_time_s,
            "switch_duration_s": cfg.memory.switch_duration_s,
            "switch_shape": cfg.memory.switch_shape,
            "n_shells": cfg.memory.n_shells,
            "n_z": cfg.memory.n_z,
            "control_leak_photon_rate_hz": cfg.memory.control_leak_photon_rate_hz,
            "control_suppression_db": cfg.memory.control_suppression_db,
        },
        "sorter": {
            "fiber_waist_m": cfg.sorter.fiber_waist_m,
            "plus": _arm_dict(cfg.sorter.plus),
            "minus": _arm_dict(cfg.sorter.minus),
        },
        "detector": {
            "quantum_efficiency": cfg.detector.quantum_efficiency,
            "dark_count_rate_hz": cfg.detector.dark_count_rate_hz,
            "bin_width_s": cfg.detector.bin_width_s,
            "duration_s": cfg.detector.duration_s,
        },
        "analysis": {
            "input_window_s": list(cfg.analysis.input_window_s),
            "retrieval_window_s": list(cfg.analysis.retrieval_window_s),
        },
        "sampling": {"dt_s": cfg.dt_s},
    }


def _arm_dict(arm: ArmConfig) -> dict:
    return {
        "l_shift": arm.l_shift,
        "diffraction_efficiency": arm.diffraction_efficiency,
        "crosstalk_floor": arm.crosstalk_floor,
        "acceptance": arm.acceptance,
    }


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(resolved_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def set_by_path(data: dict, dotted: str, value) -> dict:
    """Copy of a raw config dict with one dotted path replaced."""
    keys = dotted.split(".")
    out = json.loads(json.dumps(data))
    node = out
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"sweep parameter path {dotted!r} does not exist")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep parameter path {dotted!r} does not exist")
    node[keys[-1]] = value
    return out


def builtin_names() -> list:
    pkg = resources.files("oamem.configs")
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_config(name_or_path: str) -> ExperimentConfig:
    """Load a config from a file path or a built-in name."""
    raw = load_raw(name_or_path)
    return parse_config(raw)


def load_raw(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.exists():
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{name_or_path}: not valid JSON ({exc})") from exc
    name = name_or_path[:-5] if name_or_path.endswith(".json") else name_or_path
    pkg = resources.files("oamem.configs")
    candidate = pkg / f"{name}.json"
    if candidate.is_file():
        try:
            return json.loads(candidate.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"built-in {name!r}: not valid JSON ({exc})") from exc
    if "/" in name_or_path or name_or_path.endswith(".json"):
        raise FileNotFoundError(f"config file not found: {name_or_path}")
    raise ConfigError(
        f"config {name_or_path!r} is neither a readable file nor a built-in "
        f"(built-ins: {', '.join(builtin_names())})"
    )
