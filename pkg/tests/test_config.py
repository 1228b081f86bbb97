"""Config parsing, resolution round trip, hashing, sweep path edits."""

import json

import pytest

from oamem import config
from oamem.config import ConfigError


def deep_set(raw, dotted, value):
    node = raw
    keys = dotted.split(".")
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def minimal_raw(**overrides):
    raw = {
        "name": "unit",
        "source": {"target": [{"p": 0, "l": 1}], "waist_m": 4e-4},
        "memory": {"control_waist_m": 1e-3},
        "sorter": {
            "fiber_waist_m": 4e-4,
            "plus": {"l_shift": -1},
            "minus": {"l_shift": 1},
        },
    }
    for dotted, value in overrides.items():
        deep_set(raw, dotted, value)
    return raw


def test_minimal_config_gets_defaults():
    cfg = config.parse_config(minimal_raw())
    assert cfg.seed == 12345
    assert cfg.trials == 100000
    assert cfg.source.phase_only is True
    assert cfg.source.mean_photons == 0.6
    assert cfg.grid.n_radial == 128
    assert cfg.detector.quantum_efficiency == 0.5
    assert cfg.detector.dark_count_rate_hz == 100.0
    assert cfg.dt_s == 2e-9
    # windows default relative to pulse peak and switch-on
    assert cfg.analysis.input_window_s == pytest.approx((0.5e-6, 2.1e-6))
    assert cfg.analysis.retrieval_window_s == pytest.approx((2.55e-6, 4.55e-6))
    assert cfg.source.target == ((0, 1, 1 + 0j),)


def test_parse_does_not_consume_the_input():
    raw = minimal_raw()
    snapshot = json.loads(json.dumps(raw))
    config.parse_config(raw)
    assert raw == snapshot
    config.parse_config(raw)  # reparse of the same dict must still work


def test_builtin_configs_parse():
    names = config.builtin_names()
    assert {"fig2_lgplus", "fig2_lgminus", "fig2_tem10"} <= set(names)
    for name in names:
        cfg = config.load_config(name)
        assert cfg.name == name
        assert cfg.memory.enabled


def test_resolved_round_trip():
    for name in config.builtin_names():
        cfg = config.load_config(name)
        again = config.parse_config(config.resolved_dict(cfg))
        assert again == cfg
    cfg = config.parse_config(minimal_raw())
    assert config.parse_config(config.resolved_dict(cfg)) == cfg


def test_hash_is_stable_and_sensitive():
    cfg = config.parse_config(minimal_raw())
    h1 = config.config_hash(cfg)
    h2 = config.config_hash(config.parse_config(minimal_raw()))
    assert h1 == h2 and len(h1) == 64
    bumped = config.parse_config(minimal_raw(seed=999))
    assert config.config_hash(bumped) != h1
    # defaults made explicit hash identically
    explicit = config.set_by_path(minimal_raw(), "source.waist_m", 4e-4)
    assert config.config_hash(config.parse_config(explicit)) == h1


def test_unknown_keys_are_rejected_with_path():
    raw = minimal_raw()
    raw["memory"]["typo_key"] = 1.0
    with pytest.raises(ConfigError, match="under memory: typo_key"):
        config.parse_config(raw)
    raw2 = minimal_raw()
    raw2["bogus"] = True
    with pytest.raises(ConfigError, match="bogus"):
        config.parse_config(raw2)


def test_type_errors_name_the_field():
    with pytest.raises(ConfigError, match="trials"):
        config.parse_config(minimal_raw(trials="many"))
    with pytest.raises(ConfigError, match="trials"):
        config.parse_config(minimal_raw(trials=0))
    # booleans are not integers
    with pytest.raises(ConfigError, match="seed"):
        config.parse_config(minimal_raw(seed=True))
    with pytest.raises(ConfigError, match="phase_only"):
        config.parse_config(minimal_raw(**{"source.phase_only": 1}))


def test_required_fields():
    raw = minimal_raw()
    del raw["source"]["waist_m"]
    with pytest.raises(ConfigError, match="source.waist_m"):
        config.parse_config(raw)
    raw2 = minimal_raw()
    del raw2["name"]
    with pytest.raises(ConfigError, match="name"):
        config.parse_config(raw2)
    raw3 = minimal_raw()
    del raw3["sorter"]["plus"]["l_shift"]
    with pytest.raises(ConfigError, match="sorter.plus.l_shift"):
        config.parse_config(raw3)


def test_target_amplitude_forms():
    raw = minimal_raw()
    raw["source"]["target"] = [
        {"p": 0, "l": 1, "amp": 0.5},
        {"p": 0, "l": -1, "amp": [0.0, 0.5]},
    ]
    cfg = config.parse_config(raw)
    assert cfg.source.target == ((0, 1, 0.5 + 0j), (0, -1, 0.5j))
    for bad in ([], [{"p": 0}], [{"p": 0, "l": 0, "amp": 0}],
                [{"p": 0, "l": 0, "amp": [1.0]}], [{"p": -1, "l": 0}],
                [{"p": 0, "l": 0, "extra": 1}]):
        raw = minimal_raw()
        raw["source"]["target"] = bad
        with pytest.raises(ConfigError):
            config.parse_config(raw)


def test_consistency_checks():
    with pytest.raises(ConfigError, match="switch-off"):
        config.parse_config(minimal_raw(**{"memory.on_time_s": 1.6e-6}))
    with pytest.raises(ConfigError, match="control_waist_m"):
        config.parse_config(minimal_raw(**{"memory.control_waist_m": 1e-4}))
    with pytest.raises(ConfigError, match="bin_width_s"):
        config.parse_config(minimal_raw(**{"detector.bin_width_s": 3e-9}))
    with pytest.raises(ConfigError, match="duration_s"):
        config.parse_config(minimal_raw(**{"detector.duration_s": 4.6005e-6}))
    with pytest.raises(ConfigError, match="outside the detection"):
        config.parse_config(minimal_raw(**{"detector.duration_s": 2.0e-6}))
    raw = minimal_raw()
    raw["analysis"] = {"retrieval_window_s": [2.55e-6, 9.9e-6]}
    with pytest.raises(ConfigError, match="retrieval_window_s"):
        config.parse_config(raw)
    with pytest.raises(ConfigError, match="pulse_peak_s"):
        config.parse_config(minimal_raw(**{"source.pulse_peak_s": 1.8e-6}))


def test_memory_leak_rate_projection():
    raw = minimal_raw(**{
        "memory.control_leak_photon_rate_hz": 1e11,
        "memory.control_suppression_db": 100.0,
    })
    cfg = config.parse_config(raw)
    assert cfg.memory.leak_rate_at_detector_hz == pytest.approx(10.0, rel=1e-12)
    assert config.parse_config(minimal_raw()).memory.leak_rate_at_detector_hz == 0.0


def test_set_by_path():
    raw = minimal_raw(**{"memory.optical_depth": 15.0})
    out = config.set_by_path(raw, "memory.optical_depth", 20.0)
    assert out["memory"]["optical_depth"] == 20.0
    assert raw["memory"]["optical_depth"] == 15.0  # deep copy, original intact
    # only existing keys can be swept; no silent key creation
    with pytest.raises(ConfigError, match="does not exist"):
        config.set_by_path(raw, "memory.zzz", 1.0)
    with pytest.raises(ConfigError, match="does not exist"):
        config.set_by_path(raw, "nonexistent.depth", 1.0)


def test_load_raw_precedence(tmp_path):
    # an existing file wins over built-in names
    path = tmp_path / "fig2_lgplus.json"
    raw = minimal_raw(name="local")
    path.write_text(json.dumps(raw))
    assert config.load_raw(str(path))["name"] == "local"
    assert config.load_raw("fig2_lgplus")["name"] == "fig2_lgplus"
    assert config.load_raw("fig2_lgplus.json")["name"] == "fig2_lgplus"
    with pytest.raises(FileNotFoundError):
        config.load_raw(str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError, match="built-ins"):
        config.load_raw("no_such_config")
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        config.load_raw(str(bad))


def test_golden_configs_share_the_apparatus():
    plus = config.resolved_dict(config.load_config("fig2_lgplus"))
    minus = config.resolved_dict(config.load_config("fig2_lgminus"))
    tem = config.resolved_dict(config.load_config("fig2_tem10"))
    for section in ("memory", "sorter", "detector", "grid", "sampling"):
        assert plus[section] == minus[section] == tem[section]
    assert plus["seed"] == minus["seed"] == tem["seed"]
    assert plus["trials"] == minus["trials"] == tem["trials"]
