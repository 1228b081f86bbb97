"""Command-line interface.

Subcommands:

* run        full experiment: sample both runs, write counts and metrics
* sweep      repeat the experiment over values of one dotted config path
* decompose  mode content of the synthesized source field
* validate   parse and cross-check a config without running anything

Configs are file paths or built-in names (fig2_lgplus, fig2_lgminus,
fig2_tem10). Output lands in --out, else $OAMEM_OUT_DIR, else the current
directory.

Exit codes: 0 success, 2 invalid configuration or usage, 3 numerical
failure in the solver, 4 filesystem/I-O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis as ana
from . import pipeline
from .config import (
    ConfigError,
    config_hash,
    load_raw,
    parse_config,
    set_by_path,
)
from .memory import NumericsError

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="config file path or built-in name")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--trials", type=int, default=None,
                        help="override the config trial count")
    common.add_argument("--out", default=None,
                        help="output directory (default: $OAMEM_OUT_DIR or .)")
    common.add_argument("--workers", type=int, default=1,
                        help="sampling threads; results do not depend on this")

    p = argparse.ArgumentParser(
        prog="oamem",
        description="stored-light mode-splitting experiment models",
    )
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one experiment")
    sw = sub.add_parser("sweep", parents=[common],
                        help="run the experiment for each value of one parameter")
    sw.add_argument("--param", required=True,
                    help="dotted config path, e.g. memory.gamma_s_rad_s")
    sw.add_argument("--values", required=True,
                    help="comma-separated JSON literals, e.g. 1e4,2e4,5e4")
    sub.add_parser("decompose", parents=[common],
                   help="print the mode content of the synthesized source")
    sub.add_parser("validate", parents=[common], help="check a config and exit")
    return p


def _out_dir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("OAMEM_OUT_DIR")
    return Path(env) if env else Path(".")


def _metric_lines(report: ana.MetricsReport) -> list:
    lines = []
    if report.efficiency:
        e = report.efficiency
        lines.append(f"  efficiency   {e['value']:.5f} +/- {e['err']:.5f} "
                     f"({e['retrieved_counts']}/{e['input_counts']} counts)")
    if report.distinction:
        d = report.distinction
        lines.append(f"  distinction  {d['db']:.3f} dB +/- {d['db_err']:.3f} "
                     f"(matched {d['matched_channel']}: {d['matched_counts']}, "
                     f"crossed: {d['crossed_counts']})")
    if report.imbalance:
        i = report.imbalance
        lines.append(f"  imbalance    {i['value']:+.5f} +/- {i['err']:.5f} "
                     f"(plus {i['plus']}, minus {i['minus']})")
    return lines


def _cmd_run(args) -> int:
    cfg = parse_config(load_raw(args.config))
    res = pipeline.run_experiment(
        cfg, seed=args.seed, trials=args.trials, workers=max(1, args.workers)
    )
    out = _out_dir(args)
    paths = ana.emit_report(res.report, res.histograms, out, stem=cfg.name)
    print(f"{cfg.name}  hash={res.config_hash[:12]}  seed={res.report.seed}  "
          f"trials={res.report.trials}")
    for line in _metric_lines(res.report):
        print(line)
    for p in paths:
        print(f"  wrote {p}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    raw = load_raw(args.config)
    base_cfg = parse_config(raw)
    try:
        values = [json.loads(v) for v in args.values.split(",") if v.strip()]
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--values entries must be JSON literals ({exc})") from exc
    if not values:
        raise ConfigError("--values is empty")
    parse_config(set_by_path(raw, args.param, values[0]))  # fail fast on bad path
    points = []
    for value, res in pipeline.sweep_values(
        raw, args.param, values,
        seed=args.seed, trials=args.trials, workers=max(1, args.workers),
    ):
        r = res.report
        point = {
            "value": value,
            "config_hash": res.config_hash,
            "efficiency": r.efficiency,
            "distinction": r.distinction,
            "imbalance": r.imbalance,
            "totals": r.totals,
        }
        points.append(point)
        eff = r.efficiency["value"] if r.efficiency else float("nan")
        db = r.distinction["db"] if r.distinction else float("nan")
        print(f"{args.param}={value}: efficiency={eff:.5f} distinction_db={db:.3f} "
              f"imbalance={r.imbalance['value']:+.5f}")
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{base_cfg.name}_sweep.json"
    payload = {
        "config": base_cfg.name,
        "base_hash": config_hash(base_cfg),
        "param": args.param,
        "seed": args.seed if args.seed is not None else base_cfg.seed,
        "trials": args.trials if args.trials is not None else base_cfg.trials,
        "points": points,
    }
    path.write_text(json.dumps(ana._json_safe(payload), sort_keys=True, indent=2) + "\n")
    print(f"  wrote {path}")
    return EXIT_OK


def _cmd_decompose(args) -> int:
    cfg = parse_config(load_raw(args.config))
    prep = pipeline.prepare(cfg)
    coeffs = prep.source_coefficients
    windings = coeffs.windings()
    p_values = sorted({m.p for m in coeffs.entries})
    print(f"{cfg.name}: source mode powers |c_pl|^2 "
          f"(waist {cfg.source.waist_m:g} m, total {coeffs.power():.6f})")
    header = "   p\\l " + "".join(f"{l:>10d}" for l in windings)
    print(header)
    rows = []
    for p in p_values:
        cells = [abs(coeffs[(p, l)]) ** 2 for l in windings]
        rows.append((p, cells))
        print(f"  {p:4d} " + "".join(f"{v:10.6f}" for v in cells))
    print("  winding totals: " + ", ".join(
        f"l={l}: {coeffs.winding_power(l):.6f}" for l in windings))
    if args.out is not None or os.environ.get("OAMEM_OUT_DIR"):
        out = _out_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{cfg.name}_modes.json"
        payload = {
            "config": cfg.name,
            "config_hash": config_hash(cfg),
            "waist_m": cfg.source.waist_m,
            "total_power": coeffs.power(),
            "powers": {
                f"{p},{l}": abs(coeffs[(p, l)]) ** 2 for p in p_values for l in windings
            },
            "winding_power": {str(l): coeffs.winding_power(l) for l in windings},
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        print(f"  wrote {path}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = parse_config(load_raw(args.config))
    # surface solver-level problems (step bound) without sampling anything
    from .memory import EnsembleParams, _stability_guard

    if cfg.memory.enabled:
        ens = EnsembleParams(
            optical_depth=cfg.memory.optical_depth,
            gamma=cfg.memory.gamma_rad_s,
            gamma_s=cfg.memory.gamma_s_rad_s,
            length=cfg.memory.length_m,
            control_waist=cfg.memory.control_waist_m,
            signal_waist=cfg.source.waist_m,
        )
        _stability_guard(ens, cfg.memory.omega0_rad_s, cfg.dt_s)
    print(f"ok: {cfg.name} (hash {config_hash(cfg)})")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "decompose": _cmd_decompose,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as exc:
        print(f"numerics error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
