"""
Memory lifetime sweep
=====================

Ground-state decoherence is the knob that separates "slow" from
"stored": the longer the spin wave must survive, the more the retrieval
pays for it. Sweeping gamma_s at reduced resolution and trials shows
the end-to-end efficiency falling while the channel distinction holds.

Equivalent CLI:
  oamem sweep --config <file> --param memory.gamma_s_rad_s \
      --values 0,125000,250000,500000,1000000 --trials 20000

Run:  python3 demos/04_parameter_sweep.py
"""

from oamem import config, pipeline

raw = config.load_raw("fig2_lgplus")
# shrink the transverse grid and solver for a quick scan
for path, v in [
    ("grid.n_radial", 64), ("grid.n_azimuthal", 32),
    ("memory.n_shells", 4), ("memory.n_z", 80),
    ("sampling.dt_s", 5e-9),
]:
    raw = config.set_by_path(raw, path, v)

values = [0.0, 1.25e5, 2.5e5, 5.0e5, 1.0e6]
print("gamma_s [rad/s]   efficiency          distinction [dB]")
for v, res in pipeline.sweep_values(raw, "memory.gamma_s_rad_s", values,
                                    trials=20000):
    eff = res.report.efficiency
    dist = res.report.distinction
    print(f"  {v:>12.3g}    {eff['value']:.4f} +/- {eff['err']:.4f}   "
          f"{dist['db']:6.2f} +/- {dist['db_err']:.2f}")
print("\nthe hold decay exp(-2 gamma_s t_hold) dominates the falloff; decoherence")
print("also narrows the transparency window during store and retrieve. the")
print("distinction drops only as the retrieved light sinks toward the leak floor.")
