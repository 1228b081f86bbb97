"""
Slow light, storage, and retrieval in a three-level ensemble
============================================================

With the control on, the medium is transparent but slow: a pulse inside
the transparency window exits delayed by d*Gamma/(4*Omega^2). Switching
the control off while the pulse is inside maps it onto a ground-state
coherence; switching back on replays it. Every photon of pulse energy is
accounted for: leak + decay losses + what is still stored.

Run:  python3 demos/02_slow_light_and_storage.py
"""

import math
import os

import numpy as np

from oamem import memory, modes

GAMMA = 2 * math.pi * 5.2e6
OMEGA0 = 2 * math.pi * 3e6
GAMMA_S = 2.48175607e5

ens = memory.EnsembleParams(
    optical_depth=15.0, gamma=GAMMA, gamma_s=GAMMA_S,
    length=3e-3, control_waist=1e-3, signal_waist=0.4e-3)

# ------------------------------------------------------------- group delay
tau_ideal = ens.optical_depth * GAMMA / (4.0 * OMEGA0 ** 2)
tau = memory.group_delay(ens, OMEGA0)
print("slow light with the control held on")
print(f"  ideal group delay d*Gamma/(4 Omega^2): {tau_ideal * 1e9:.1f} ns")
print(f"  with ground-state decoherence        : {tau * 1e9:.1f} ns")

# send a narrowband pulse through and measure the centroid delay
dt = 2e-9
sched_on = memory.ControlSchedule(omega0=OMEGA0, off_time=9.0e-6,
                                  on_time=12.0e-6, switch_duration=1e-7)
n = int(round(9.0e-6 / dt))
t = dt * np.arange(n)
env = np.exp(-((t - 3.0e-6) ** 2) / (2 * 0.6e-6 ** 2)).astype(complex)
pulse = memory.PulseEnvelope(dt=dt, samples=env)
leak, _ = memory.store(pulse, ens, sched_on)


def centroid(p):
    pw = np.abs(p.samples) ** 2
    return float(np.sum(p.times * pw) / np.sum(pw))


print(f"  measured centroid delay              : "
      f"{(centroid(leak) - centroid(pulse)) * 1e9:.1f} ns")

# ---------------------------------------------------------------- storage
# the half-gaussian pulse ends exactly when the control starts to close
sched = memory.ControlSchedule(omega0=OMEGA0, off_time=1.55e-6,
                               on_time=2.55e-6, switch_duration=1e-7)
pulse = memory.half_gaussian_pulse(dt, peak_time=1.5e-6, fwhm=0.5e-6,
                                   t_end=1.55e-6, energy=1.0)
fld = modes.render(modes.ModeCoefficients.from_terms([(0, 1, 1.0)], 0.4e-3))
mo = memory.run_memory(fld, pulse, ens, sched, t_end=4.6e-6,
                       n_shells=4, n_z=100)

st = mo.store_diagnostics
rt = mo.retrieve_diagnostics
print("\nstorage ledger (fractions of input pulse energy)")
print(f"  leaked past the medium   : {st['leak_energy'] / st['input_energy']:.4f}")
print(f"  optical decay            : {st['gamma_loss'] / st['input_energy']:.4f}")
print(f"  ground-state decay       : {st['gamma_s_loss'] / st['input_energy']:.4f}")
print(f"  left in optical coherence: {st['polarization_population'] / st['input_energy']:.4f}")
print(f"  stored in spin wave      : {st['spin_excitation'] / st['input_energy']:.4f}")
closure = (st['leak_energy'] + st['gamma_loss'] + st['gamma_s_loss']
           + st['polarization_population'] + st['spin_excitation'])
print(f"  ledger closure           : {closure / st['input_energy']:.6f}")

print("\nretrieval after a 0.9 us hold")
print(f"  retrieved / stored energy: {rt['retrieved_energy'] / rt['initial_excitation']:.4f}")
print(f"  retrieved / input energy : {rt['retrieved_energy'] / st['input_energy']:.4f}")

# ------------------------------------------------------------------- figure
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping figure")
else:
    out_dir = os.environ.get("OAMEM_OUT_DIR", "demos/out")
    os.makedirs(out_dir, exist_ok=True)
    tt = mo.times * 1e6
    p_in = np.zeros_like(tt)
    p_in[: pulse.samples.size] = np.abs(pulse.samples) ** 2
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(tt, p_in, label="input pulse")
    ax.plot(tt, mo.output_power(), label="medium output")
    ctrl = memory.control_profile(sched, mo.times)
    ax.plot(tt, ctrl * p_in.max(), "--", color="gray", label="control (scaled)")
    ax.set_xlabel("time [us]")
    ax.set_ylabel("power [1/s]")
    ax.legend()
    path = os.path.join(out_dir, "storage_timeline.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print(f"\nwrote {path}")
