"""
Doughnut-mode synthesis with a phase-only hologram
==================================================

A phase-only mask can imprint any target phase on a Gaussian beam, but it
cannot shape the amplitude. Diffracting into a single carrier order, the
first doughnut (one unit of winding) captures pi/4 of the light and the
rest spreads over a ladder of higher radial orders sharing that winding.

Run:  python3 demos/01_mode_synthesis.py
"""

import math
import os

import numpy as np

from oamem import modes

W = 0.4e-3  # beam waist [m]

# ---------------------------------------------------------------- doughnut
target = modes.ModeCoefficients.from_terms([(0, 1, 1.0)], W)
fld = modes.synthesize_slm(target, phase_only=True)

coeffs = modes.decompose(fld, p_max=8, l_max=3)
spectrum = modes.winding_spectrum(fld)

print("phase-only synthesis of the l=+1 doughnut")
print(f"  power in winding +1 : {spectrum[1]:.6f}")
print(f"  power elsewhere     : {sum(v for l, v in spectrum.items() if l != 1):.2e}")
print(f"  |c(p=0,l=1)|^2      : {abs(coeffs[(0, 1)]) ** 2:.6f}   (pi/4 = {math.pi / 4:.6f})")

# the radial ladder has a closed form: every p keeps winding +1
print("\n  p   measured    analytic")
cum = 0.0
for p in range(9):
    analytic = (math.pi / 4.0) * (math.comb(2 * p, p) / 4.0 ** p) ** 2 / (p + 1)
    measured = abs(coeffs[(p, 1)]) ** 2
    cum += analytic
    print(f"  {p}   {measured:.6f}    {analytic:.6f}")
print(f"  ladder cumulative through p=8: {cum:.4f} of total power")

# ------------------------------------------------------------- two-lobe mode
# equal +1/-1 superposition: the mask degenerates to a binary pi step
two_lobe = modes.ModeCoefficients.from_terms(
    [(0, 1, 1.0 / math.sqrt(2.0)), (0, -1, 1.0 / math.sqrt(2.0))], W
)
fld2 = modes.synthesize_slm(two_lobe, phase_only=True)
spec2 = modes.winding_spectrum(fld2)
c2 = modes.decompose(fld2, p_max=0, l_max=1)

print("\nphase-only synthesis of the two-lobe (cos theta) mode")
print(f"  winding +1 power    : {spec2[1]:.6f}")
print(f"  winding -1 power    : {spec2[-1]:.6f}")
print(f"  |c(0,+1)|^2         : {abs(c2[(0, 1)]) ** 2:.6f}   (1/pi = {1.0 / math.pi:.6f})")

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
    fig, axes = plt.subplots(2, 2, figsize=(8, 7), subplot_kw={"projection": "polar"})
    for col, (f, title) in enumerate([(fld, "doughnut l=+1"), (fld2, "two-lobe")]):
        th = np.append(f.grid.theta, f.grid.theta[0] + 2 * math.pi)
        rr, tt = np.meshgrid(f.grid.r, th, indexing="ij")
        vals = np.concatenate([f.values, f.values[:, :1]], axis=1)
        axes[0, col].pcolormesh(tt, rr / W, np.abs(vals) ** 2, shading="auto")
        axes[0, col].set_title(f"{title}: intensity")
        axes[1, col].pcolormesh(tt, rr / W, np.angle(vals), cmap="twilight", shading="auto")
        axes[1, col].set_title(f"{title}: phase")
    for ax in axes.ravel():
        ax.set_yticks([])
        ax.set_xticks([])
    path = os.path.join(out_dir, "mode_synthesis.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print(f"\nwrote {path}")
