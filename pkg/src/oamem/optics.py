"""Passive optics between source, memory, and detectors.

Elements: blazed fork hologram (winding shift by +-1, first order only),
50/50 beam splitter, single-mode-fiber projector, and scalar broadband
attenuation. All operations are pure functions over immutable values.

A channel is a weak coherent state: splitting and lossy elements act on the
mean photon number multiplicatively, and the transverse mode content rides
along as LG coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import modes
from .modes import ModeCoefficients, ModeIndex, TransverseField

__all__ = [
    "ForkHologram",
    "FiberProjector",
    "ChannelState",
    "apply_fork",
    "apply_radial_acceptance",
    "fiber_couple",
    "beam_split",
    "attenuate",
]


@dataclass(frozen=True)
class ForkHologram:
    """First-order blazed fork: multiplies the field by exp(i l_shift theta).

    Power not diffracted into the first order is a scalar loss
    (1 - diffraction_efficiency); other orders are not tracked.
    """

    l_shift: int
    diffraction_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.diffraction_efficiency <= 1.0):
            raise ValueError(
                f"diffraction efficiency must be in [0, 1], got {self.diffraction_efficiency}"
            )


@dataclass(frozen=True)
class FiberProjector:
    """Single-mode fiber: accepts the fundamental Gaussian at mode_waist.

    crosstalk_floor is the residual power acceptance of modes orthogonal to
    the fiber mode (a phenomenological per-path calibration constant;
    0 is the ideal discriminator).
    """

    mode_waist: float
    crosstalk_floor: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mode_waist) and self.mode_waist > 0):
            raise ValueError(f"fiber mode waist must be positive, got {self.mode_waist}")
        if self.crosstalk_floor < 0:
            raise ValueError(f"crosstalk floor must be >= 0, got {self.crosstalk_floor}")


@dataclass(frozen=True)
class ChannelState:
    """Weak coherent state on one optical path.

    envelope_scale accumulates power transmissions along the path;
    mean_photons = source photons times that product. ``field`` is the
    exact sampled amplitude; ``coefficients`` is its truncated LG view.
    Elements transform the field and re-derive the view, so chained
    unit-modulus masks compose exactly instead of through the truncation.
    """

    coefficients: ModeCoefficients
    envelope_scale: float = 1.0
    mean_photons: float = 0.0
    field: TransverseField | None = None


def channel_field(state: ChannelState) -> TransverseField:
    """The channel's sampled field, rendering the coefficients if needed."""
    if state.field is not None:
        return state.field
    return modes.render(state.coefficients, modes.grid_for_waist(state.coefficients.waist))


def apply_fork(state: ChannelState, holo: ForkHologram,
               p_max: int = 8, l_max: int = 5) -> ChannelState:
    """Send the channel through a fork hologram.

    The field is rendered, multiplied by the unit-modulus helical phase, and
    re-decomposed: each LG_p^l redistributes over radial orders at winding
    l + l_shift (the radial profile itself is unchanged). Total power is
    multiplied by the diffraction efficiency.

    mean_photons tracks the physical power exactly; the coefficient set can
    hold slightly less because the shifted radial profile has a small tail
    beyond p_max (about 5e-4 for a p=0 doughnut at p_max=8).
    """
    coeffs = state.coefficients
    # ignore numerical dust when checking which windings are occupied
    scale = math.sqrt(coeffs.power()) or 1.0
    occupied = {m.l for m, c in coeffs.entries.items() if abs(c) > 1e-12 * scale}
    if any(abs(l + holo.l_shift) > l_max for l in occupied):
        raise ValueError(
            f"fork shift {holo.l_shift} pushes a winding outside |l| <= {l_max}"
        )
    fld = channel_field(state)
    eta = holo.diffraction_efficiency
    shifted = TransverseField(
        waist=fld.waist,
        grid=fld.grid,
        values=fld.values
        * np.exp(1j * holo.l_shift * fld.grid.theta)[None, :]
        * math.sqrt(eta),
    )
    out = modes.decompose(shifted, p_max=p_max, l_max=l_max)
    return ChannelState(
        coefficients=out,
        envelope_scale=state.envelope_scale * eta,
        mean_photons=state.mean_photons * eta,
        field=shifted,
    )


def apply_radial_acceptance(state: ChannelState, acceptance) -> ChannelState:
    """Scale winding-0 radial components by per-p power acceptances.

    Models the measured asymmetry of the two discriminators for higher
    radial orders; acceptance[p] is a power fraction in [0, 1], applied
    before fiber coupling. Winding-0 content beyond the listed radial
    orders (including the out-of-basis tail) is left untouched. The lost
    power comes off mean_photons.
    """
    acceptance = np.asarray(acceptance, dtype=float)
    if acceptance.ndim != 1 or np.any(acceptance < 0) or np.any(acceptance > 1):
        raise ValueError("radial acceptance must be a 1D vector of fractions in [0, 1]")
    fld = channel_field(state)
    grid = fld.grid
    waist = state.coefficients.waist
    power_before = modes.power(fld)
    # winding-0 azimuthal component and its scaled in-basis part
    flat = np.mean(fld.values, axis=1)  # exact winding-0 amplitude on uniform nodes
    rw = grid.r * grid.r_weight * 2.0 * math.pi
    correction = np.zeros_like(flat)
    entries = dict(state.coefficients.entries)
    for p in range(acceptance.size):
        radial = modes.lg_radial(p, 0, waist, grid.r)
        c = complex(np.dot(radial, flat * rw))
        correction += (math.sqrt(acceptance[p]) - 1.0) * c * radial
        key = ModeIndex(p, 0)
        if key in entries:
            entries[key] = entries[key] * math.sqrt(acceptance[p])
    new_values = fld.values + correction[:, None]
    new_field = TransverseField(waist=fld.waist, grid=grid, values=new_values)
    power_after = modes.power(new_field)
    ratio = power_after / power_before if power_before > 0 else 1.0
    return ChannelState(
        coefficients=ModeCoefficients(waist=waist, entries=entries),
        envelope_scale=state.envelope_scale * ratio,
        mean_photons=state.mean_photons * ratio,
        field=new_field,
    )


def fiber_couple(state: ChannelState, fiber: FiberProjector) -> float:
    """Power fraction of the channel accepted by the single-mode fiber.

    Returns (|<TEM00|field>|^2 + eps * orthogonal power) / power(field),
    where TEM00 is the fiber mode at its own waist evaluated on the field
    grid. Zero-power fields couple 0. The caller multiplies the channel's
    mean photon number by the returned fraction.
    """
    fld = channel_field(state)
    grid = fld.grid
    total = modes.power(fld)
    if total <= 0.0:
        return 0.0
    fiber_mode = TransverseField(
        waist=fiber.mode_waist,
        grid=grid,
        values=np.outer(
            modes.lg_radial(0, 0, fiber.mode_waist, grid.r), np.ones(grid.n_azimuthal)
        ),
    )
    matched = abs(modes.overlap(fiber_mode, fld)) ** 2
    matched = min(matched, total)
    coupled = matched + fiber.crosstalk_floor * (total - matched)
    return float(coupled / total)


def beam_split(state: ChannelState) -> tuple:
    """50/50 split of a weak coherent state into two independent channels."""
    half = replace(state, mean_photons=state.mean_photons / 2.0,
                   envelope_scale=state.envelope_scale / 2.0)
    return half, half


def attenuate(rate: float, attenuation_db: float) -> float:
    """Scalar power attenuation: rate * 10^(-dB/10)."""
    if attenuation_db < 0:
        raise ValueError(f"attenuation must be >= 0 dB, got {attenuation_db}")
    return rate * 10.0 ** (-attenuation_db / 10.0)
