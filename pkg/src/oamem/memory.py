"""Dynamic-EIT storage and retrieval in a three-level Lambda medium.

Model: one-dimensional Maxwell-Bloch equations in the co-moving frame,
both fields on resonance, signal treated perturbatively (linear optics),
control a classical drive Omega(t, r):

    dE/dz = i g P
    dP/dt = -(Gamma/2) P + i g E + i Omega S
    dS/dt = -gamma_s S + i Omega P

with the collective coupling g = sqrt(d Gamma / (4 L)) fixed by the
optical-depth convention |T|^2 = exp(-d) for the bare two-level medium.
The field follows the atoms adiabatically in the co-moving frame, so E is
reconstructed at every substep as E(z) = E_in + i g * integral_0^z P dz'.

Energy ledger (exact identity of the continuous model, tracked during
integration and closed to solver accuracy):

    in = out + polarization + spin excitation
         + Gamma * int int |P|^2 dz dt + 2 gamma_s * int int |S|^2 dz dt

The transverse intensity profile of the control enters through radial
shells: the signal's radial power distribution is split into contiguous
equal-power bands, each stored independently with its own constant
Omega(r_k) = Omega0 exp(-r_k^2 / w_c^2) taken at the band's power centroid.

Numerics: classic RK4 in time on (P, S) with the field recomputed at each
stage; trapezoid rule in z. Stability requires
dt * (Gamma/2 + Omega0 + d Gamma / 4) well below the RK4 limit of ~2.8;
the solver refuses to run outside that bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import modes
from .modes import TransverseField

__all__ = [
    "EnsembleParams",
    "ControlSchedule",
    "PulseEnvelope",
    "SpinWave",
    "ShellSpin",
    "RadialShells",
    "NumericsError",
    "half_gaussian_pulse",
    "pulse_energy",
    "control_profile",
    "transfer_function",
    "group_delay",
    "propagate_linear",
    "shells_for_field",
    "store",
    "hold",
    "retrieve",
    "run_memory",
    "MemoryOutput",
]


class NumericsError(RuntimeError):
    """The integrator cannot proceed (step-size bound or non-finite state)."""


@dataclass(frozen=True)
class EnsembleParams:
    """Atomic-medium parameters.

    optical_depth follows the convention |T|^2 = exp(-optical_depth) for
    the control-off resonant two-level medium. Rates are angular (rad/s).
    """

    optical_depth: float
    gamma: float
    gamma_s: float
    length: float
    control_waist: float
    signal_waist: float

    def __post_init__(self) -> None:
        if self.optical_depth <= 0:
            raise ValueError(f"optical depth must be > 0, got {self.optical_depth}")
        if self.gamma <= 0:
            raise ValueError(f"excited-state decay must be > 0, got {self.gamma}")
        if self.gamma_s < 0:
            raise ValueError(f"ground decoherence must be >= 0, got {self.gamma_s}")
        if self.length <= 0:
            raise ValueError(f"medium length must be > 0, got {self.length}")
        if not (self.control_waist >= self.signal_waist > 0):
            raise ValueError(
                "waists must satisfy control_waist >= signal_waist > 0, got "
                f"{self.control_waist}, {self.signal_waist}"
            )

    @property
    def coupling(self) -> float:
        """g = sqrt(d Gamma / 4 L)."""
        return math.sqrt(self.optical_depth * self.gamma / (4.0 * self.length))


@dataclass(frozen=True)
class ControlSchedule:
    """Control-field timing: constant Omega0, switch-off, hold, switch-on."""

    omega0: float
    off_time: float
    on_time: float
    switch_duration: float
    shape: str = "smooth_step"

    def __post_init__(self) -> None:
        if self.omega0 < 0:
            raise ValueError(f"peak Rabi frequency must be >= 0, got {self.omega0}")
        if self.switch_duration <= 0:
            raise ValueError(f"switch duration must be > 0, got {self.switch_duration}")
        if not self.off_time < self.on_time:
            raise ValueError("off_time must precede on_time")
        if self.off_time + self.switch_duration > self.on_time:
            raise ValueError("switch-off must complete before switch-on begins")
        if self.shape not in ("smooth_step", "linear"):
            raise ValueError(f"unknown switch shape {self.shape!r}")


def control_profile(schedule: ControlSchedule, t) -> np.ndarray:
    """Dimensionless control envelope s(t): 1, ramp to 0, 0, ramp to 1."""
    t = np.asarray(t, dtype=float)
    u_off = np.clip((t - schedule.off_time) / schedule.switch_duration, 0.0, 1.0)
    u_on = np.clip((t - schedule.on_time) / schedule.switch_duration, 0.0, 1.0)
    if schedule.shape == "smooth_step":
        u_off = u_off * u_off * (3.0 - 2.0 * u_off)
        u_on = u_on * u_on * (3.0 - 2.0 * u_on)
    return 1.0 - u_off + u_on


@dataclass(frozen=True)
class PulseEnvelope:
    """Complex slowly varying envelope sampled at fixed dt from t0.

    Normalization: sum |samples|^2 * dt is the pulse energy, equal to the
    mean photon number for a source pulse.
    """

    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.samples.ndim != 1:
            raise ValueError("envelope samples must be a 1D array")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)


def pulse_energy(pulse: PulseEnvelope) -> float:
    return pulse.energy()


def half_gaussian_pulse(
    dt: float,
    peak_time: float,
    fwhm: float,
    t_end: float,
    energy: float = 1.0,
    t0: float = 0.0,
) -> PulseEnvelope:
    """Rising Gaussian cut off at its peak.

    ``fwhm`` is the full width at half maximum of the underlying field
    Gaussian; the envelope is zero after ``peak_time``. Normalized to the
    requested energy (= mean photon number).
    """
    if fwhm <= 0 or energy < 0:
        raise ValueError("pulse width must be > 0 and energy >= 0")
    n = int(round((t_end - t0) / dt)) + 1
    if n < 2:
        raise ValueError("pulse window too short")
    t = t0 + dt * np.arange(n)
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    env = np.where(t <= peak_time, np.exp(-((t - peak_time) ** 2) / (2.0 * sigma * sigma)), 0.0)
    norm = np.sum(env * env) * dt
    if norm <= 0:
        raise ValueError("pulse peak lies outside the window")
    return PulseEnvelope(dt=dt, samples=env.astype(complex) * math.sqrt(energy / norm), t0=t0)


@dataclass(frozen=True)
class ShellSpin:
    """Frozen ground-state coherence of one radial shell (unit-input solve)."""

    z: np.ndarray
    S: np.ndarray
    weight: float
    radius: float
    leak: np.ndarray | None = None


@dataclass(frozen=True)
class SpinWave:
    shells: tuple
    stored_at: float
    dt: float
    diagnostics: dict

    def excitation(self) -> float:
        """Shell-weighted spin excitation integral sum_k w_k int |S_k|^2 dz."""
        total = 0.0
        for sh in self.shells:
            total += sh.weight * float(np.trapezoid(np.abs(sh.S) ** 2, sh.z))
        return total


@dataclass(frozen=True)
class RadialShells:
    """Contiguous equal-power radial bands of a grid: centroid radii, power
    weights, and the node-index bounds partitioning the radial axis."""

    radii: np.ndarray
    weights: np.ndarray
    bounds: np.ndarray

    @property
    def count(self) -> int:
        return self.radii.size

    @classmethod
    def single(cls, radius: float = 0.0) -> "RadialShells":
        return cls(radii=np.array([radius]), weights=np.array([1.0]),
                   bounds=np.array([0, 1]))


def shells_for_field(fld: TransverseField, n_shells: int) -> RadialShells:
    """Split the field's radial power profile into equal-power bands."""
    if n_shells < 1:
        raise ValueError("need at least one shell")
    rho = np.sum(np.abs(fld.values) ** 2, axis=1) * fld.grid.area_weights
    total = float(rho.sum())
    if total <= 0:
        raise ValueError("cannot shell a zero-power field")
    cum = np.cumsum(rho)
    cuts = np.searchsorted(cum, total * np.arange(1, n_shells) / n_shells, side="left") + 1
    bounds = np.unique(np.concatenate(([0], cuts, [rho.size])))
    radii, weights = [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        band = rho[a:b]
        w = float(band.sum())
        if w <= 0:
            # powerless band: fold into a zero-weight shell at its midpoint
            radii.append(float(fld.grid.r[(a + b) // 2]))
            weights.append(0.0)
            continue
        radii.append(float(np.dot(band, fld.grid.r[a:b]) / w))
        weights.append(w / total)
    return RadialShells(radii=np.array(radii), weights=np.array(weights),
                        bounds=np.asarray(bounds, dtype=int))


def transfer_function(ensemble: EnsembleParams, omega: float, delta):
    """Linear-response amplitude transmission T(delta) for constant control.

    T = exp(-g^2 L / D), D = Gamma/2 - i delta + Omega^2 / (gamma_s - i delta).
    At delta = 0, gamma_s = 0 (and Omega > 0) the dark state gives |T| = 1;
    at Omega = 0 this is the bare two-level line with |T(0)|^2 = exp(-d).
    """
    delta = np.asarray(delta, dtype=complex)
    g2l = ensemble.optical_depth * ensemble.gamma / 4.0
    if omega == 0.0:
        denom = ensemble.gamma / 2.0 - 1j * delta
        out = np.exp(-g2l / denom)
    else:
        ground = ensemble.gamma_s - 1j * delta
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ensemble.gamma / 2.0 - 1j * delta + omega * omega / ground
            out = np.where(ground == 0.0, 1.0 + 0.0j, np.exp(-g2l / denom))
    if out.ndim == 0:
        return complex(out)
    return out


def group_delay(ensemble: EnsembleParams, omega: float, h: float = 2.0 * math.pi * 100.0) -> float:
    """d(arg T)/d delta at delta = 0 by central difference."""
    tp = transfer_function(ensemble, omega, +h)
    tm = transfer_function(ensemble, omega, -h)
    return float(np.angle(tp / tm) / (2.0 * h))


def propagate_linear(pulse: PulseEnvelope, ensemble: EnsembleParams, omega: float) -> PulseEnvelope:
    """Frequency-domain propagation through the constant-control medium.

    Exact linear-response reference for the time-domain solver. The window
    is zero-padded so the delayed pulse cannot wrap around.
    """
    from scipy.fft import fft, ifft, next_fast_len

    n = pulse.samples.size
    tau = ensemble.optical_depth * ensemble.gamma / (4.0 * omega * omega) if omega > 0 else 0.0
    pad = int(math.ceil(8.0 * tau / pulse.dt)) + n
    m = next_fast_len(n + pad)
    buf = np.zeros(m, dtype=complex)
    buf[:n] = pulse.samples
    # sample convention e(t) = sum_k A_k exp(+i w_k t) means a component
    # exp(-i delta t) sits at delta = -w_k
    omega_fft = 2.0 * math.pi * np.fft.fftfreq(m, d=pulse.dt)
    trans = transfer_function(ensemble, omega, -omega_fft)
    out = ifft(fft(buf) * trans)
    return PulseEnvelope(dt=pulse.dt, samples=out, t0=pulse.t0)


def _stability_guard(ensemble: EnsembleParams, omega0: float, dt: float) -> None:
    rate = ensemble.gamma / 2.0 + omega0 + ensemble.optical_depth * ensemble.gamma / 4.0
    if dt * rate > 2.5:
        raise NumericsError(
            f"time step {dt:.3e} s too large for rates (dt * rate = {dt * rate:.2f}; "
            "the explicit RK4 stage bound is ~2.8)"
        )


def _mb_march(e_half, omega_half, ensemble, dt, P, S):
    """RK4 march of (P, S) over the window covered by the half-step arrays.

    e_half: (2n+1,) shared input field at half-step resolution.
    omega_half: (K, 2n+1) per-shell control Rabi at half-step resolution.
    P, S: (K, n_z) initial conditions, modified in place.
    Returns (output (K, n+1), ledger dict of per-shell accumulators).
    """
    K, n_z = P.shape
    n_steps = (e_half.size - 1) // 2
    g = ensemble.coupling
    gamma, gamma_s = ensemble.gamma, ensemble.gamma_s
    dz = ensemble.length / (n_z - 1)
    zw = np.full(n_z, dz)
    zw[0] = zw[-1] = dz / 2.0
    out = np.empty((K, n_steps + 1), dtype=complex)
    led = {
        "gamma_loss": np.zeros(K), "gamma_s_loss": np.zeros(K),
        "out_energy": np.zeros(K), "in_energy": 0.0,
    }
    bw = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)

    def field(P_arr, e_amp):
        mid = np.cumsum(0.5 * (P_arr[:, 1:] + P_arr[:, :-1]), axis=1) * dz
        E = np.empty_like(P_arr)
        E[:, 0] = e_amp
        E[:, 1:] = e_amp + 1j * g * mid
        return E

    def rhs(P_arr, S_arr, e_amp, om_col):
        E = field(P_arr, e_amp)
        dP = -(gamma / 2.0) * P_arr + 1j * g * E + 1j * om_col * S_arr
        dS = -gamma_s * S_arr + 1j * om_col * P_arr
        return dP, dS, E

    for n in range(n_steps):
        e0, em, e1 = e_half[2 * n], e_half[2 * n + 1], e_half[2 * n + 2]
        om0 = omega_half[:, 2 * n, None]
        omm = omega_half[:, 2 * n + 1, None]
        om1 = omega_half[:, 2 * n + 2, None]

        dP1, dS1, E1 = rhs(P, S, e0, om0)
        out[:, n] = E1[:, -1]
        P2, S2 = P + 0.5 * dt * dP1, S + 0.5 * dt * dS1
        dP2, dS2, E2 = rhs(P2, S2, em, omm)
        P3, S3 = P + 0.5 * dt * dP2, S + 0.5 * dt * dS2
        dP3, dS3, E3 = rhs(P3, S3, em, omm)
        P4, S4 = P + dt * dP3, S + dt * dS3
        dP4, dS4, E4 = rhs(P4, S4, e1, om1)

        # ledger quadrature with the same Butcher weights as the step itself
        for w, (Ps, Ss, Es, es) in zip(bw, ((P, S, E1, e0), (P2, S2, E2, em),
                                            (P3, S3, E3, em), (P4, S4, E4, e1))):
            led["gamma_loss"] += dt * w * gamma * ((np.abs(Ps) ** 2) @ zw)
            led["gamma_s_loss"] += dt * w * 2.0 * gamma_s * ((np.abs(Ss) ** 2) @ zw)
            led["out_energy"] += dt * w * np.abs(Es[:, -1]) ** 2
            led["in_energy"] += dt * w * abs(es) ** 2

        P += (dt / 6.0) * (dP1 + 2.0 * dP2 + 2.0 * dP3 + dP4)
        S += (dt / 6.0) * (dS1 + 2.0 * dS2 + 2.0 * dS3 + dS4)

    out[:, n_steps] = field(P, e_half[-1])[:, -1]
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(S)) and np.all(np.isfinite(out))):
        raise NumericsError("integration produced non-finite values")
    led["pol_population"] = (np.abs(P) ** 2) @ zw
    led["spin_excitation"] = (np.abs(S) ** 2) @ zw
    return out, led


def _to_half_grid(samples: np.ndarray) -> np.ndarray:
    half = np.empty(2 * samples.size - 1, dtype=samples.dtype)
    half[::2] = samples
    half[1::2] = 0.5 * (samples[:-1] + samples[1:])
    return half


def _shell_omegas(shells: RadialShells, ensemble: EnsembleParams, omega0: float) -> np.ndarray:
    return omega0 * np.exp(-(shells.radii ** 2) / ensemble.control_waist ** 2)


def _combine(envelopes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Power-faithful scalar envelope for a bundle of shell envelopes:
    magnitude from the weighted power sum, phase from the weighted mean."""
    power = np.einsum("k,kt->t", weights, np.abs(envelopes) ** 2)
    mean = np.einsum("k,kt->t", weights, envelopes)
    phase = np.where(np.abs(mean) > 0, mean / np.where(np.abs(mean) > 0, np.abs(mean), 1.0), 1.0)
    return np.sqrt(power) * phase


def store(
    pulse: PulseEnvelope,
    ensemble: EnsembleParams,
    schedule: ControlSchedule,
    shells: RadialShells | None = None,
    n_z: int = 200,
):
    """Integrate the storage stage and freeze the spin wave at switch-off.

    Runs from the start of the pulse window to off_time + switch_duration,
    one independent solve per radial shell (default: a single on-axis
    shell). Returns the transmitted/leaked envelope and the SpinWave; the
    per-shell leak envelopes ride along on the shells for reassembly.
    """
    if shells is None:
        shells = RadialShells.single()
    dt = pulse.dt
    _stability_guard(ensemble, schedule.omega0, dt)
    t_stop = schedule.off_time + schedule.switch_duration
    n_steps = int(round((t_stop - pulse.t0) / dt))
    if n_steps < 1:
        raise ValueError("switch-off precedes the pulse window")
    e = np.zeros(n_steps + 1, dtype=complex)
    take = min(pulse.samples.size, n_steps + 1)
    e[:take] = pulse.samples[:take]
    t_half = pulse.t0 + (dt / 2.0) * np.arange(2 * n_steps + 1)
    s_half = control_profile(schedule, t_half)
    omegas = _shell_omegas(shells, ensemble, schedule.omega0)
    omega_half = omegas[:, None] * s_half[None, :]

    K = shells.count
    z = np.linspace(0.0, ensemble.length, n_z)
    P = np.zeros((K, n_z), dtype=complex)
    S = np.zeros((K, n_z), dtype=complex)
    out, led = _mb_march(_to_half_grid(e), omega_half, ensemble, dt, P, S)

    w = shells.weights
    diagnostics = {
        "input_energy": float(led["in_energy"]),
        "leak_energy": float(np.dot(w, led["out_energy"])),
        "gamma_loss": float(np.dot(w, led["gamma_loss"])),
        "gamma_s_loss": float(np.dot(w, led["gamma_s_loss"])),
        "polarization_population": float(np.dot(w, led["pol_population"])),
        "spin_excitation": float(np.dot(w, led["spin_excitation"])),
    }
    shell_spins = tuple(
        ShellSpin(z=z, S=S[k].copy(), weight=float(w[k]), radius=float(shells.radii[k]),
                  leak=out[k].copy())
        for k in range(K)
    )
    leak = PulseEnvelope(dt=dt, samples=_combine(out, w), t0=pulse.t0)
    return leak, SpinWave(shells=shell_spins, stored_at=t_stop, dt=dt,
                          diagnostics=diagnostics)


def hold(sw: SpinWave, duration: float, gamma_s: float) -> SpinWave:
    """Uniform ground-coherence decay: S -> S exp(-gamma_s * duration)."""
    if duration < 0:
        raise ValueError(f"hold duration must be >= 0, got {duration}")
    factor = math.exp(-gamma_s * duration)
    shells = tuple(replace(sh, S=sh.S * factor) for sh in sw.shells)
    diag = dict(sw.diagnostics)
    diag["hold_decay_power_factor"] = diag.get("hold_decay_power_factor", 1.0) * factor ** 2
    return SpinWave(shells=shells, stored_at=sw.stored_at, dt=sw.dt, diagnostics=diag)


def retrieve(
    sw: SpinWave,
    ensemble: EnsembleParams,
    schedule: ControlSchedule,
    duration: float | None = None,
    n_z: int | None = None,
    per_shell: bool = False,
):
    """Switch the control back on and convert the spin wave to light.

    Integrates from on_time for ``duration`` (default: several group
    delays). The retrieved envelope carries t0 = on_time. With
    ``per_shell`` the (K, n) matrix of shell envelopes is also returned.
    """
    if schedule.on_time < sw.stored_at:
        raise ValueError("retrieval must start at or after the storage time")
    dt = sw.dt
    _stability_guard(ensemble, schedule.omega0, dt)
    if duration is None:
        tau = group_delay(ensemble, schedule.omega0) if schedule.omega0 > 0 else 0.0
        duration = max(2.0e-6, 10.0 * tau + 2.0 * schedule.switch_duration)
    n_steps = max(1, int(round(duration / dt)))
    K = len(sw.shells)
    n_z_eff = n_z if n_z is not None else sw.shells[0].z.size
    if any(sh.z.size != n_z_eff for sh in sw.shells):
        raise ValueError("all shells must share the z grid")
    z = sw.shells[0].z
    P = np.zeros((K, n_z_eff), dtype=complex)
    S = np.stack([sh.S for sh in sw.shells]).astype(complex)
    radii = np.array([sh.radius for sh in sw.shells])
    weights = np.array([sh.weight for sh in sw.shells])

    t_half = schedule.on_time + (dt / 2.0) * np.arange(2 * n_steps + 1)
    s_half = control_profile(schedule, t_half)
    omegas = schedule.omega0 * np.exp(-(radii ** 2) / ensemble.control_waist ** 2)
    omega_half = omegas[:, None] * s_half[None, :]
    e_half = np.zeros(2 * n_steps + 1, dtype=complex)

    initial_excitation = float(np.dot(weights, np.trapezoid(np.abs(S) ** 2, z, axis=1)))
    out, led = _mb_march(e_half, omega_half, ensemble, dt, P, S)
    diagnostics = {
        "initial_excitation": initial_excitation,
        "retrieved_energy": float(np.dot(weights, led["out_energy"])),
        "gamma_loss": float(np.dot(weights, led["gamma_loss"])),
        "gamma_s_loss": float(np.dot(weights, led["gamma_s_loss"])),
        "final_excitation": float(np.dot(weights, led["spin_excitation"]))
        + float(np.dot(weights, led["pol_population"])),
    }
    env = PulseEnvelope(dt=dt, samples=_combine(out, weights), t0=schedule.on_time)
    if per_shell:
        return env, out, diagnostics
    return env


@dataclass(frozen=True)
class MemoryOutput:
    """Time-resolved memory output: per-shell envelopes over the full window.

    shell_envelopes[k, i] is the output field of shell k at time
    t0 + i * dt, driven by the actual input pulse. The transverse profile
    at any instant is the input field with each radial band scaled by its
    shell envelope.
    """

    t0: float
    dt: float
    shell_envelopes: np.ndarray
    shells: RadialShells
    input_field: TransverseField
    input_energy: float
    store_diagnostics: dict
    retrieve_diagnostics: dict

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.shell_envelopes.shape[1])

    def output_power(self) -> np.ndarray:
        """Total output power density vs time (shell-weighted)."""
        return np.einsum("k,kt->t", self.shells.weights, np.abs(self.shell_envelopes) ** 2)

    def field_at(self, index: int) -> TransverseField:
        """Transverse output field at time-sample ``index``."""
        scale = np.empty(self.input_field.grid.n_radial, dtype=complex)
        b = self.shells.bounds
        for k in range(self.shells.count):
            scale[b[k]:b[k + 1]] = self.shell_envelopes[k, index]
        return TransverseField(
            waist=self.input_field.waist,
            grid=self.input_field.grid,
            values=self.input_field.values * scale[:, None],
        )

    def energy_in(self, t_start: float, t_stop: float) -> float:
        """Output energy inside [t_start, t_stop)."""
        t = self.times
        sel = (t >= t_start) & (t < t_stop)
        return float(np.sum(self.output_power()[sel]) * self.dt)


def run_memory(
    state_or_field,
    pulse: PulseEnvelope,
    ensemble: EnsembleParams,
    schedule: ControlSchedule,
    t_end: float | None = None,
    n_shells: int = 8,
    n_z: int = 200,
) -> MemoryOutput:
    """Store, hold, and retrieve the full transverse mode.

    The input transverse power distribution is split into radial shells,
    each shell's temporal envelope is propagated independently (the model
    is azimuthally symmetric, so winding content is conserved exactly),
    and the output is reassembled per time sample.
    """
    fld = state_or_field
    if not isinstance(fld, TransverseField):
        fld = getattr(state_or_field, "field", None)
        if fld is None:
            fld = modes.render(
                state_or_field.coefficients,
                modes.grid_for_waist(state_or_field.coefficients.waist),
            )
    if abs(fld.waist - ensemble.signal_waist) > 1e-9 * ensemble.signal_waist:
        raise ValueError(
            f"field waist {fld.waist} does not match ensemble signal waist "
            f"{ensemble.signal_waist}"
        )
    shells = shells_for_field(fld, n_shells)
    dt = pulse.dt
    if t_end is None:
        t_end = schedule.on_time + 2.5e-6
    n_total = int(round((t_end - pulse.t0) / dt)) + 1

    leak, sw = store(pulse, ensemble, schedule, shells=shells, n_z=n_z)
    held = hold(sw, schedule.on_time - sw.stored_at, ensemble.gamma_s)
    ret_duration = t_end - schedule.on_time
    _, ret_shells, ret_diag = retrieve(
        held, ensemble, schedule, duration=ret_duration, per_shell=True
    )

    K = shells.count
    env = np.zeros((K, n_total), dtype=complex)
    leak_mat = np.stack([sh.leak for sh in sw.shells])
    n_leak = min(leak_mat.shape[1], n_total)
    env[:, :n_leak] = leak_mat[:, :n_leak]
    on_idx = int(round((schedule.on_time - pulse.t0) / dt))
    n_ret = min(ret_shells.shape[1], n_total - on_idx)
    if on_idx >= 0 and n_ret > 0:
        env[:, on_idx:on_idx + n_ret] = ret_shells[:, :n_ret]

    return MemoryOutput(
        t0=pulse.t0,
        dt=dt,
        shell_envelopes=env,
        shells=shells,
        input_field=fld,
        input_energy=pulse.energy(),
        store_diagnostics=sw.diagnostics,
        retrieve_diagnostics=ret_diag,
    )
