"""Driven, damped two-level system in the bare basis.

Hamiltonian (hbar = 1), basis order (g, e)::

    H(t) = [[w_g - i g_g/2,   -mu E(t)      ],
            [-mu E(t),        w_e - i g_e/2 ]]

States carry exp(-i Phi) with Phi growing for positive energy, so a bare
level evolves as c(t) = c(0) exp(-i (phi_x + w_x t)).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .field import FieldLike, PulsedField, envelope_amplitude, evaluate_field, field_phasor, total_field_phase

NODE_EPS = 1e-8
RESOLUTION_LIMIT = 0.1


class UnderResolvedError(ValueError):
    """The time grid does not resolve the fastest phase rotation."""


class PhaseUnwrapError(RuntimeError):
    pass


class NodeError(ValueError):
    """Phase requested where the amplitude modulus is below the node threshold."""


@dataclass(frozen=True)
class TwoLevelSystem:
    omega_g: float = 0.0
    omega_e: float = 1.0
    dipole: float = 1.0
    gamma_g: float = 0.0
    gamma_e: float = 0.0
    phi_g: float = 0.0
    phi_e: float = 0.0

    def __post_init__(self):
        if self.gamma_g < 0 or self.gamma_e < 0:
            raise ValueError("damping rates must be >= 0")
        if not self.omega_e > self.omega_g:
            raise ValueError("require omega_e > omega_g")

    @property
    def transition_frequency(self) -> float:
        return self.omega_e - self.omega_g

    def detuning(self, carrier_frequency: float) -> float:
        """Delta = (w_e - w_g) - w."""
        return self.transition_frequency - carrier_frequency

    def bare_phase(self, level: str, t):
        if level == "g":
            return self.phi_g + self.omega_g * np.asarray(t)
        return self.phi_e + self.omega_e * np.asarray(t)


@dataclass(frozen=True)
class AmplitudeTrajectory:
    times: np.ndarray
    c_g: np.ndarray
    c_e: np.ndarray
    unwrapped_phase_g: np.ndarray
    unwrapped_phase_e: np.ndarray

    @property
    def populations(self) -> tuple[np.ndarray, np.ndarray]:
        return np.abs(self.c_g) ** 2, np.abs(self.c_e) ** 2

    @property
    def norm(self) -> np.ndarray:
        pg, pe = self.populations
        return pg + pe

    def amplitude(self, which: str) -> np.ndarray:
        return self.c_g if which == "g" else self.c_e


# --------------------------------------------------------------------------
# phase extraction

def unwrap_phase(c, reference: float | None = None, eps: float = NODE_EPS, jump_floor: float = 1e-3):
    """Continuous Phi from c = |c| exp(-i Phi).

    Samples with |c| < eps come back as NaN. ``reference`` pins the 2 pi
    branch of the first sample. A wrapped increment within 0.1 rad of pi
    between two samples that both carry appreciable modulus (above
    ``jump_floor * max|c|``) means the grid is too coarse to follow the
    phase and raises PhaseUnwrapError; near-node sign flips are exempt.
    """
    c = np.asarray(c, dtype=complex)
    mod = np.abs(c)
    raw = -np.angle(c)
    steps = np.diff(raw)
    wrapped = (steps + np.pi) % (2 * np.pi) - np.pi
    if c.size > 1:
        big = mod.max() * jump_floor
        solid = (mod[1:] > big) & (mod[:-1] > big)
        bad = solid & (np.abs(wrapped) > np.pi - 0.1)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise PhaseUnwrapError(f"phase jump of {wrapped[k]:.3f} rad between samples {k} and {k + 1}; "
                                   "grid under-resolves the phase rotation")
    phase = np.concatenate([[raw[0]], raw[0] + np.cumsum(wrapped)])
    if reference is not None:
        phase = phase + 2 * np.pi * np.round((reference - phase[0]) / (2 * np.pi))
    return np.where(mod < eps, np.nan, phase)


def extract_amplitude_phase(traj: AmplitudeTrajectory, which: str = "g", eps: float = NODE_EPS) -> np.ndarray:
    """Unwrapped Phi of the chosen amplitude; raises NodeError if it passes a node."""
    c = traj.amplitude(which)
    low = np.abs(c) < eps
    if np.any(low):
        raise NodeError(f"|c_{which}| < {eps} at t={traj.times[np.argmax(low)]}; phase undefined")
    ref = traj.unwrapped_phase_g[0] if which == "g" else traj.unwrapped_phase_e[0]
    return unwrap_phase(c, reference=ref if np.isfinite(ref) else None, eps=eps)


# --------------------------------------------------------------------------
# integrator

def _time_grid(t_span, dt):
    t0, t1 = map(float, t_span)
    n = int(round((t1 - t0) / dt))
    if n < 1:
        raise ValueError("t_span shorter than one step")
    if abs(t0 + n * dt - t1) > 1e-9 * max(1.0, abs(t1)):
        raise ValueError(f"dt={dt} does not divide the span {t_span}")
    return t0 + dt * np.arange(n + 1)


def resolution_product(system: TwoLevelSystem, field: FieldLike, times, dt) -> float:
    """dt * max(|w_g|, |w_e|, Omega_R, |Delta|) on the grid."""
    rabi = system.dipole * np.max(np.abs(envelope_amplitude(field, times)))
    carriers = [p.carrier_frequency for p in getattr(field, "pulses", (field,))]
    detuning = max(abs(system.detuning(w)) for w in carriers)
    return dt * max(abs(system.omega_g), abs(system.omega_e), rabi, detuning)


def _hamiltonians(system: TwoLevelSystem, field: FieldLike, t, rwa: bool):
    """H(t) as an (n, 2, 2) complex array."""
    t = np.asarray(t, dtype=float)
    h = np.zeros(t.shape + (2, 2), dtype=complex)
    h[..., 0, 0] = system.omega_g - 0.5j * system.gamma_g
    h[..., 1, 1] = system.omega_e - 0.5j * system.gamma_e
    if rwa:
        # keep only the co-rotating half of cos(Phi_F)
        z = system.dipole * field_phasor(field, t)
        h[..., 0, 1] = -np.conj(z)
        h[..., 1, 0] = -z
    else:
        coupling = -system.dipole * evaluate_field(field, t)
        h[..., 0, 1] = coupling
        h[..., 1, 0] = coupling
    return h


def rk4_step_matrices(hamiltonian, times, dt):
    """Exact RK4 update matrices for the linear system dc/dt = -i H(t) c.

    One RK4 step from t_n is c_{n+1} = M_n c_n with
    M = I + h/6 (A1 + 4 A2 + A3) + h^2/6 (A2 A1 + A2^2 + A3 A2)
          + h^3/12 (A2^2 A1 + A3 A2^2) + h^4/24 A3 A2^2 A1,
    A1 = A(t), A2 = A(t + h/2), A3 = A(t + h). Arithmetic is the same as the
    stage-by-stage scheme; the matrices are built for all steps at once.
    """
    t = np.asarray(times[:-1], dtype=float)
    a1 = -1j * hamiltonian(t)
    a2 = -1j * hamiltonian(t + 0.5 * dt)
    a3 = -1j * hamiltonian(t + dt)
    h = dt
    a2a1 = a2 @ a1
    a2a2 = a2 @ a2
    a3a2 = a3 @ a2
    a2a2a1 = a2 @ a2a1
    a3a2a2 = a3 @ a2a2
    eye = np.eye(2, dtype=complex)
    return (eye + h / 6 * (a1 + 4 * a2 + a3)
            + h**2 / 6 * (a2a1 + a2a2 + a3a2)
            + h**3 / 12 * (a2a2a1 + a3a2a2)
            + h**4 / 24 * (a3 @ a2a2a1))


def _apply_steps(mats, c0):
    m = mats.reshape(-1, 4).tolist()
    out = np.empty((len(m) + 1, 2), dtype=complex)
    g, e = complex(c0[0]), complex(c0[1])
    out[0] = g, e
    for n, (m00, m01, m10, m11) in enumerate(m, start=1):
        g, e = m00 * g + m01 * e, m10 * g + m11 * e
        out[n] = g, e
    return out


def integrate_tdse(system: TwoLevelSystem, field: FieldLike, initial=(1.0, 0.0), t_span=(0.0, 1.0),
                   dt: float = 0.01, rwa: bool = False, check_resolution: bool = True) -> AmplitudeTrajectory:
    """RK4 solution of i dc/dt = H(t) c on a uniform grid.

    ``initial`` gives the weights of the bare states |g>, |e> at t_span[0]
    *including* their own initial phases, i.e. c(t0) = (a exp(-i phi_g),
    b exp(-i phi_e)). The full oscillating field is used unless ``rwa``.
    """
    a, b = complex(initial[0]), complex(initial[1])
    if abs(a) ** 2 + abs(b) ** 2 > 1 + 1e-12:
        raise ValueError("initial state norm exceeds 1")
    times = _time_grid(t_span, dt)
    if check_resolution:
        r = resolution_product(system, field, times, dt)
        if r > RESOLUTION_LIMIT:
            raise UnderResolvedError(f"dt*max(w_e, Omega_R, |Delta|) = {r:.3g} violates "
                                     f"dt·max(ω_e, Ω_R, |Δ|) ≤ {RESOLUTION_LIMIT}")
    c0 = (a * np.exp(-1j * system.phi_g), b * np.exp(-1j * system.phi_e))
    mats = rk4_step_matrices(lambda t: _hamiltonians(system, field, t, rwa), times, dt)
    amps = _apply_steps(mats, c0)
    if not np.all(np.isfinite(amps)):
        raise FloatingPointError("non-finite amplitude; integration unstable")
    return _trajectory(times, amps[:, 0], amps[:, 1],
                       ref_g=system.phi_g - np.angle(a) if a else None,
                       ref_e=system.phi_e - np.angle(b) if b else None)


def _trajectory(times, c_g, c_e, ref_g=None, ref_e=None) -> AmplitudeTrajectory:
    return AmplitudeTrajectory(times, c_g, c_e,
                               unwrap_phase(c_g, reference=ref_g),
                               unwrap_phase(c_e, reference=ref_e))


def free_evolution(system: TwoLevelSystem, amplitudes, duration: float):
    """Exact zero-field propagation of bare amplitudes over ``duration``."""
    g, e = amplitudes
    wg = system.omega_g - 0.5j * system.gamma_g
    we = system.omega_e - 0.5j * system.gamma_e
    return g * np.exp(-1j * wg * duration), e * np.exp(-1j * we * duration)


def to_rotating_frame(traj: AmplitudeTrajectory, field: PulsedField, inverse: bool = False) -> AmplitudeTrajectory:
    """c_e -> c_e exp(+i Phi_F(t)); c_g untouched. ``inverse`` undoes it."""
    sign = -1.0 if inverse else 1.0
    phi_f = total_field_phase(field, traj.times)
    c_e = traj.c_e * np.exp(sign * 1j * phi_f)
    ref = traj.unwrapped_phase_e[0] - sign * phi_f[0] if np.isfinite(traj.unwrapped_phase_e[0]) else None
    return AmplitudeTrajectory(traj.times, traj.c_g, c_e, traj.unwrapped_phase_g, unwrap_phase(c_e, reference=ref))


def from_rotating_frame(traj: AmplitudeTrajectory, field: PulsedField) -> AmplitudeTrajectory:
    return to_rotating_frame(traj, field, inverse=True)


# --------------------------------------------------------------------------
# closed-form references

def analytic_rabi_population(omega_rabi, detuning, t):
    """RWA excited population from |g>: (W_R^2 / W^2) sin^2(W t / 2)."""
    omega_rabi = np.asarray(omega_rabi, dtype=float)
    gen = np.hypot(omega_rabi, detuning)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(gen > 0, omega_rabi**2 / np.where(gen > 0, gen, 1.0) ** 2, 0.0)
    return frac * np.sin(0.5 * gen * np.asarray(t)) ** 2


def analytic_ramsey_population(detuning, delay, relative_phase):
    """Two ideal pi/2 pulses: P_e = cos^2((Delta T - dphi) / 2).

    The second pulse carries its extra phase as exp(-i dphi) on the e<-g
    coupling, the same convention ``integrate_tdse`` uses for a field whose
    carrier-envelope phase is shifted by dphi.
    """
    return np.cos(0.5 * (np.asarray(detuning) * np.asarray(delay) - np.asarray(relative_phase))) ** 2


def with_phases(system: TwoLevelSystem, phi_g=None, phi_e=None) -> TwoLevelSystem:
    changes = {}
    if phi_g is not None:
        changes["phi_g"] = phi_g
    if phi_e is not None:
        changes["phi_e"] = phi_e
    return replace(system, **changes)
