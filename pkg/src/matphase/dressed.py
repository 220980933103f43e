"""Instantaneous dressed states and the phase bookkeeping of their components.

The dressed picture lives in the frame rotating with the field phase:
c_e -> c_e exp(+i Phi_F). There the Hamiltonian is the complex-symmetric

    H_rot(t) = [[w_g - i g_g/2,   -W_R(t)/2                      ],
                [-W_R(t)/2,       w_e - w - phi'(t) - i g_e/2     ]]

whose eigenvalues lam_G, lam_E (tracked by adiabatic continuation) define
the dressed frequencies

    w_G = lam_G,     w_E = lam_E + w.

The chirp rate phi'(t) stays inside w_E (it is a field-induced modification
of the excited dressed frequency); the time-dependent field phase
phi(t) - phi0 then enters the excited-start phases explicitly.

Each dressed state has a "real" component on the bare level it grows out of
and a "virtual" one on the other level, shifted by the field phase:

    |G> = cos_half |g> e^{-i Phi_Gr} + sin_half |e> e^{-i Phi_Gv}
    |E> = cos_half |e> e^{-i Phi_Er} - sin_half |g> e^{-i Phi_Ev}
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .field import PulsedField, cumulative_integral, total_field_phase
from .twolevel import TwoLevelSystem

AMBIGUITY_TOL = 1e-6
INITIAL_CONDITIONS = ("ground", "excited")


class BranchAmbiguityError(RuntimeError):
    """Eigenvector overlaps cannot tell the two branches apart (degenerate crossing)."""


@dataclass(frozen=True)
class DressedFrequencies:
    times: np.ndarray
    omega_G: np.ndarray
    omega_E: np.ndarray
    detuning_nad: np.ndarray
    carrier_frequency: float
    ground_vectors: np.ndarray  # (n, 2), bilinear-normalized ground-branch eigenvectors


@dataclass(frozen=True)
class MixingFunctions:
    times: np.ndarray
    cos_half: np.ndarray
    sin_half: np.ndarray


@dataclass(frozen=True)
class DressedPhaseRecord:
    times: np.ndarray
    phi_Gr: np.ndarray
    phi_Gv: np.ndarray
    phi_Er: np.ndarray
    phi_Ev: np.ndarray
    phi_nad: np.ndarray
    phi_F: np.ndarray
    decay_G: np.ndarray  # int Im w_G dt, a log-amplitude
    decay_E: np.ndarray
    initial_condition: str

    def phases(self) -> np.ndarray:
        """(4, n) stack in the order Gr, Gv, Er, Ev."""
        return np.vstack([self.phi_Gr, self.phi_Gv, self.phi_Er, self.phi_Ev])


def rotating_hamiltonian(system: TwoLevelSystem, field: PulsedField, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    h = np.zeros(t.shape + (2, 2), dtype=complex)
    rabi = system.dipole * field.envelope(t)
    h[..., 0, 0] = system.omega_g - 0.5j * system.gamma_g
    h[..., 1, 1] = (system.omega_e - field.carrier_frequency - field.phase_rate(t)
                    - 0.5j * system.gamma_e)
    h[..., 0, 1] = -0.5 * rabi
    h[..., 1, 0] = -0.5 * rabi
    return h


def _bilinear_normalize(v):
    """Scale so v^T v = 1 (complex-symmetric eigenvector convention)."""
    s = np.sqrt(v[..., 0] ** 2 + v[..., 1] ** 2)
    if np.any(np.abs(s) < 1e-12):
        raise BranchAmbiguityError("self-orthogonal eigenvector: exceptional point on the grid")
    return v / s[..., None]


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _track_ground_branch(vals, vecs):
    """Pick the ground branch at every sample by maximal overlap continuation.

    Seeded at the first sample by overlap with the bare |g>; an exact tie
    there (degenerate bare levels with the field on) falls back to the
    lower real eigenvalue.
    """
    n = vals.shape[0]
    unit = _unit(np.swapaxes(vecs, -1, -2))  # (n, 2 branches, 2 components)
    idx = np.empty(n, dtype=int)
    o = np.abs(unit[0, :, 0])
    if abs(o[0] - o[1]) < AMBIGUITY_TOL:
        idx[0] = int(np.argmin(vals[0].real))
    else:
        idx[0] = int(np.argmax(o))
    prev = unit[0, idx[0]]
    # overlaps with the previous ground vector, for both candidate branches
    for k in range(1, n):
        ov = np.abs(unit[k] @ prev.conj())
        if abs(ov[0] - ov[1]) < AMBIGUITY_TOL:
            raise BranchAmbiguityError(f"branch tracking ambiguous at sample {k}: overlaps {ov[0]:.9f}, {ov[1]:.9f}")
        idx[k] = int(np.argmax(ov))
        prev = unit[k, idx[k]]
    return idx


def _align_signs(v):
    """Remove the arbitrary eigenvector sign so the series is continuous."""
    v = v.copy()
    if v[0, 0].real < 0:
        v[0] = -v[0]
    for k in range(1, len(v)):
        if (v[k] @ v[k - 1]).real < 0:
            v[k] = -v[k]
    return v


def instantaneous_dressed_frequencies(system: TwoLevelSystem, field: PulsedField, t_grid) -> DressedFrequencies:
    t = np.asarray(t_grid, dtype=float)
    h = rotating_hamiltonian(system, field, t)
    vals, vecs = np.linalg.eig(h)
    idx = _track_ground_branch(vals, vecs)
    rows = np.arange(len(t))
    lam_g = vals[rows, idx]
    lam_e = vals[rows, 1 - idx]
    v_g = _align_signs(_bilinear_normalize(vecs[rows, :, idx]))
    w = field.carrier_frequency
    omega_G = lam_g
    omega_E = lam_e + w
    return DressedFrequencies(t, omega_G, omega_E, omega_E - omega_G - w, w, v_g)


def mixing_functions(freqs: DressedFrequencies, system: TwoLevelSystem | None = None,
                     field: PulsedField | None = None) -> MixingFunctions:
    """cos_half, sin_half from the tracked ground-branch eigenvector.

    With ``system`` and ``field`` given the eigenvectors are recomputed and
    matched to the branch labels of ``freqs`` by eigenvalue.
    """
    if system is None or field is None:
        v = freqs.ground_vectors
    else:
        h = rotating_hamiltonian(system, field, freqs.times)
        vals, vecs = np.linalg.eig(h)
        pick = np.argmin(np.abs(vals - freqs.omega_G[:, None]), axis=1)
        rows = np.arange(len(freqs.times))
        v = _align_signs(_bilinear_normalize(vecs[rows, :, pick]))
    return MixingFunctions(freqs.times, v[:, 0].copy(), v[:, 1].copy())


def _grid_index(times, t):
    k = int(np.argmin(np.abs(times - t)))
    step = times[1] - times[0] if len(times) > 1 else 1.0
    if abs(times[k] - t) > 1e-9 * max(1.0, abs(step)):
        raise ValueError(f"t={t} is not a grid point")
    return k


def nonadiabatic_phase(freqs: DressedFrequencies, t: float | None = None):
    """Phi_NAD = int_0^t Re(w_E - w_G - w) dt'; the whole series if t is None."""
    series = cumulative_integral(freqs.detuning_nad.real, freqs.times)
    if t is None:
        return series
    return float(series[_grid_index(freqs.times, t)])


def accumulate_dressed_phases(freqs: DressedFrequencies, field: PulsedField, system: TwoLevelSystem,
                              initial_condition: str = "ground") -> DressedPhaseRecord:
    if initial_condition not in INITIAL_CONDITIONS:
        raise ValueError(f"initial_condition must be one of {INITIAL_CONDITIONS}")
    t = freqs.times
    int_g = cumulative_integral(freqs.omega_G.real, t)
    int_e = cumulative_integral(freqs.omega_E.real, t)
    nad = nonadiabatic_phase(freqs)
    phi_f = total_field_phase(field, t)
    if initial_condition == "ground":
        gr = system.phi_g + int_g
        gv = gr + phi_f
        er = gv + nad
        ev = er - phi_f
    else:
        penetration = field.carrier_envelope_phase(t) - field.cep
        er = system.phi_e + penetration + int_e
        ev = er - phi_f
        gr = er - phi_f - nad
        gv = gr + phi_f
    return DressedPhaseRecord(t, gr, gv, er, ev, nad, phi_f,
                              cumulative_integral(freqs.omega_G.imag, t),
                              cumulative_integral(freqs.omega_E.imag, t),
                              initial_condition)


def dressed_phase_record(system: TwoLevelSystem, field: PulsedField, t_grid,
                         initial_condition: str = "ground") -> DressedPhaseRecord:
    freqs = instantaneous_dressed_frequencies(system, field, t_grid)
    return accumulate_dressed_phases(freqs, field, system, initial_condition)


RecordBuilder = Callable[[TwoLevelSystem, PulsedField], DressedPhaseRecord]


def phase_sensitivity_matrix(builder: RecordBuilder, system: TwoLevelSystem, field: PulsedField,
                             t_probe: float, delta: float = 1e-5) -> np.ndarray:
    """Central-difference d(Phi_X)/d(phi_g), d(Phi_X)/d(phi_e) at ``t_probe``.

    Rows follow Gr, Gv, Er, Ev; columns phi_g, phi_e.
    """
    out = np.empty((4, 2))
    for col, name in enumerate(("phi_g", "phi_e")):
        base = getattr(system, name)
        plus = builder(replace(system, **{name: base + delta}), field)
        minus = builder(replace(system, **{name: base - delta}), field)
        k = _grid_index(plus.times, t_probe)
        out[:, col] = (plus.phases()[:, k] - minus.phases()[:, k]) / (2 * delta)
    return out


def assemble_dressed_state(mixing: MixingFunctions, record: DressedPhaseRecord, t: float | None = None):
    """Bare-basis amplitudes (c_g, c_e) of the dressed branch the record follows."""
    if mixing.times.shape != record.times.shape or not np.allclose(mixing.times, record.times):
        raise ValueError("mixing and record grids differ")
    c, s = mixing.cos_half, mixing.sin_half
    if record.initial_condition == "ground":
        amp = np.exp(record.decay_G)
        c_g = c * np.exp(-1j * record.phi_Gr) * amp
        c_e = s * np.exp(-1j * record.phi_Gv) * amp
    else:
        amp = np.exp(record.decay_E)
        c_e = c * np.exp(-1j * record.phi_Er) * amp
        c_g = -s * np.exp(-1j * record.phi_Ev) * amp
    if t is None:
        return c_g, c_e
    k = _grid_index(record.times, t)
    return complex(c_g[k]), complex(c_e[k])
