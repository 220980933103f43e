"""Driving field, phase ledger and integral phase accumulators.

Natural units (hbar = 1) throughout. All phases are kept unwrapped on the
real line; wrapping to (-pi, pi] is a presentation concern only.

The field is a real carrier under a real envelope,

    E(t) = E0(t) cos(w t + phi(t)),   phi(t) = phi0 + sum_k phi_k t^k / k!

so that the total field phase is Phi_F(t) = w t + phi(t).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

ENVELOPE_SHAPES = ("constant", "gaussian", "cos2")


@dataclass(frozen=True)
class Envelope:
    """Built-in envelope shapes.

    ``constant``: amplitude everywhere.
    ``gaussian``: amplitude * exp(-(t - center)^2 / tau^2).
    ``cos2``: amplitude * cos^2(pi (t - center) / duration) inside
    ``|t - center| <= duration / 2`` and zero outside.
    """

    shape: str = "constant"
    amplitude: float = 1.0
    tau: float = 1.0
    center: float = 0.0
    duration: float = 1.0

    def __post_init__(self):
        if self.shape not in ENVELOPE_SHAPES:
            raise ValueError(f"unknown envelope shape {self.shape!r}; expected one of {ENVELOPE_SHAPES}")
        if self.amplitude < 0:
            raise ValueError("envelope amplitude must be >= 0")
        if self.shape == "gaussian" and self.tau <= 0:
            raise ValueError("gaussian envelope needs tau > 0")
        if self.shape == "cos2" and self.duration <= 0:
            raise ValueError("cos2 envelope needs duration > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "constant":
            out = np.full_like(t, self.amplitude)
        elif self.shape == "gaussian":
            out = self.amplitude * np.exp(-((t - self.center) / self.tau) ** 2)
        else:
            u = (t - self.center) / self.duration
            out = np.where(np.abs(u) <= 0.5, self.amplitude * np.cos(np.pi * u) ** 2, 0.0)
        return out if out.ndim else float(out)

    @property
    def support(self) -> tuple[float, float]:
        if self.shape == "cos2":
            return (self.center - self.duration / 2, self.center + self.duration / 2)
        return (-np.inf, np.inf)


@dataclass(frozen=True)
class PulsedField:
    envelope: Envelope = field(default_factory=Envelope)
    carrier_frequency: float = 0.0
    cep: float = 0.0
    phase_coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "phase_coefficients", tuple(float(c) for c in self.phase_coefficients))

    def carrier_envelope_phase(self, t):
        """phi(t) = phi0 + sum_k phi_k t^k / k!"""
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.cep)
        for k, c in enumerate(self.phase_coefficients, start=1):
            if c:
                out = out + c * t**k / factorial(k)
        return out if out.ndim else float(out)

    def phase_rate(self, t):
        """phi'(t), the instantaneous carrier-frequency shift."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k, c in enumerate(self.phase_coefficients, start=1):
            if c:
                out = out + c * t ** (k - 1) / factorial(k - 1)
        return out if out.ndim else float(out)

    def with_extra_phase(self, dphi: float) -> "PulsedField":
        return PulsedField(self.envelope, self.carrier_frequency, self.cep + dphi, self.phase_coefficients)


@dataclass(frozen=True)
class PulseTrain:
    """Sum of pulsed fields, each keeping its own carrier phase."""

    pulses: tuple[PulsedField, ...]

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))


FieldLike = Union[PulsedField, PulseTrain]


def _pulses(field: FieldLike) -> Sequence[PulsedField]:
    return field.pulses if isinstance(field, PulseTrain) else (field,)


def total_field_phase(field: PulsedField, t):
    """Unwrapped Phi_F(t) = w t + phi(t)."""
    t = np.asarray(t, dtype=float)
    out = field.carrier_frequency * t + field.carrier_envelope_phase(t)
    return out if np.ndim(out) else float(out)


def evaluate_field(field: FieldLike, t):
    """Real field value E0(t) cos(Phi_F(t)), summed over pulses of a train."""
    total = 0.0
    for p in _pulses(field):
        total = total + p.envelope(t) * np.cos(total_field_phase(p, t))
    return total


def field_phasor(field: FieldLike, t):
    """Positive-frequency part sum E0/2 exp(-i Phi_F): the rotating-wave coupling."""
    total = 0.0j
    for p in _pulses(field):
        total = total + 0.5 * p.envelope(t) * np.exp(-1j * total_field_phase(p, t))
    return total


def envelope_amplitude(field: FieldLike, t):
    """Summed envelope magnitude; an upper bound on the local field strength."""
    total = 0.0
    for p in _pulses(field):
        total = total + p.envelope(t)
    return total


# --------------------------------------------------------------------------
# phase ledger

@dataclass(frozen=True)
class PhaseLedger:
    phase_of_creation: float
    initial_phase: float
    evolution_phase: Callable[[float], float]
    t0: float = 0.0

    def total_phase(self, t):
        return self.initial_phase + self.evolution_phase(t)

    @property
    def action(self) -> Callable[[float], float]:
        """S(t) = -hbar * total phase (hbar = 1)."""
        return lambda t: -self.total_phase(t)

    def then(self, evolution: Callable[[float], float], t1: float) -> "PhaseLedger":
        """Continue the ledger past ``t1`` with a new evolution segment.

        ``evolution`` must vanish at ``t1``; the result covers [t0, ...] with
        the accumulated phase at t1 carried forward.
        """
        _check_origin(evolution, t1)
        before = self.evolution_phase
        at_t1 = before(t1)

        def joined(t):
            return np.where(np.asarray(t) <= t1, before(t), at_t1 + evolution(t))

        return PhaseLedger(self.phase_of_creation, self.initial_phase, joined, self.t0)


def _check_origin(evolution, t0, tol=1e-12):
    v = float(evolution(t0))
    if abs(v) > tol:
        raise ValueError(f"evolution phase must vanish at t0={t0} (got {v}); time origin misaligned")


def build_phase_ledger(creation: float, preceding_history_phase: float,
                       evolution: Callable[[float], float], t0: float = 0.0) -> PhaseLedger:
    """Initial phase = creation + history; total = initial + evolution(t)."""
    _check_origin(evolution, t0)
    return PhaseLedger(float(creation), float(creation + preceding_history_phase), evolution, t0)


# --------------------------------------------------------------------------
# quadrature accumulators

DEFAULT_SAMPLES = 2001


def simpson_integral(y, x) -> float:
    """Composite Simpson over samples ``y`` on grid ``x``."""
    y = np.asarray(y)
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return 0.0 * y.sum()
    return simpson(y, x=x)


def cumulative_integral(y, x):
    """Running composite Simpson integral starting at 0 on x[0]."""
    y = np.asarray(y)
    x = np.asarray(x, dtype=float)
    if x.size < 3:
        if x.size == 1:
            return np.zeros_like(y)
        return np.concatenate([[0.0], [0.5 * (y[0] + y[1]) * (x[1] - x[0])]]).astype(y.dtype)
    if np.iscomplexobj(y):
        return cumulative_integral(y.real, x) + 1j * cumulative_integral(y.imag, x)
    return cumulative_simpson(y, x=x, initial=0.0)


def _as_function(value) -> Callable:
    if callable(value):
        return value
    c = float(value)
    return lambda s: np.full_like(np.asarray(s, dtype=float), c)


def idle_phase(h0, t: float, hbar: float = 1.0, samples: int = DEFAULT_SAMPLES) -> float:
    """Phase run up by an isolated system: (1/hbar) int_0^t H0 dt'."""
    if t < 0:
        raise ValueError("idle_phase requires t >= 0")
    if not callable(h0):
        return float(h0) * t / hbar
    s = np.linspace(0.0, t, samples)
    return float(simpson_integral(h0(s), s)) / hbar


def semiclassical_phase(energy, momentum, t_span: tuple[float, float], path: tuple[float, float],
                        hbar: float = 1.0, samples: int = DEFAULT_SAMPLES) -> float:
    """(1/hbar) (int E dt - int p dx) along a straight path.

    ``energy`` is a function of time (or a constant), ``momentum`` a function
    of position along the path (or a constant). The path is parameterized
    linearly over ``t_span``.
    """
    t0, t1 = t_span
    x0, x1 = path
    ts = np.linspace(t0, t1, samples)
    xs = np.linspace(x0, x1, samples)
    e_int = simpson_integral(_as_function(energy)(ts), ts)
    p_int = simpson_integral(_as_function(momentum)(xs), xs)
    return float(e_int - p_int) / hbar


def wrap_phase(phi):
    """Presentation helper: map to (-pi, pi]."""
    return -((-np.asarray(phi) + np.pi) % (2 * np.pi) - np.pi)
