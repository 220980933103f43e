"""Virtual interference experiments whose fringes move with a material phase.

Each experiment reduces to a fringe dataset; ``fringe_analysis`` fits it to
A + B cos(k x + theta).
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .field import Envelope, PulsedField
from .hydro import (FREE, Grid, UnderResolvedError, Wavefunction1D, check_aliasing, free_gaussian_exact,
                    free_gaussian_width, gaussian_packet, propagate, superpose)
from .twolevel import (RESOLUTION_LIMIT, TwoLevelSystem, analytic_ramsey_population, free_evolution, integrate_tdse,
                       with_phases)

MAX_ITER = 50
STEP_TOL = 1e-10
MIN_VISIBILITY = 0.05
MIN_PERIODS = 3.0


class NoFringesError(ValueError):
    pass


# --------------------------------------------------------------------------
# fringe fitting

@dataclass(frozen=True)
class FringeFit:
    period: float
    phase: float
    visibility: float
    residual: float
    offset: float  # A
    amplitude: float  # B
    iterations: int

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.period

    def model(self, x):
        return self.offset + self.amplitude * np.cos(self.wavenumber * np.asarray(x) + self.phase)

    def as_dict(self) -> dict:
        return {"period": self.period, "phase": self.phase, "visibility": self.visibility,
                "residual": self.residual, "offset": self.offset, "amplitude": self.amplitude,
                "iterations": self.iterations}


def _wrap(theta):
    return float((theta + np.pi) % (2 * np.pi) - np.pi)


def fringe_analysis(x, y, pad: int = 16) -> FringeFit:
    """Least-squares A + B cos(k x + theta) fit, k seeded from the spectral peak.

    Gauss-Newton refinement, at most 50 iterations, stopping once the step
    norm drops below 1e-10. theta refers to x = 0; B >= 0 by convention.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 8:
        raise NoFringesError("too few samples")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0):
        raise ValueError("fringe_analysis expects a uniform sample grid")
    dx = dx[0]
    xm = 0.5 * (x[0] + x[-1])
    xc = x - xm
    mean = y.mean()
    nfft = pad * x.size
    spec = np.fft.rfft(y - mean, n=nfft)
    freqs = 2 * np.pi * np.fft.rfftfreq(nfft, d=dx)
    j = int(np.argmax(np.abs(spec[1:]))) + 1
    k = freqs[j]
    # linear solve for A, B cos, B sin at the seed wavenumber
    basis = np.column_stack([np.ones_like(xc), np.cos(k * xc), np.sin(k * xc)])
    a, cc, ss = np.linalg.lstsq(basis, y, rcond=None)[0]
    p = np.array([a, np.hypot(cc, ss), k, np.arctan2(-ss, cc)])
    it = 0
    for it in range(1, MAX_ITER + 1):
        A, B, k, th = p
        arg = k * xc + th
        c, s = np.cos(arg), np.sin(arg)
        r = y - (A + B * c)
        J = np.column_stack([np.ones_like(xc), c, -B * xc * s, -B * s])
        step = np.linalg.lstsq(J, r, rcond=None)[0]
        p = p + step
        if np.linalg.norm(step) < STEP_TOL:
            break
    A, B, k, th = p
    if B < 0:
        B, th = -B, th + np.pi
    if k < 0:
        k, th = -k, -th
    resid = float(np.sqrt(np.mean((y - (A + B * np.cos(k * xc + th))) ** 2)))
    vis = float(np.clip(B / A, 0.0, 1.0)) if A > 0 else 0.0
    if vis < MIN_VISIBILITY:
        raise NoFringesError(f"visibility {vis:.3g} below {MIN_VISIBILITY}")
    periods = k * (x[-1] - x[0]) / (2 * np.pi)
    if periods < MIN_PERIODS:
        raise NoFringesError(f"only {periods:.2f} fringe periods in the window; need {MIN_PERIODS}")
    return FringeFit(2 * np.pi / k, _wrap(th - k * xm), vis, resid, float(A), float(B), it)


def phase_shift(fit: FringeFit, reference: FringeFit) -> float:
    """fit.phase - reference.phase wrapped to (-pi, pi]."""
    return _wrap(fit.phase - reference.phase)


# --------------------------------------------------------------------------
# Ramsey

RAMSEY_MODES = ("analytic-oracle", "full-TDSE")


@dataclass(frozen=True)
class RamseyPulse:
    """A pi/2 pulse with a cos^2 envelope of total length ``duration``."""

    duration: float
    carrier_frequency: float
    cep: float = 0.0
    area: float = np.pi / 2

    def field(self, start: float, extra_phase: float, dipole: float) -> PulsedField:
        peak = 2 * self.area / (dipole * self.duration)
        env = Envelope("cos2", peak, center=start + 0.5 * self.duration, duration=self.duration)
        return PulsedField(env, self.carrier_frequency, self.cep + extra_phase)


@dataclass(frozen=True)
class RamseyScan:
    delays: np.ndarray
    relative_phases: np.ndarray
    populations: np.ndarray  # (n_delays, n_phases)
    mode: str

    def fringe(self, j: int) -> FringeFit:
        return fringe_analysis(self.delays, self.populations[:, j])

    def fringe_offsets(self) -> np.ndarray:
        """Shift of the delay fringe caused by each relative phase, in rad.

        P_e = cos^2((Delta T - dphi) / 2) puts theta = -dphi, so the offset is
        theta(first column) - theta(column j).
        """
        fits = [self.fringe(j) for j in range(len(self.relative_phases))]
        ref = fits[0].phase + self.relative_phases[0]
        return np.array([_wrap(ref - f.phase) for f in fits])


def _steps_for(duration, system, carrier, peak, limit=RESOLUTION_LIMIT / 2):
    fastest = max(abs(system.omega_g), abs(system.omega_e), system.dipole * peak,
                  abs(system.detuning(carrier)))
    return max(8, int(np.ceil(duration * fastest / limit)))


def run_ramsey_scan(system: TwoLevelSystem, pulse: RamseyPulse, delays, relative_phases,
                    mode: str = "analytic-oracle") -> RamseyScan:
    """Excited population after two pi/2 pulses separated by ``delays`` (center to center).

    full-TDSE: RK4 through each pulse lobe with the full oscillating field;
    the field-free gap between lobes is propagated exactly.
    """
    if mode not in RAMSEY_MODES:
        raise ValueError(f"mode must be one of {RAMSEY_MODES}")
    delays = np.asarray(delays, dtype=float)
    phases = np.asarray(relative_phases, dtype=float)
    if np.any(delays <= pulse.duration):
        raise ValueError(f"pulses overlap: every delay must exceed the pulse length {pulse.duration}")
    out = np.empty((delays.size, phases.size))
    if mode == "analytic-oracle":
        det = system.detuning(pulse.carrier_frequency)
        out[:] = analytic_ramsey_population(det, delays[:, None], phases[None, :])
        return RamseyScan(delays, phases, out, mode)

    peak = 2 * pulse.area / (system.dipole * pulse.duration)
    n = _steps_for(pulse.duration, system, pulse.carrier_frequency, peak)
    dt = pulse.duration / n
    first = integrate_tdse(system, pulse.field(0.0, 0.0, system.dipole), (1.0, 0.0),
                           (0.0, pulse.duration), dt)
    after_first = (first.c_g[-1], first.c_e[-1])
    # amplitudes already carry the initial phases from here on
    bare = with_phases(system, 0.0, 0.0)
    for i, T in enumerate(delays):
        start = T  # second lobe starts one delay after the first
        c = free_evolution(system, after_first, start - pulse.duration)
        for j, dphi in enumerate(phases):
            tr = integrate_tdse(bare, pulse.field(start, dphi, system.dipole), c,
                                (start, start + pulse.duration), dt)
            out[i, j] = abs(tr.c_e[-1]) ** 2
    return RamseyScan(delays, phases, out, mode)


# --------------------------------------------------------------------------
# bound wave packets in a harmonic well

def harmonic_eigenstates(grid: Grid, n: int, omega: float, mass: float = 1.0, hbar: float = 1.0,
                         center: float = 0.0) -> np.ndarray:
    """First ``n`` oscillator eigenfunctions sampled on the grid, rows normalized.

    Uses the stable three-term recurrence for Hermite functions. Raises if
    the top state is not supported by the grid (edge amplitude or spectral
    content outside the resolved band).
    """
    ell = np.sqrt(hbar / (mass * omega))
    xi = (grid.x - center) / ell
    out = np.empty((n, grid.n))
    out[0] = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n > 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for k in range(2, n):
        out[k] = np.sqrt(2.0 / k) * xi * out[k - 1] - np.sqrt((k - 1) / k) * out[k - 2]
    out /= np.sqrt(ell)
    top = out[n - 1]
    edge = max(abs(top[0]), abs(top[-1])) / np.abs(top).max()
    if edge > 1e-8:
        raise ValueError(f"n={n} eigenstates exceed the grid: top state reaches the boundary")
    try:
        check_aliasing(Wavefunction1D(grid, top.astype(complex), mass))
    except UnderResolvedError as exc:
        raise ValueError(f"n={n} eigenstates exceed the grid resolution") from exc
    return out


def coherent_coefficients(n: int, displacement: float, omega: float, mass: float = 1.0, hbar: float = 1.0):
    """Truncated, renormalized coherent-state weights for a displaced ground state."""
    alpha = displacement * np.sqrt(mass * omega / (2 * hbar))
    c = np.empty(n)
    c[0] = 1.0
    for k in range(1, n):
        c[k] = c[k - 1] * alpha / np.sqrt(k)
    return c / np.linalg.norm(c)


@dataclass(frozen=True)
class Interferogram:
    delays: np.ndarray
    signal: np.ndarray
    relative_phase: float
    period: float


def run_wavepacket_interferogram(grid: Grid, omega: float, n_states: int, displacement: float, delays,
                                 relative_phase: float = 0.0, window: tuple[float, float] | None = None,
                                 mass: float = 1.0, hbar: float = 1.0) -> Interferogram:
    """Pump-pump-probe signal for two identical packets in a harmonic well.

    Pump 1 makes packet a = sum c_k phi_k at t = 0; pump 2 makes the same
    packet with extra phase ``relative_phase`` at the delay tau. The probe
    reads the population of ``window`` (default: the creation region,
    displacement +- ground-state width). Energies count from the zero-point
    level, i.e. pump 2 is phase-locked to a carrier resonant with it, so the
    packet phases advance as k w tau.
    """
    phi = harmonic_eigenstates(grid, n_states, omega, mass, hbar)
    c = coherent_coefficients(n_states, displacement, omega, mass, hbar)
    packet = c @ phi
    if window is None:
        width = np.sqrt(hbar / (2 * mass * omega))
        window = (displacement - width, displacement + width)
    inside = (grid.x >= window[0]) & (grid.x <= window[1])
    delays = np.asarray(delays, dtype=float)
    k = np.arange(n_states)
    rot = np.exp(-1j * np.outer(delays, k) * omega)  # (n_delays, n_states)
    evolved = (rot * c) @ phi  # first packet at the delay
    total = evolved + np.exp(1j * relative_phase) * packet
    signal = np.sum(np.abs(total[:, inside]) ** 2, axis=1) * grid.dx
    return Interferogram(delays, signal, relative_phase, 2 * np.pi / omega)


# --------------------------------------------------------------------------
# double slit with free packets

@dataclass(frozen=True)
class DoubleSlitConfig:
    """Two Gaussian packets at -+d/2 released together.

    The left packet carries the constant phase ``alpha``; the right packet
    receives the momentum kick ``p_kick``.
    """

    separation: float
    sigma: float
    alpha: float = 0.0
    p_kick: float = 0.0
    time: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.separation > 4 * self.sigma:
            raise ValueError("slits not resolvable: need d > 4 sigma")

    @property
    def fringe_spacing(self) -> float:
        """Far-field spacing 2 pi hbar t / (m d)."""
        return 2 * np.pi * self.hbar * self.time / (self.mass * self.separation)

    @property
    def packet_width(self) -> float:
        return float(free_gaussian_width(self.sigma, self.time, self.mass, self.hbar))

    def branches(self):
        """((x0, k0, phase), ...) for left and right packets."""
        return ((-0.5 * self.separation, 0.0, self.alpha),
                (0.5 * self.separation, self.p_kick / self.hbar, 0.0))

    def default_grid(self, samples_per_fringe: int = 32) -> Grid:
        reach = 0.5 * self.separation + abs(self.p_kick) * self.time / self.mass + 12 * self.packet_width
        dx = min(self.fringe_spacing / samples_per_fringe, self.sigma / 4)
        n = 1 << int(np.ceil(np.log2(2 * reach / dx)))
        return Grid.centered(n, 2 * reach)


@dataclass(frozen=True)
class DoubleSlitResult:
    config: DoubleSlitConfig
    x: np.ndarray
    density: np.ndarray
    left_density: np.ndarray
    right_density: np.ndarray
    state: Wavefunction1D

    def window(self, half_width: float | None = None):
        """Central slice used for fringe fitting (default +- 3 packet widths)."""
        w = 3 * self.config.packet_width if half_width is None else half_width
        center = 0.5 * self.config.p_kick * self.config.time / self.config.mass
        return (self.x >= center - w) & (self.x <= center + w)

    def fringe_signal(self, half_width: float | None = None):
        """(x, 1 + interference term / (2 sqrt(rho_1 rho_2))) on the fit window.

        Dividing out the branch envelopes, which are measured by blocking one
        slit, leaves a pure cosine whose phase is the relative phase of the
        two branches.
        """
        sel = self.window(half_width)
        r1, r2 = self.left_density[sel], self.right_density[sel]
        y = 1 + (self.density[sel] - r1 - r2) / (2 * np.sqrt(r1 * r2))
        return self.x[sel], y

    def fit(self, half_width: float | None = None) -> FringeFit:
        return fringe_analysis(*self.fringe_signal(half_width))

    @property
    def overlap_visibility(self) -> float:
        """Intensity-weighted fringe contrast: int 2 sqrt(rho_1 rho_2) / int (rho_1 + rho_2)."""
        return float(np.sum(2 * np.sqrt(self.left_density * self.right_density))
                     / np.sum(self.left_density + self.right_density))


def double_slit_oracle(config: DoubleSlitConfig, x) -> np.ndarray:
    """Closed-form density of the two freely evolved Gaussians (unnormalized sum)."""
    psi = 0
    for x0, k0, ph in config.branches():
        psi = psi + free_gaussian_exact(x, config.time, config.sigma, x0, k0, config.mass, ph, config.hbar)
    return np.abs(psi) ** 2 / 2


def run_double_slit(config: DoubleSlitConfig, grid: Grid | None = None, steps: int = 16) -> DoubleSlitResult:
    grid = config.default_grid() if grid is None else grid
    if config.fringe_spacing < 8 * grid.dx:
        raise UnderResolvedError(f"fringe spacing {config.fringe_spacing:.4g} spans fewer than 8 samples "
                                 f"(dx = {grid.dx:.4g})")
    packets = [gaussian_packet(grid, config.sigma, x0, k0, config.mass, ph, config.hbar)
               for x0, k0, ph in config.branches()]
    dt = config.time / steps
    evolved = [propagate(p, FREE, dt, steps, every=steps)[-1] for p in packets]
    both = superpose([(1 / np.sqrt(2), evolved[0]), (1 / np.sqrt(2), evolved[1])])
    # branch densities on the same normalization as the superposed state
    scale = 1 / (2 * both.prenorm)
    return DoubleSlitResult(config, grid.x, both.density, evolved[0].density * scale,
                            evolved[1].density * scale, both)
