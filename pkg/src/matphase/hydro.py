"""1D wavefunctions, split-operator propagation and the amplitude/action split.

psi = R exp(i S / hbar) turns the Schrodinger equation into

    dS/dt + (dS/dx)^2 / 2m + V + U = 0,      U = -(hbar^2 / 2m) R'' / R
    d(R^2)/dt + d/dx (R^2 S' / m) = 0

U is kept here under the name ``statistical_term``: it is computed from the
amplitude alone and carries no external source. Trajectories integrate
v = S'/m and serve as a picture of how |psi|^2 is transported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

HBAR = 1.0
NODE_FRACTION = 1e-6
ALIAS_FRACTION = 1e-10


class UnderResolvedError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


class EmptyStateError(ValueError):
    pass


# --------------------------------------------------------------------------
# grid and state

@dataclass(frozen=True)
class Grid:
    """Periodic uniform grid x_j = x_min + j dx, j < n; length L = n dx."""

    n: int
    length: float
    x_min: float

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two, got {self.n}")
        if self.length <= 0:
            raise ValueError("grid length must be positive")

    @classmethod
    def centered(cls, n: int, length: float) -> "Grid":
        return cls(n, length, -0.5 * length)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)


@dataclass(frozen=True)
class Wavefunction1D:
    grid: Grid
    values: np.ndarray
    mass: float = 1.0
    time: float = 0.0
    hbar: float = HBAR
    prenorm: float = 1.0  # norm before the last renormalization (superpose)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.dx)

    def normalized(self) -> "Wavefunction1D":
        return self._with(self.values / np.sqrt(self.norm()))

    def with_global_phase(self, alpha: float) -> "Wavefunction1D":
        return self._with(self.values * np.exp(1j * alpha))

    def _with(self, values, **kw) -> "Wavefunction1D":
        return Wavefunction1D(self.grid, values, self.mass, kw.get("time", self.time), self.hbar,
                              kw.get("prenorm", 1.0))

    def moments(self) -> tuple[float, float]:
        """(<x>, sigma_x) of |psi|^2, with sigma_x the density standard deviation."""
        rho = self.density * self.grid.dx / self.norm()
        mean = float(np.sum(rho * self.x))
        return mean, float(np.sqrt(np.sum(rho * (self.x - mean) ** 2)))


def gaussian_packet(grid: Grid, sigma: float, x0: float = 0.0, k0: float = 0.0, mass: float = 1.0,
                    phase: float = 0.0, hbar: float = HBAR) -> Wavefunction1D:
    """Normalized exp(-(x-x0)^2 / 4 sigma^2 + i k0 x + i phase); sigma is the density width."""
    x = grid.x
    psi = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * k0 * x + 1j * phase)
    return Wavefunction1D(grid, psi, mass, 0.0, hbar).normalized()


def free_gaussian_exact(x, t, sigma: float, x0: float = 0.0, k0: float = 0.0, mass: float = 1.0,
                        phase: float = 0.0, hbar: float = HBAR) -> np.ndarray:
    """Closed-form free evolution of ``gaussian_packet`` on the real line."""
    x = np.asarray(x, dtype=float)
    a = 1 + 1j * hbar * t / (2 * mass * sigma**2)
    v = hbar * k0 / mass
    pref = (2 * np.pi * sigma**2) ** -0.25 / np.sqrt(a)
    arg = (-((x - x0 - v * t) ** 2) / (4 * sigma**2 * a)
           + 1j * k0 * (x - x0) - 1j * hbar * k0**2 * t / (2 * mass) + 1j * k0 * x0 + 1j * phase)
    return pref * np.exp(arg)


def free_gaussian_width(sigma0: float, t, mass: float = 1.0, hbar: float = HBAR):
    return sigma0 * np.sqrt(1 + (hbar * np.asarray(t) / (2 * mass * sigma0**2)) ** 2)


def spreading_time(sigma0: float, mass: float = 1.0, hbar: float = HBAR) -> float:
    """Time for the density width to grow by sqrt(2)."""
    return 2 * mass * sigma0**2 / hbar


# --------------------------------------------------------------------------
# potentials

POTENTIAL_KINDS = ("free", "harmonic", "double_slit", "tabulated")


@dataclass(frozen=True)
class PotentialSpec:
    """Real external potential.

    ``harmonic``: omega, center -> m omega^2 (x - center)^2 / 2.
    ``double_slit``: height, separation, width -> wall of ``height`` with
    two openings of ``width`` centered at +-separation/2 (a 1D aperture mask).
    ``tabulated``: values sampled on the grid.
    """

    kind: str = "free"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")

    def values(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        x = grid.x
        p = self.params
        if self.kind == "free":
            v = np.zeros_like(x)
        elif self.kind == "harmonic":
            v = 0.5 * mass * p["omega"] ** 2 * (x - p.get("center", 0.0)) ** 2
        elif self.kind == "double_slit":
            half = 0.5 * p["separation"]
            open_ = (np.abs(x - half) < 0.5 * p["width"]) | (np.abs(x + half) < 0.5 * p["width"])
            v = np.where(open_, 0.0, p["height"])
        else:
            v = np.asarray(p["values"], dtype=float)
            if v.shape != x.shape:
                raise GridMismatchError("tabulated potential does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("potential must be finite on the grid")
        return v

    @property
    def is_free(self) -> bool:
        return self.kind == "free"


FREE = PotentialSpec()


# --------------------------------------------------------------------------
# propagation

def spectral_band_energy(psi: Wavefunction1D, threshold: float = 1e-8) -> float:
    """Kinetic energy at the highest wavenumber the state actually occupies."""
    amp = np.abs(np.fft.fft(psi.values))
    occupied = amp > threshold * amp.max()
    kmax = np.max(np.abs(psi.grid.k[occupied]))
    return psi.hbar * kmax**2 / (2 * psi.mass)


def check_aliasing(psi: Wavefunction1D) -> None:
    spec = np.abs(np.fft.fft(psi.values)) ** 2
    k = np.abs(psi.grid.k)
    top = k > (2.0 / 3.0) * k.max()
    frac = spec[top].sum() / spec.sum()
    if frac > ALIAS_FRACTION:
        raise UnderResolvedError(f"{frac:.2e} of the spectral weight sits in the top third of the band")


def split_operator_step(psi: Wavefunction1D, potential: PotentialSpec = FREE, dt: float = 0.01,
                        steps: int = 1) -> Wavefunction1D:
    """Strang steps: half kinetic, full potential, half kinetic (spectral kinetic part)."""
    check_aliasing(psi)
    k = psi.grid.k
    half_kin = np.exp(-0.5j * psi.hbar * k**2 / (2 * psi.mass) * dt)
    vals = psi.values
    if potential.is_free:
        # kinetic halves commute: steps collapse to one spectral multiplication
        vals = np.fft.ifft(np.fft.fft(vals) * half_kin ** (2 * steps))
    else:
        pot = np.exp(-1j * potential.values(psi.grid, psi.mass) * dt / psi.hbar)
        for _ in range(steps):
            vals = np.fft.ifft(half_kin * np.fft.fft(vals))
            vals = pot * vals
            vals = np.fft.ifft(half_kin * np.fft.fft(vals))
    return Wavefunction1D(psi.grid, vals, psi.mass, psi.time + steps * dt, psi.hbar)


def propagate(psi: Wavefunction1D, potential: PotentialSpec, dt: float, n_steps: int,
              every: int = 1) -> list[Wavefunction1D]:
    """Frames at steps 0, every, 2*every, ... (and the final step)."""
    frames = [psi]
    if potential.is_free:
        # free Strang steps compose exactly; build every frame from the initial
        # spectrum so FFT round-off does not accumulate over thousands of steps
        check_aliasing(psi)
        spec = np.fft.fft(psi.values)
        omega = psi.hbar * psi.grid.k**2 / (2 * psi.mass)
        marks = list(range(every, n_steps, every)) + [n_steps]
        for m in marks:
            vals = np.fft.ifft(spec * np.exp(-1j * omega * (m * dt)))
            frames.append(Wavefunction1D(psi.grid, vals, psi.mass, psi.time + m * dt, psi.hbar))
        return frames
    done = 0
    while done < n_steps:
        chunk = min(every, n_steps - done)
        psi = split_operator_step(psi, potential, dt, chunk)
        done += chunk
        frames.append(psi)
    return frames


# --------------------------------------------------------------------------
# amplitude / action decomposition

def _d1(f, dx):
    """4th-order periodic central first derivative."""
    return (8 * (np.roll(f, -1) - np.roll(f, 1)) - (np.roll(f, -2) - np.roll(f, 2))) / (12 * dx)


def _d2(f, dx):
    """4th-order periodic central second derivative."""
    return (-(np.roll(f, -2) + np.roll(f, 2)) + 16 * (np.roll(f, -1) + np.roll(f, 1)) - 30 * f) / (12 * dx**2)


def _phase_gradient(psi, dx):
    """dArg(psi)/dx from wrapped neighbour phase differences (4th order).

    Uses angle(psi_{j+s} conj(psi_{j-s})), which is free of 2 pi ambiguities
    as long as the phase advances by less than pi over 2 dx.
    """
    d1 = np.angle(np.roll(psi, -1) * np.conj(np.roll(psi, 1)))
    d2 = np.angle(np.roll(psi, -2) * np.conj(np.roll(psi, 2)))
    return (8 * d1 - d2) / (12 * dx)


def _segments(mask):
    """(start, stop) runs of False in ``mask``."""
    runs = []
    start = None
    for j, m in enumerate(mask):
        if not m and start is None:
            start = j
        elif m and start is not None:
            runs.append((start, j))
            start = None
    if start is not None:
        runs.append((start, len(mask)))
    return runs


@dataclass(frozen=True)
class MadelungFields:
    x: np.ndarray
    R: np.ndarray
    S: np.ndarray
    statistical_term: np.ndarray
    v: np.ndarray
    node_mask: np.ndarray
    mass: float
    hbar: float
    time: float
    dx: float

    @property
    def U(self) -> np.ndarray:
        return self.statistical_term

    @property
    def density(self) -> np.ndarray:
        return self.R**2

    @property
    def phase(self) -> np.ndarray:
        """Material phase Phi = -S / hbar."""
        return -self.S / self.hbar

    @property
    def grid(self) -> Grid:
        return Grid(len(self.x), len(self.x) * self.dx, float(self.x[0]))

    def reconstruct(self) -> np.ndarray:
        return self.R * np.exp(1j * self.S / self.hbar)


def polar_decompose(psi: Wavefunction1D) -> MadelungFields:
    vals = psi.values
    R = np.abs(vals)
    if R.max() == 0 or not np.isfinite(R.max()):
        raise EmptyStateError("state vanishes on the whole grid")
    mask = R < NODE_FRACTION * R.max()
    if mask.all():
        raise EmptyStateError("every sample lies below the node threshold")
    dx = psi.grid.dx
    S = np.full(R.shape, np.nan)
    raw = np.angle(vals)
    for a, b in _segments(mask):
        S[a:b] = psi.hbar * np.unwrap(raw[a:b])
    with np.errstate(divide="ignore", invalid="ignore"):
        U = -(psi.hbar**2 / (2 * psi.mass)) * _d2(R, dx) / R
    v = psi.hbar * _phase_gradient(vals, dx) / psi.mass
    U = np.where(mask, np.nan, U)
    v = np.where(mask, np.nan, v)
    return MadelungFields(psi.x, R, S, U, v, mask, psi.mass, psi.hbar, psi.time, dx)


def action_time_derivative(before: Wavefunction1D, after: Wavefunction1D) -> np.ndarray:
    """Central difference dS/dt from frames at t - dt and t + dt."""
    span = after.time - before.time
    if span <= 0:
        raise ValueError("frames must be ordered in time")
    return before.hbar * np.angle(after.values * np.conj(before.values)) / span


def hj_residual(fields: MadelungFields, potential: PotentialSpec, dS_dt: np.ndarray) -> np.ndarray:
    """Pointwise dS/dt + m v^2 / 2 + V + U; NaN on the node mask."""
    V = potential.values(fields.grid, fields.mass)
    res = dS_dt + 0.5 * fields.mass * fields.v**2 + V + fields.statistical_term
    return np.where(fields.node_mask, np.nan, res)


def continuity_residual(first: MadelungFields, second: MadelungFields) -> np.ndarray:
    """(rho2 - rho1)/dt + mean of d(rho v)/dx at both frames; time-centered."""
    dt = second.time - first.time
    if dt <= 0:
        raise ValueError("frames must be ordered in time")
    flux1 = np.nan_to_num(first.density * first.v)
    flux2 = np.nan_to_num(second.density * second.v)
    res = (second.density - first.density) / dt + 0.5 * (_d1(flux1, first.dx) + _d1(flux2, second.dx))
    return np.where(first.node_mask | second.node_mask, np.nan, res)


def max_norm(field_values) -> float:
    return float(np.nanmax(np.abs(field_values)))


def residual_norms(frames: Sequence[Wavefunction1D], potential: PotentialSpec = FREE,
                   indices: Sequence[int] | None = None) -> tuple[float, float]:
    """Max-norm of the Hamilton-Jacobi and continuity residuals at interior frames.

    Frame j is checked with its neighbours j - 1 and j + 1 supplying the time
    derivatives; by default every interior frame is used.
    """
    if len(frames) < 3:
        raise ValueError("need at least three frames")
    if indices is None:
        indices = range(1, len(frames) - 1)
    hj = cont = 0.0
    for j in indices:
        if not 1 <= j <= len(frames) - 2:
            raise ValueError(f"frame {j} has no neighbours on both sides")
        before, mid, after = frames[j - 1], frames[j], frames[j + 1]
        fields = polar_decompose(mid)
        hj = max(hj, max_norm(hj_residual(fields, potential, action_time_derivative(before, after))))
        cont = max(cont, max_norm(continuity_residual(polar_decompose(before), polar_decompose(after))))
    return hj, cont


def local_residuals(psi: Wavefunction1D, potential: PotentialSpec, dt: float) -> tuple[float, float]:
    """Residual max-norms at ``psi`` from one step back and one step forward."""
    back = split_operator_step(psi, potential, -dt)
    fwd = split_operator_step(psi, potential, dt)
    return residual_norms([back, psi, fwd], potential)


# --------------------------------------------------------------------------
# trajectories

def _cubic_interp(values, x, x_min, dx):
    """4-point Lagrange interpolation on a periodic uniform grid."""
    n = values.shape[-1]
    s = (np.asarray(x) - x_min) / dx
    j = np.floor(s).astype(int)
    u = s - j
    w_m1 = -u * (u - 1) * (u - 2) / 6
    w_0 = (u + 1) * (u - 1) * (u - 2) / 2
    w_1 = -(u + 1) * u * (u - 2) / 2
    w_2 = (u + 1) * u * (u - 1) / 6
    return (w_m1 * values[(j - 1) % n] + w_0 * values[j % n]
            + w_1 * values[(j + 1) % n] + w_2 * values[(j + 2) % n])


def bohmian_velocity(fields: MadelungFields, x):
    """v(x) by cubic interpolation; raises on queries touching the node mask."""
    vals = _cubic_interp(fields.v, x, fields.x[0], fields.dx)
    if np.any(~np.isfinite(vals)):
        raise ValueError("velocity undefined: query point lies on or next to a node")
    return vals if np.ndim(vals) else float(vals)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    seed: int
    times: np.ndarray
    positions: np.ndarray  # (n_traj, n_times)
    wrapped: np.ndarray  # bool per trajectory: crossed the periodic boundary

    @property
    def weights(self) -> np.ndarray:
        n = self.positions.shape[0]
        return np.full(n, 1.0 / n)


def sample_positions(fields: MadelungFields, n_traj: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from R^2 (linear interpolation of the grid CDF), sorted."""
    cell = fields.density * fields.dx
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    cdf /= cdf[-1]
    edges = np.concatenate([fields.x - 0.5 * fields.dx, [fields.x[-1] + 0.5 * fields.dx]])
    u = rng.random(n_traj)
    return np.sort(np.interp(u, cdf, edges))


def integrate_trajectories(frames: Sequence[MadelungFields], n_traj: int, seed: int = 0) -> TrajectoryEnsemble:
    """RK4 over consecutive frames; velocities linear in time between frames.

    Positions leaving the periodic box are wrapped back and flagged.
    """
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    rng = np.random.default_rng(seed)
    x = sample_positions(frames[0], n_traj, rng)
    x_min = frames[0].x[0]
    dx = frames[0].dx
    length = dx * len(frames[0].x)
    times = np.array([f.time for f in frames])
    out = np.empty((n_traj, len(frames)))
    out[:, 0] = x
    wrapped = np.zeros(n_traj, dtype=bool)

    def vel(vals, pos):
        r = _cubic_interp(vals, pos, x_min, dx)
        if not np.all(np.isfinite(r)):
            raise ValueError("trajectory reached the node mask; velocity undefined")
        return r

    for n in range(len(frames) - 1):
        h = times[n + 1] - times[n]
        v0, v1 = frames[n].v, frames[n + 1].v
        vm = 0.5 * (v0 + v1)
        k1 = vel(v0, x)
        k2 = vel(vm, x + 0.5 * h * k1)
        k3 = vel(vm, x + 0.5 * h * k2)
        k4 = vel(v1, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        outside = (x < x_min) | (x >= x_min + length)
        if np.any(outside):
            wrapped |= outside
            x = x_min + np.mod(x - x_min, length)
        out[:, n + 1] = x
    return TrajectoryEnsemble(seed, times, out, wrapped)


def histogram_tv_distance(positions, fields: MadelungFields, bins: int = 64, coverage: float = 1e-6) -> float:
    """Total-variation distance between a position histogram and |psi|^2.

    Bins span the central 1 - 2*coverage probability mass of the density.
    """
    cell = fields.density * fields.dx
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    cdf /= cdf[-1]
    edges_grid = np.concatenate([fields.x - 0.5 * fields.dx, [fields.x[-1] + 0.5 * fields.dx]])
    lo, hi = np.interp([coverage, 1 - coverage], cdf, edges_grid)
    edges = np.linspace(lo, hi, bins + 1)
    p = np.diff(np.interp(edges, edges_grid, cdf))
    counts, _ = np.histogram(positions, bins=edges)
    q = counts / len(positions)
    outside = 1.0 - p.sum()
    q_out = 1.0 - q.sum()
    return 0.5 * (np.abs(q - p).sum() + abs(q_out - outside))


# --------------------------------------------------------------------------
# superposition

def superpose(states: Sequence[tuple[complex, Wavefunction1D]]) -> Wavefunction1D:
    """sum C_i psi_i, renormalized; the norm beforehand is kept in ``prenorm``."""
    if not states:
        raise ValueError("nothing to superpose")
    ref = states[0][1]
    total = np.zeros_like(ref.values, dtype=complex)
    for c, psi in states:
        if psi.grid != ref.grid or psi.mass != ref.mass:
            raise GridMismatchError("states live on different grids")
        total = total + c * psi.values
    raw = Wavefunction1D(ref.grid, total, ref.mass, ref.time, ref.hbar)
    n = raw.norm()
    if n == 0:
        raise EmptyStateError("superposition cancels identically")
    return Wavefunction1D(ref.grid, total / np.sqrt(n), ref.mass, ref.time, ref.hbar, prenorm=n)
