import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from matphase.field import Envelope, PulsedField
from matphase.twolevel import (NodeError, PhaseUnwrapError, TwoLevelSystem, UnderResolvedError,
                               analytic_rabi_population, analytic_ramsey_population, extract_amplitude_phase,
                               free_evolution, from_rotating_frame, integrate_tdse, to_rotating_frame,
                               unwrap_phase, with_phases)

ZERO = PulsedField(Envelope("constant", 0.0), carrier_frequency=0.0)


def drive(amplitude, w, **kw):
    return PulsedField(Envelope("constant", amplitude), carrier_frequency=w, **kw)


def test_system_invariants():
    with pytest.raises(ValueError):
        TwoLevelSystem(omega_g=1.0, omega_e=1.0)
    with pytest.raises(ValueError):
        TwoLevelSystem(gamma_e=-0.1)
    assert TwoLevelSystem(omega_g=1.0, omega_e=3.0).detuning(1.5) == 0.5


def test_zero_field_ground_state_runs_freely():
    s = TwoLevelSystem(omega_g=0.7, omega_e=2.0, phi_g=0.4)
    tr = integrate_tdse(s, ZERO, (1, 0), (0, 10), 0.01)
    assert np.allclose(tr.populations[0], 1.0, atol=1e-12)
    assert np.allclose(tr.unwrapped_phase_g, 0.4 + 0.7 * tr.times, atol=1e-10)
    slope = np.gradient(extract_amplitude_phase(tr, "g"), tr.times)
    assert np.allclose(slope, 0.7, atol=1e-9)


def test_zero_field_decay():
    s = TwoLevelSystem(omega_g=0.0, omega_e=1.0, gamma_e=0.5)
    tr = integrate_tdse(s, ZERO, (0, 1), (0, 10), 0.01)
    assert np.max(np.abs(tr.populations[1] - np.exp(-0.5 * tr.times))) < 1e-8


def test_full_field_pi_pulse():
    w = 10.0
    rabi = 0.01 * w
    s = TwoLevelSystem(omega_g=0.0, omega_e=w)
    t_pi = np.pi / rabi
    n = int(np.ceil(t_pi / 0.005))
    tr = integrate_tdse(s, drive(rabi, w), (1, 0), (0, t_pi), t_pi / n)
    assert tr.populations[1][-1] == pytest.approx(1.0, abs=1e-3)


def test_under_resolved_grid_rejected():
    s = TwoLevelSystem(omega_e=100.0)
    with pytest.raises(UnderResolvedError, match="≤ 0.1"):
        integrate_tdse(s, ZERO, (1, 0), (0, 1), 0.01)


def test_initial_norm_checked():
    with pytest.raises(ValueError):
        integrate_tdse(TwoLevelSystem(), ZERO, (1, 1), (0, 1), 0.01)


def test_norm_error_is_at_least_fourth_order():
    # RK4 on a Hermitian problem loses norm at O(dt^5) globally (ratio ~32)
    s = TwoLevelSystem(omega_g=0.0, omega_e=5.0)
    f = drive(1.0, 4.5)
    dev = []
    for dt in (0.02, 0.01):
        tr = integrate_tdse(s, f, (1, 0), (0, 20), dt)
        dev.append(np.max(np.abs(tr.norm - 1)))
    assert dev[0] / dev[1] > 14


def test_rk4_order_against_rabi_oracle():
    s = TwoLevelSystem(omega_g=0.0, omega_e=5.0)
    f = drive(1.0, 4.8)
    err = []
    for dt in (0.02, 0.01):
        tr = integrate_tdse(s, f, (1, 0), (0, 10), dt, rwa=True)
        err.append(np.max(np.abs(tr.populations[1] - analytic_rabi_population(1.0, 0.2, tr.times))))
    assert 12 < err[0] / err[1] < 20


def test_damping_never_raises_norm():
    s = TwoLevelSystem(omega_e=2.0, gamma_g=0.05, gamma_e=0.3)
    tr = integrate_tdse(s, drive(0.5, 2.0), (0.6, 0.8), (0, 20), 0.01)
    assert np.all(np.diff(tr.norm) <= 1e-15)


@given(a=st.complex_numbers(max_magnitude=0.7), b=st.complex_numbers(max_magnitude=0.7),
       p=st.complex_numbers(max_magnitude=0.7), q=st.complex_numbers(max_magnitude=0.7))
def test_linearity(a, b, p, q):
    s = TwoLevelSystem(omega_e=3.0, phi_g=0.2, phi_e=-0.1)
    f = drive(0.8, 2.5, cep=0.3)
    kw = dict(t_span=(0, 2), dt=0.01)
    u = integrate_tdse(s, f, (1, 0), **kw)
    v = integrate_tdse(s, f, (0, 1), **kw)
    if abs(a * p + b * q) == 0 or abs(a) ** 2 + abs(b) ** 2 > 1:
        return
    # amplitude-level superposition of the (1, 0) and (0, 1) solutions
    w = integrate_tdse(s, f, (a, b), **kw)
    assert np.allclose(w.c_g, a * u.c_g + b * v.c_g, atol=1e-10)
    assert np.allclose(w.c_e, a * u.c_e + b * v.c_e, atol=1e-10)


@given(alpha=st.floats(-3, 3))
def test_global_phase_covariance(alpha):
    s = TwoLevelSystem(omega_e=3.0)
    f = drive(0.8, 2.5)
    c0 = (0.8, 0.6)
    base = integrate_tdse(s, f, c0, (0, 3), 0.01)
    turned = integrate_tdse(s, f, (c0[0] * np.exp(-1j * alpha), c0[1] * np.exp(-1j * alpha)), (0, 3), 0.01)
    assert np.allclose(turned.c_g, base.c_g * np.exp(-1j * alpha), atol=1e-12)
    assert np.allclose(turned.unwrapped_phase_g - base.unwrapped_phase_g, alpha, atol=1e-9)
    assert np.allclose(turned.unwrapped_phase_e - base.unwrapped_phase_e, alpha, atol=1e-9)


def test_initial_phases_enter_amplitudes():
    s = TwoLevelSystem(omega_e=1.0, phi_g=0.3, phi_e=-1.2)
    tr = integrate_tdse(s, ZERO, (0.6, 0.8), (0, 1), 0.01)
    assert tr.c_g[0] == pytest.approx(0.6 * np.exp(-0.3j))
    assert tr.unwrapped_phase_e[0] == pytest.approx(-1.2)


# frames -------------------------------------------------------------------

def test_rotating_frame_identity_for_zero_field_phase():
    s = TwoLevelSystem(omega_e=1.0)
    tr = integrate_tdse(s, ZERO, (0.6, 0.8), (0, 2), 0.01)
    rot = to_rotating_frame(tr, ZERO)
    assert np.array_equal(rot.c_e, tr.c_e)


def test_rotating_frame_phase_grows_with_carrier():
    s = TwoLevelSystem(omega_g=0.0, omega_e=1e-9)
    tr = integrate_tdse(s, ZERO, (0, 1), (0, 2), 0.01)
    rot = to_rotating_frame(tr, drive(0.0, 1.0))
    assert np.allclose(rot.unwrapped_phase_e, -tr.times, atol=1e-8)


def test_rotating_frame_round_trip():
    s = TwoLevelSystem(omega_e=3.0)
    f = drive(0.4, 2.9, cep=0.5, phase_coefficients=(0.0, 0.01))
    tr = integrate_tdse(s, f, (1, 0), (0, 5), 0.01)
    back = from_rotating_frame(to_rotating_frame(tr, f), f)
    assert np.allclose(back.c_e, tr.c_e, atol=1e-12)
    assert np.allclose(back.unwrapped_phase_e, tr.unwrapped_phase_e, atol=1e-12, equal_nan=True)


def test_free_evolution_matches_integrator():
    s = TwoLevelSystem(omega_g=0.2, omega_e=1.5, gamma_e=0.1)
    tr = integrate_tdse(s, ZERO, (0.6, 0.8), (0, 3), 0.001)
    g, e = free_evolution(s, (tr.c_g[0], tr.c_e[0]), 3.0)
    assert g == pytest.approx(tr.c_g[-1], abs=1e-12)
    assert e == pytest.approx(tr.c_e[-1], abs=1e-12)


# oracles ------------------------------------------------------------------

def test_rabi_oracle_examples():
    assert analytic_rabi_population(0.3, 0.0, np.pi / 0.3) == pytest.approx(1.0)
    assert np.all(analytic_rabi_population(0.0, 0.5, np.linspace(0, 9, 10)) == 0)
    assert analytic_rabi_population(1.0, 1.0, np.pi) == pytest.approx(0.5 * np.sin(np.pi / np.sqrt(2)) ** 2)


def test_ramsey_oracle_examples():
    assert analytic_ramsey_population(0.0, 3.0, 0.0) == pytest.approx(1.0)
    assert analytic_ramsey_population(0.0, 3.0, np.pi) == pytest.approx(0.0, abs=1e-30)
    assert analytic_ramsey_population(1.0, np.pi / 2, 0.0) == pytest.approx(0.5)


def _matrix_ramsey(det, T, dphi):
    """Rotating-frame product: pi/2 pulse, free gap, pi/2 pulse with phase dphi."""
    def pulse(phase):
        h = -0.5 * np.array([[0, np.exp(1j * phase)], [np.exp(-1j * phase), 0]])
        return expm(-1j * h * (np.pi / 2))  # unit Rabi frequency, area pi/2
    gap = np.diag([1.0, np.exp(-1j * det * T)])
    c = pulse(dphi) @ gap @ pulse(0.0) @ np.array([1.0, 0.0])
    return abs(c[1]) ** 2


@given(det=st.floats(-3, 3), T=st.floats(0, 10), dphi=st.floats(-4, 4))
def test_ramsey_oracle_matches_matrix_product(det, T, dphi):
    assert analytic_ramsey_population(det, T, dphi) == pytest.approx(_matrix_ramsey(det, T, dphi), abs=1e-12)


# phase extraction ---------------------------------------------------------

def test_unwrap_examples():
    t = np.linspace(0, 10, 1001)
    assert np.allclose(unwrap_phase(np.exp(-2j * t)), 2 * t, atol=1e-12)
    assert np.all(unwrap_phase(np.full(5, 0.3)) == 0)


def test_unwrap_reference_pins_branch():
    t = np.linspace(0, 1, 11)
    assert unwrap_phase(np.exp(-1j * t), reference=4 * np.pi)[0] == pytest.approx(4 * np.pi)


def test_unwrap_rejects_jump_near_pi():
    with pytest.raises(PhaseUnwrapError):
        unwrap_phase(np.exp(-1j * np.array([0.0, 3.1, 6.2])))


def test_node_flags_phase():
    s = TwoLevelSystem(omega_e=1.0)
    tr = integrate_tdse(s, ZERO, (1, 0), (0, 1), 0.01)
    assert np.all(np.isnan(tr.unwrapped_phase_e))
    with pytest.raises(NodeError):
        extract_amplitude_phase(tr, "e")


def test_with_phases():
    s = with_phases(TwoLevelSystem(phi_g=1.0), phi_e=2.0)
    assert (s.phi_g, s.phi_e) == (1.0, 2.0)
