"""Follow the four dressed-component phases through a chirped Gaussian pulse.

Prints the phase ledger at a few instants and checks it against the phase of
the directly integrated ground amplitude.
"""

from matphase import Envelope, PulsedField, TwoLevelSystem, dressed_phase_record, integrate_tdse
from matphase.twolevel import extract_amplitude_phase

atom = TwoLevelSystem(omega_g=0.0, omega_e=10.0, phi_g=0.3, phi_e=-0.4)
pulse = PulsedField(Envelope("gaussian", 0.5, tau=10.0, center=40.0), carrier_frequency=8.0, cep=0.2,
                    phase_coefficients=(0.0, 1e-3))

traj = integrate_tdse(atom, pulse, (1.0, 0.0), (0.0, 80.0), dt=0.005, rwa=True)
rec = dressed_phase_record(atom, pulse, traj.times, "ground")
measured = extract_amplitude_phase(traj, "g")

print(f"{'t':>6} {'Phi_Gr':>10} {'Phi_Gv':>10} {'Phi_Er':>10} {'Phi_Ev':>10} {'Phi_NAD':>9} {'TDSE-Gr':>9}")
for t in (0.0, 20.0, 40.0, 60.0, 80.0):
    k = int(round(t / 0.005))
    print(f"{t:6.1f} {rec.phi_Gr[k]:10.4f} {rec.phi_Gv[k]:10.4f} {rec.phi_Er[k]:10.4f} {rec.phi_Ev[k]:10.4f} "
          f"{rec.phi_nad[k]:9.4f} {measured[k] - rec.phi_Gr[k]:9.1e}")
