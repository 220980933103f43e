"""A branch phase alpha slides the two-packet fringes by alpha / (2 pi) periods."""
import numpy as np

from matphase.experiments import DoubleSlitConfig, phase_shift, run_double_slit

reference = None
for alpha in np.linspace(0, 2 * np.pi, 5)[:-1]:
    cfg = DoubleSlitConfig(separation=16.0, sigma=1.0, alpha=alpha, time=30.0)
    result = run_double_slit(cfg)
    fit = result.fit()
    reference = reference or fit
    print(f"alpha={alpha:5.3f}  fitted shift={phase_shift(fit, reference):6.3f}  "
          f"spacing={fit.period:.4f} (2 pi t / d = {cfg.fringe_spacing:.4f})  "
          f"visibility={fit.visibility:.3f}")
