"""Madelung fields and a Bohmian ensemble for a spreading Gaussian packet."""
import numpy as np

from matphase.hydro import (FREE, Grid, free_gaussian_width, gaussian_packet, histogram_tv_distance,
                            integrate_trajectories, local_residuals, polar_decompose, propagate)

grid = Grid.centered(1024, 56.0)
dt = 6.0 / 4096
frames = propagate(gaussian_packet(grid, 1.0, k0=0.5), FREE, dt, 4096, every=512)
fields = [polar_decompose(f) for f in frames]
ensemble = integrate_trajectories(fields, 10_000, seed=7)

for i, (psi, f) in enumerate(zip(frames, fields)):
    hj, cont = local_residuals(psi, FREE, dt)
    x = ensemble.positions[:, i]
    print(f"t={psi.time:4.2f}  width={psi.moments()[1]:.5f} (exact {free_gaussian_width(1.0, psi.time):.5f})  "
          f"U(center)={np.interp(0.5 * psi.time, f.x, f.U):+.4f}  HJ={hj:.1e}  cont={cont:.1e}  "
          f"<x>_traj={x.mean():.3f}  TV={histogram_tv_distance(x, f):.3f}")
