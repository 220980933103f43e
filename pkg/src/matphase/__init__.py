"""Material phases of two-level atoms and free matter waves.

Submodules: ``field`` (driving field, phase ledger, quadrature),
``twolevel`` (bare-state TDSE), ``dressed`` (phase-tracked dressed states),
``hydro`` (Madelung fields, Bohmian trajectories), ``experiments`` (virtual
interferometers and fringe fitting) and ``io`` (configs, runs, datasets).
"""
__version__ = "0.1.0"

from .field import Envelope, PhaseLedger, PulsedField, PulseTrain, build_phase_ledger
from .twolevel import TwoLevelSystem, integrate_tdse
from .dressed import dressed_phase_record, instantaneous_dressed_frequencies
from .hydro import Grid, Wavefunction1D, gaussian_packet, polar_decompose
from .experiments import fringe_analysis, run_double_slit, run_ramsey_scan, run_wavepacket_interferogram

__all__ = ["Envelope", "PhaseLedger", "PulsedField", "PulseTrain", "build_phase_ledger", "TwoLevelSystem",
           "integrate_tdse", "dressed_phase_record", "instantaneous_dressed_frequencies", "Grid",
           "Wavefunction1D", "gaussian_packet", "polar_decompose", "fringe_analysis", "run_double_slit",
           "run_ramsey_scan", "run_wavepacket_interferogram", "__version__"]
