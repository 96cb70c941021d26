"""Teleportation transition in random Clifford circuits.

Stabilizer simulation of the measurement-conditioned teleportation protocol,
finite-size scaling analysis of the resulting ``I(t, N)`` curves, and the
mean-field solution of the effective Ising model.
"""

__version__ = "0.1.0"

from .clifford2 import TwoQubitClifford, clifford_group, sample_clifford2
from .experiment import EnsembleTable, ExperimentConfig, run_ensemble, run_trajectory
from .geometry import AllToAll, Lattice2D, PowerLaw1D, ab_sites, pair_pmf, sample_pair
from .scaling import ScalingDataset, bootstrap_collapse, crossing_scan, fit_collapse, kt_scan
from .tableau import StabilizerTableau, entangle_reference, entropy_bits, init_state, measure_z

__all__ = [
    "AllToAll", "EnsembleTable", "ExperimentConfig", "Lattice2D", "PowerLaw1D", "ScalingDataset",
    "StabilizerTableau", "TwoQubitClifford", "ab_sites", "bootstrap_collapse", "clifford_group",
    "crossing_scan", "entangle_reference", "entropy_bits", "fit_collapse", "init_state", "kt_scan",
    "measure_z", "pair_pmf", "run_ensemble", "run_trajectory", "sample_clifford2", "sample_pair",
]
