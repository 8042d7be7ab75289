"""openres: spectra, exceptional points and cross sections of open-system Hamiltonians."""

__version__ = "0.1.0"

from .diagnostics import diagnose, mixing_coefficients, pairwise_overlaps, phase_rigidity
from .eigensolver import EigenSystem, c_normalize, solve, solve2, solve3, solve_generic
from .ep_locator import EpCandidate, cluster_report, locate_2x2, locate_generic
from .hamiltonian import (
    Affine,
    ConcreteHamiltonian,
    HamiltonianFamily,
    LevelSpec,
    evaluate,
    kato_family,
)
from .smatrix import ResonanceSet, s_matrix, s_matrix_ep, xsec_contour, xsec_scan
from .sweep import SweepConfig, SweepResult, run_sweep

__all__ = [
    "Affine",
    "ConcreteHamiltonian",
    "EigenSystem",
    "EpCandidate",
    "HamiltonianFamily",
    "LevelSpec",
    "ResonanceSet",
    "SweepConfig",
    "SweepResult",
    "c_normalize",
    "cluster_report",
    "diagnose",
    "evaluate",
    "kato_family",
    "locate_2x2",
    "locate_generic",
    "mixing_coefficients",
    "pairwise_overlaps",
    "phase_rigidity",
    "run_sweep",
    "s_matrix",
    "s_matrix_ep",
    "solve",
    "solve2",
    "solve3",
    "solve_generic",
    "xsec_contour",
    "xsec_scan",
]
