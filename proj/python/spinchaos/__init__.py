"""Exact diagonalization of strong-field spin models.

Thin wrapper around the compiled ``_core`` extension.
"""

from ._core import (
    Lattice,
    Sector,
    Solution,
    SpinchaosError,
    __version__,
    central_window,
    chi_rescale_factor,
    diagonal_eev,
    entanglement,
    entropy_of_state,
    fidelity_susceptibility,
    fit_power_law,
    hamiltonian,
    locate_peak,
    log_couplings,
    r_statistics,
    sectors,
    solve,
    spectral_function,
    sweep,
)

GOE_R_AVE = 0.5307

__all__ = [
    "GOE_R_AVE",
    "Lattice",
    "Sector",
    "Solution",
    "SpinchaosError",
    "__version__",
    "central_window",
    "chi_rescale_factor",
    "diagonal_eev",
    "entanglement",
    "entropy_of_state",
    "fidelity_susceptibility",
    "fit_power_law",
    "hamiltonian",
    "locate_peak",
    "log_couplings",
    "r_statistics",
    "sectors",
    "solve",
    "spectral_function",
    "sweep",
]
