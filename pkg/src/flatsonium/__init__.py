"""
flatsonium - spectrum, flux sweet spots and 1/f flux-noise dephasing of the
flatsonium superconducting qubit.

A fluxonium-like circuit whose SQUID is threaded by two fluxes Phi1 = r*Phi2,
giving engineered sweet spots away from zero and half flux.
"""

from .circuit import (
    CircuitError,
    CircuitParams,
    DegenerateOffsetError,
    DiagonalizationError,
    FluxBias,
    FluxMode,
    FockOperators,
    build_effective_hamiltonian,
    build_hamiltonian,
    effective_josephson_energy,
    effective_phase_offset,
    effective_potential,
    make_fock_operators,
    potential_hamiltonian_derivative,
)
from .config import ConfigError, RunConfig, dump_config, load_config, resolve_config
from .noise import (
    DephasingProfile,
    NoiseModel,
    NoiseModelError,
    SensitivityError,
    beta_form_local_rate,
    coherence_envelope,
    dephasing_sweep,
    flux_sensitivity,
    hellmann_feynman_sensitivity,
    mode_dephasing_rate,
    richardson_sensitivity,
    self_consistent_log_factor,
    total_dephasing_rate,
)
from .oracle import OracleError, PhaseGridSpec, WindowTooSmallError, phase_grid_eigenlevels, phase_grid_eigensystem
from .spectrum import (
    GridTooCoarseError,
    SpectrumError,
    SpectrumSweep,
    SpotKind,
    SweetSpot,
    analytic_sweet_spot_candidates,
    eigenlevels,
    eigensystem,
    find_sweet_spots,
    fluxonium_linear_f01,
    predicted_sweet_spot_count,
    sweep_spectrum,
    transition_table,
)

__version__ = "0.1.0"
__all__ = [
    "__version__",
    # circuit
    "CircuitError",
    "CircuitParams",
    "DegenerateOffsetError",
    "DiagonalizationError",
    "FluxBias",
    "FluxMode",
    "FockOperators",
    "build_effective_hamiltonian",
    "build_hamiltonian",
    "effective_josephson_energy",
    "effective_phase_offset",
    "effective_potential",
    "make_fock_operators",
    "potential_hamiltonian_derivative",
    # spectrum
    "GridTooCoarseError",
    "SpectrumError",
    "SpectrumSweep",
    "SpotKind",
    "SweetSpot",
    "analytic_sweet_spot_candidates",
    "eigenlevels",
    "eigensystem",
    "find_sweet_spots",
    "fluxonium_linear_f01",
    "predicted_sweet_spot_count",
    "sweep_spectrum",
    "transition_table",
    # noise
    "DephasingProfile",
    "NoiseModel",
    "NoiseModelError",
    "SensitivityError",
    "beta_form_local_rate",
    "coherence_envelope",
    "dephasing_sweep",
    "flux_sensitivity",
    "hellmann_feynman_sensitivity",
    "mode_dephasing_rate",
    "richardson_sensitivity",
    "self_consistent_log_factor",
    "total_dephasing_rate",
    # oracle
    "OracleError",
    "PhaseGridSpec",
    "WindowTooSmallError",
    "phase_grid_eigenlevels",
    "phase_grid_eigensystem",
    # config
    "ConfigError",
    "RunConfig",
    "dump_config",
    "load_config",
    "resolve_config",
]
