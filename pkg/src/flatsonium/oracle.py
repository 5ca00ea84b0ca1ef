"""
Phase-grid reference eigensolver.

Handles:
- Finite-difference discretization of the Hamiltonian in the phase representation
- Hard-wall window validation and leakage detection
- Richardson extrapolation over two grid spacings

The solver shares nothing with the Fock-basis path except the potential, so
the two can check each other.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .circuit import CircuitParams, FluxBias, effective_potential, josephson_phase_offset

logger = logging.getLogger(__name__)

DEFAULT_HALF_WIDTH = 8.0 * math.pi
DEFAULT_N_POINTS = 2001
MIN_N_POINTS = 801

# Fraction of the window counted as its outer edge, and the norm allowed there
EDGE_FRACTION = 0.05
LEAKAGE_LIMIT = 1e-8


class OracleError(RuntimeError):
    """Invalid grid or failed tridiagonal solve."""
    pass


class WindowTooSmallError(OracleError):
    """Low-lying wavefunctions reach the hard walls."""
    pass


@dataclass(frozen=True)
class PhaseGridSpec:
    """
    Uniform phase grid on [-half_width, half_width] with hard walls.

    n_points counts both wall nodes; the n_points - 2 interior nodes carry the
    wavefunction. With `richardson` the levels are extrapolated from this grid
    and one with half the spacing.
    """

    half_width: float = DEFAULT_HALF_WIDTH
    n_points: int = DEFAULT_N_POINTS
    richardson: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise OracleError(f"half_width must be > 0, got {self.half_width}")
        if self.n_points < MIN_N_POINTS:
            raise OracleError(f"n_points must be >= {MIN_N_POINTS}, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    def refined(self) -> "PhaseGridSpec":
        """Same window, half the spacing."""
        return replace(self, n_points=2 * self.n_points - 1)

    def required_half_width(self, params: CircuitParams, flux: FluxBias) -> float:
        """6 phi_zpf + |phi0|, the smallest window that holds the low-lying states."""
        return 6.0 * params.phi_zpf + abs(josephson_phase_offset(params, flux))

    def interior(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n_points)[1:-1]


def _solve(
    params: CircuitParams,
    flux: FluxBias,
    spec: PhaseGridSpec,
    k: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    phase = spec.interior()
    h = spec.spacing
    kinetic = 4.0 * params.ec_ghz / h**2
    diagonal = 2.0 * kinetic + effective_potential(params, flux, phase)
    off_diagonal = np.full(phase.size - 1, -kinetic)
    try:
        energies, vectors = linalg.eigh_tridiagonal(
            diagonal, off_diagonal, select="i", select_range=(0, k - 1)
        )
    except (linalg.LinAlgError, ValueError) as e:
        raise OracleError(f"Phase-grid solve failed at {flux} (n={spec.n_points}): {e}")

    edge = np.abs(phase) > (1.0 - EDGE_FRACTION) * spec.half_width
    weights = vectors**2
    leakage = float(np.max(weights[edge].sum(axis=0) / weights.sum(axis=0)))
    if leakage > LEAKAGE_LIMIT:
        raise WindowTooSmallError(
            f"{leakage:.2e} of the norm of a level <= {k - 1} sits in the outer "
            f"{EDGE_FRACTION:.0%} of the window (half_width={spec.half_width:.4g})"
        )
    return energies, vectors, phase


def phase_grid_eigensystem(
    params: CircuitParams,
    flux: FluxBias,
    spec: PhaseGridSpec = PhaseGridSpec(),
    k: int = 4,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Raw lowest k eigenpairs on the grid of `spec`, no extrapolation.

    Returns:
        (energies in GHz, wavefunctions as columns, interior phase nodes)

    Raises:
        WindowTooSmallError: if the window is below 6 phi_zpf + |phi0| or a
            wavefunction leaks into the outer edge
        OracleError: if the solve fails
    """
    if not 1 <= k <= spec.n_points - 2:
        raise ValueError(f"k must be in [1, {spec.n_points - 2}], got {k}")
    required = spec.required_half_width(params, flux)
    if spec.half_width < required:
        raise WindowTooSmallError(
            f"half_width {spec.half_width:.4g} rad is below the required {required:.4g} rad"
        )
    return _solve(params, flux, spec, k)


def richardson_extrapolate(coarse: np.ndarray, fine: np.ndarray) -> np.ndarray:
    """(4 E_fine - E_coarse) / 3 for a second-order scheme at spacings h and h/2."""
    return (4.0 * np.asarray(fine) - np.asarray(coarse)) / 3.0


def phase_grid_eigenlevels(
    params: CircuitParams,
    flux: FluxBias,
    spec: PhaseGridSpec = PhaseGridSpec(),
    k: int = 4,
) -> np.ndarray:
    """
    Lowest k levels of H = -4E_C d^2/dphi^2 + U(phi) in GHz.

    Uses a three-point Laplacian with hard walls at +-half_width.

    Raises:
        WindowTooSmallError: if the window cannot hold the states
        OracleError: if the solve fails
    """
    coarse, _, _ = phase_grid_eigensystem(params, flux, spec, k)
    if not spec.richardson:
        return coarse
    fine, _, _ = phase_grid_eigensystem(params, flux, spec.refined(), k)
    logger.debug(f"Richardson correction at {flux}: {np.max(np.abs(fine - coarse)):.3e} GHz")
    return richardson_extrapolate(coarse, fine)
