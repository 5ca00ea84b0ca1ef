"""
Flatsonium circuit model.

Handles:
- Circuit energies and external flux biases
- Oscillator (Fock) basis operators
- Truncated Hamiltonian assembly for any flux pair
- Closed-form effective Josephson energy and phase offset

Units: energies are E/h in GHz, external fluxes are in units of the flux
quantum. Reduced phases phi = 2*pi*Phi/Phi0 are used internally and
`reduced_phase` is the only place that converts.
"""

import logging
import math
import numbers
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import linalg

logger = logging.getLogger(__name__)

# Number of Fock states used for figures ("the first 50 Fock states")
DEFAULT_DIM = 50

# Below this both components of the phase-offset phasor are treated as zero
OFFSET_EPS = 1e-12

ArrayOrFloat = Union[float, np.ndarray]


class CircuitError(ValueError):
    """Invalid circuit parameters, flux bias or truncation."""
    pass


class DegenerateOffsetError(CircuitError):
    """Phase offset is undefined because the effective Josephson energy vanishes."""
    pass


class DiagonalizationError(CircuitError):
    """The phase operator could not be diagonalized."""
    pass


def reduced_phase(flux_phi0: ArrayOrFloat) -> ArrayOrFloat:
    """Convert an external flux in units of Phi0 to a reduced phase in radians."""
    return 2.0 * np.pi * flux_phi0


@dataclass(frozen=True)
class CircuitParams:
    """
    Flatsonium circuit energies.

    Attributes:
        ec_ghz: charging energy E_C/h
        el_ghz: inductive energy E_L/h of the junction-array superinductor
        ej_sum_ghz: total SQUID Josephson energy E_JSigma = E_J1 + E_J2
        b: junction asymmetry E_J2/E_J1
        r: flux ratio Phi1/Phi2
    """

    ec_ghz: float
    el_ghz: float
    ej_sum_ghz: float
    b: float
    r: float

    def __post_init__(self):
        for name in ("ec_ghz", "el_ghz", "ej_sum_ghz", "b", "r"):
            value = getattr(self, name)
            if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Real):
                raise CircuitError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise CircuitError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.ec_ghz <= 0:
            raise CircuitError(f"ec_ghz must be > 0, got {self.ec_ghz}")
        if self.el_ghz <= 0:
            raise CircuitError(f"el_ghz must be > 0, got {self.el_ghz}")
        if self.ej_sum_ghz < 0:
            raise CircuitError(f"ej_sum_ghz must be >= 0, got {self.ej_sum_ghz}")
        if self.b < 0:
            raise CircuitError(f"b must be >= 0, got {self.b}")

    @classmethod
    def fluxonium(cls, ec_ghz: float, el_ghz: float, ej_ghz: float) -> "CircuitParams":
        """Single-junction limit (b=0, r=0)."""
        return cls(ec_ghz=ec_ghz, el_ghz=el_ghz, ej_sum_ghz=ej_ghz, b=0.0, r=0.0)

    @property
    def ej1_ghz(self) -> float:
        return self.ej_sum_ghz / (1.0 + self.b)

    @property
    def ej2_ghz(self) -> float:
        return self.b * self.ej_sum_ghz / (1.0 + self.b)

    @property
    def oscillator_ghz(self) -> float:
        """Bare LC frequency sqrt(8 E_C E_L)."""
        return math.sqrt(8.0 * self.ec_ghz * self.el_ghz)

    @property
    def phi_zpf(self) -> float:
        return (2.0 * self.ec_ghz / self.el_ghz) ** 0.25

    @property
    def n_zpf(self) -> float:
        return (self.el_ghz / (32.0 * self.ec_ghz)) ** 0.25

    @property
    def has_integer_r(self) -> bool:
        return float(self.r).is_integer()

    @property
    def beta(self) -> float:
        """Ratio Phi_d/Phi_s on the bias line Phi1 = r*Phi2."""
        return FluxBias.beta(self.r)


@dataclass(frozen=True)
class FluxBias:
    """External flux pair, in units of Phi0, through loop A (phi1) and loop B (phi2)."""

    phi1_ext: float
    phi2_ext: float

    def __post_init__(self):
        if not (math.isfinite(self.phi1_ext) and math.isfinite(self.phi2_ext)):
            raise CircuitError(f"flux bias must be finite, got ({self.phi1_ext}, {self.phi2_ext})")

    @classmethod
    def from_constrained(cls, params: CircuitParams, phi2_ext: float) -> "FluxBias":
        """Bias on the line Phi1 = r*Phi2."""
        return cls(phi1_ext=params.r * phi2_ext, phi2_ext=phi2_ext)

    @classmethod
    def from_modes(cls, phi_s: float, phi_d: float) -> "FluxBias":
        """Bias from common mode Phi_s = Phi1 + Phi2 and differential mode Phi_d = Phi1 - Phi2."""
        return cls(phi1_ext=(phi_s + phi_d) / 2.0, phi2_ext=(phi_s - phi_d) / 2.0)

    @property
    def phi_s(self) -> float:
        return self.phi1_ext + self.phi2_ext

    @property
    def phi_d(self) -> float:
        return self.phi1_ext - self.phi2_ext

    @staticmethod
    def beta(r: float) -> float:
        """beta = (r-1)/(r+1), so that phi_d = beta * phi_s on the bias line."""
        if r == -1:
            raise CircuitError("beta is undefined for r = -1")
        return (r - 1.0) / (r + 1.0)

    def shifted(self, d_phi1: float, d_phi2: float) -> "FluxBias":
        return FluxBias(self.phi1_ext + d_phi1, self.phi2_ext + d_phi2)

    def reduced(self) -> tuple[float, float]:
        """Reduced phases (phi1, phi2) in radians."""
        return reduced_phase(self.phi1_ext), reduced_phase(self.phi2_ext)


@dataclass(frozen=True, eq=False)
class FockOperators:
    """
    Charge and phase operators truncated to the lowest `dim` oscillator states.

    phi_op = phi_zpf (a + a^dag) and n_op = i n_zpf (a^dag - a), both Hermitian
    and tridiagonal.
    """

    dim: int
    n_op: np.ndarray
    phi_op: np.ndarray
    phi_zpf: float
    n_zpf: float

    def commutator(self) -> np.ndarray:
        """[n, phi]; equals -i on everything except the last diagonal entry."""
        return self.n_op @ self.phi_op - self.phi_op @ self.n_op


def _check_dim(dim: int) -> None:
    if isinstance(dim, bool) or not isinstance(dim, (int, np.integer)) or dim < 2:
        raise CircuitError(f"Fock truncation dim must be an integer >= 2, got {dim!r}")


def _lowering(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def make_fock_operators(params: CircuitParams, dim: int = DEFAULT_DIM) -> FockOperators:
    """
    Build n and phi in the basis of the bare E_C/E_L oscillator.

    Args:
        params: circuit parameters (only E_C and E_L enter)
        dim: number of Fock states

    Returns:
        FockOperators with Hermitian complex n_op and real phi_op

    Raises:
        CircuitError: if dim < 2
    """
    _check_dim(dim)
    a = _lowering(dim)
    phi_zpf = params.phi_zpf
    n_zpf = params.n_zpf
    phi_op = phi_zpf * (a + a.T)
    n_op = 1j * n_zpf * (a.T - a)
    return FockOperators(dim=int(dim), n_op=n_op, phi_op=phi_op, phi_zpf=phi_zpf, n_zpf=n_zpf)


@lru_cache(maxsize=64)
def _phase_eigensystem(dim: int, phi_zpf: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of the truncated phase operator.

    The result depends only on (dim, phi_zpf), never on the flux, so it is
    computed once and shared. Arrays are returned read-only.
    """
    off_diagonal = phi_zpf * np.sqrt(np.arange(1, dim, dtype=float))
    try:
        eigvals, eigvecs = linalg.eigh_tridiagonal(np.zeros(dim), off_diagonal)
    except linalg.LinAlgError as e:
        raise DiagonalizationError(f"Failed to diagonalize phase operator (dim={dim}): {e}")
    eigvals.setflags(write=False)
    eigvecs.setflags(write=False)
    logger.debug(f"Cached phase eigensystem for dim={dim}, phi_zpf={phi_zpf:.6g}")
    return eigvals, eigvecs


def _operator_from_phase_function(eigvecs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Reassemble V diag(values) V^T."""
    return (eigvecs * values) @ eigvecs.T


def _oscillator_diagonal(params: CircuitParams, dim: int) -> np.ndarray:
    return params.oscillator_ghz * (np.arange(dim, dtype=float) + 0.5)


def _finish(hamiltonian: np.ndarray, params: CircuitParams) -> np.ndarray:
    dim = hamiltonian.shape[0]
    hamiltonian[np.diag_indices(dim)] += _oscillator_diagonal(params, dim)
    return 0.5 * (hamiltonian + hamiltonian.T)


def build_hamiltonian(
    params: CircuitParams,
    flux: FluxBias,
    dim: int = DEFAULT_DIM,
) -> np.ndarray:
    """
    Truncated two-flux Hamiltonian in GHz.

    H = 4E_C n^2 - E_J1 cos(phi - phi1 - phi2) - E_J2 cos(phi - phi2) + E_L phi^2 / 2

    The quadratic part is the bare oscillator, diagonal in the Fock basis.
    The cosines are evaluated by spectral calculus on the truncated phase
    operator. The result is real symmetric.

    Args:
        params: circuit parameters
        flux: external flux pair
        dim: number of Fock states

    Returns:
        dim x dim real symmetric matrix

    Raises:
        CircuitError: if dim < 2
        DiagonalizationError: if the phase operator cannot be diagonalized
    """
    _check_dim(dim)
    phases, eigvecs = _phase_eigensystem(int(dim), params.phi_zpf)
    phi1, phi2 = flux.reduced()
    josephson = (
        params.ej1_ghz * np.cos(phases - phi1 - phi2)
        + params.ej2_ghz * np.cos(phases - phi2)
    )
    return _finish(-_operator_from_phase_function(eigvecs, josephson), params)


def effective_josephson_energy(params: CircuitParams, phi2_reduced: ArrayOrFloat) -> ArrayOrFloat:
    """
    SQUID Josephson energy on the bias line Phi1 = r*Phi2.

    E_J,eff = E_JSigma/(1+b) * sqrt(1 + b^2 + 2b cos(r phi2)), bounded by
    E_JSigma |1-b|/(1+b) and E_JSigma.
    """
    b = params.b
    radicand = 1.0 + b * b + 2.0 * b * np.cos(params.r * phi2_reduced)
    return params.ej_sum_ghz / (1.0 + b) * np.sqrt(np.maximum(radicand, 0.0))


def effective_phase_offset(params: CircuitParams, phi2_reduced: float) -> float:
    """
    Phase offset phi0 of the single-cosine form, in (-pi, pi].

    The two-argument arctangent of
    (b sin phi2 + sin[(1+r) phi2]) / (b cos phi2 + cos[(1+r) phi2]).

    Raises:
        DegenerateOffsetError: if both components are below 1e-12
    """
    b, r = params.b, params.r
    y = b * math.sin(phi2_reduced) + math.sin((1.0 + r) * phi2_reduced)
    x = b * math.cos(phi2_reduced) + math.cos((1.0 + r) * phi2_reduced)
    if abs(x) < OFFSET_EPS and abs(y) < OFFSET_EPS:
        raise DegenerateOffsetError(
            f"Phase offset undefined at phi2={phi2_reduced:.12g} rad "
            f"(b={b}, r={r}): effective Josephson energy vanishes"
        )
    angle = math.atan2(y, x)
    return math.pi if angle <= -math.pi else angle


def build_effective_hamiltonian(
    params: CircuitParams,
    phi2_ext: float,
    dim: int = DEFAULT_DIM,
) -> np.ndarray:
    """
    Single-cosine Hamiltonian on the bias line Phi1 = r*Phi2.

    H = 4E_C n^2 - E_J,eff(phi2) cos(phi - phi0) + E_L phi^2 / 2. Same operator
    as `build_hamiltonian` on that line, assembled from the closed forms.
    """
    _check_dim(dim)
    phases, eigvecs = _phase_eigensystem(int(dim), params.phi_zpf)
    phi2 = reduced_phase(phi2_ext)
    ej_eff = float(effective_josephson_energy(params, phi2))
    try:
        phi0 = effective_phase_offset(params, phi2)
    except DegenerateOffsetError:
        # No Josephson term left to orient
        return _finish(np.zeros((dim, dim)), params)
    josephson = ej_eff * np.cos(phases - phi0)
    return _finish(-_operator_from_phase_function(eigvecs, josephson), params)


def effective_potential(params: CircuitParams, flux: FluxBias, phase: np.ndarray) -> np.ndarray:
    """Potential U(phi) = E_L phi^2/2 - E_J1 cos(phi - phi1 - phi2) - E_J2 cos(phi - phi2) in GHz."""
    phi1, phi2 = flux.reduced()
    return (
        0.5 * params.el_ghz * phase**2
        - params.ej1_ghz * np.cos(phase - phi1 - phi2)
        - params.ej2_ghz * np.cos(phase - phi2)
    )


def josephson_phase_offset(params: CircuitParams, flux: FluxBias) -> float:
    """Offset of the combined Josephson cosine for an arbitrary flux pair (0 if it vanishes)."""
    phi1, phi2 = flux.reduced()
    phasor = params.ej1_ghz * np.exp(1j * (phi1 + phi2)) + params.ej2_ghz * np.exp(1j * phi2)
    if abs(phasor) < OFFSET_EPS:
        return 0.0
    return float(np.angle(phasor))


def hamiltonian_flux_derivative(
    params: CircuitParams,
    flux: FluxBias,
    d_phi1: float,
    d_phi2: float,
    dim: int = DEFAULT_DIM,
) -> np.ndarray:
    """
    Directional derivative of H with respect to the external fluxes, in GHz/Phi0.

    The direction is (d_phi1, d_phi2) in units of Phi0 per unit step; only the
    Josephson terms depend on flux.
    """
    _check_dim(dim)
    phases, eigvecs = _phase_eigensystem(int(dim), params.phi_zpf)
    phi1, phi2 = flux.reduced()
    sin_1 = params.ej1_ghz * np.sin(phases - phi1 - phi2)
    sin_2 = params.ej2_ghz * np.sin(phases - phi2)
    # d/dphi1 cos(x - phi1 - phi2) = sin(x - phi1 - phi2), likewise for phi2
    values = 2.0 * np.pi * (-(d_phi1 + d_phi2) * sin_1 - d_phi2 * sin_2)
    derivative = _operator_from_phase_function(eigvecs, values)
    return 0.5 * (derivative + derivative.T)


class FluxMode(str, Enum):
    """Flux-noise coordinates."""

    COMMON = "common"
    DIFFERENTIAL = "differential"


def bias_direction(
    params: CircuitParams,
    mode: FluxMode,
    along_bias_line: bool = True,
) -> tuple[float, float]:
    """
    Change of (Phi1, Phi2) per unit change of the mode coordinate.

    The common mode follows a uniform field along the bias line, so Phi1 and
    Phi2 keep the ratio r and Phi_d moves with Phi_s as beta * Phi_s. With
    `along_bias_line=False` it is the partial at fixed Phi_d instead. The
    differential mode is always the partial at fixed Phi_s.

    Raises:
        CircuitError: for the bias-line common mode when r = -1
    """
    mode = FluxMode(mode)
    if mode is FluxMode.DIFFERENTIAL:
        return 0.5, -0.5
    if not along_bias_line:
        return 0.5, 0.5
    if params.r == -1:
        raise CircuitError("common mode along the bias line is undefined for r = -1")
    return params.r / (params.r + 1.0), 1.0 / (params.r + 1.0)


def potential_hamiltonian_derivative(
    params: CircuitParams,
    flux: FluxBias,
    mode: FluxMode,
    dim: int = DEFAULT_DIM,
    along_bias_line: bool = True,
) -> np.ndarray:
    """dH/dPhi_s or dH/dPhi_d in GHz/Phi0, the noise operator for `mode`."""
    d_phi1, d_phi2 = bias_direction(params, mode, along_bias_line)
    return hamiltonian_flux_derivative(params, flux, d_phi1, d_phi2, dim)
