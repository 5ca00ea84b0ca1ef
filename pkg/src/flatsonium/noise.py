"""
1/f flux-noise dephasing.

Handles:
- Noise model for global (common-mode) and local (differential-mode) flux noise
- Flux sensitivities of f01 by central difference and by Hellmann-Feynman
- Per-mode and total dephasing rates with correlated cross term
- Dephasing sweeps along the bias line and the optional self-consistent
  measurement-time log factor

Sensitivities are in GHz/Phi0, amplitudes in Phi0, rates in 1/s.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .circuit import (
    DEFAULT_DIM,
    CircuitParams,
    FluxBias,
    FluxMode,
    bias_direction,
    potential_hamiltonian_derivative,
)
from .spectrum import DEFAULT_FD_STEP, DEFAULT_SLOPE_TOL, validate_flux_grid, eigensystem, f01_at
from .utils.parallel import parallel_map

logger = logging.getLogger(__name__)

GHZ = 1e9

# exp(3/2 - Euler gamma) / (2 pi)
ZETA = math.exp(1.5 - np.euler_gamma) / (2.0 * math.pi)

# Eigenvalue differences below this are indistinguishable from rounding
EIGEN_NOISE_FLOOR_GHZ = 1e-12

DEFAULT_LOG_FACTOR = 4.0
DEFAULT_F_IR_HZ = 1e-4
SELF_CONSISTENT_MAX_ITER = 20
SELF_CONSISTENT_RTOL = 1e-3


class NoiseModelError(ValueError):
    """Invalid noise amplitudes, correlation or log factor."""
    pass


class SensitivityError(RuntimeError):
    """Finite-difference sensitivity would be dominated by eigenvalue rounding."""

    def __init__(self, message: str, flux: Optional[FluxBias] = None):
        self.flux = flux
        super().__init__(message)


@dataclass(frozen=True)
class NoiseModel:
    """
    1/f flux-noise model S(f) = A^2/|f|^alpha for both flux modes.

    Attributes:
        a_s: common-mode amplitude A_Phis in Phi0
        a_d: differential-mode amplitude A_Phid in Phi0
        c_sd: correlation coefficient A_PhisPhid^2 / (A_Phis A_Phid), in [0, 1]
        log_factor: sqrt(|ln(zeta / (f_ir t_m))|), about 4 for typical runs
        alpha: spectral exponent; stored, only alpha = 1 is evaluated
        f_ir_hz: infrared cutoff for the self-consistent log factor
        self_consistent: iterate t_m = 1/Gamma instead of using log_factor as given
    """

    a_s: float = 5e-6
    a_d: float = 0.0
    c_sd: float = 0.0
    log_factor: float = DEFAULT_LOG_FACTOR
    alpha: float = 1.0
    f_ir_hz: float = DEFAULT_F_IR_HZ
    self_consistent: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.a_s) and self.a_s >= 0):
            raise NoiseModelError(f"a_s must be >= 0, got {self.a_s}")
        if not (math.isfinite(self.a_d) and self.a_d >= 0):
            raise NoiseModelError(f"a_d must be >= 0, got {self.a_d}")
        if not 0.0 <= self.c_sd <= 1.0:
            raise NoiseModelError(f"c_sd must be in [0, 1], got {self.c_sd}")
        if not (math.isfinite(self.log_factor) and self.log_factor > 0):
            raise NoiseModelError(f"log_factor must be > 0, got {self.log_factor}")
        if not (math.isfinite(self.f_ir_hz) and self.f_ir_hz > 0):
            raise NoiseModelError(f"f_ir_hz must be > 0, got {self.f_ir_hz}")
        if self.alpha != 1.0:
            logger.warning(f"alpha={self.alpha} is stored but rates are evaluated for alpha=1")

    @classmethod
    def global_only(cls, a_s: float, **kwargs) -> "NoiseModel":
        return cls(a_s=a_s, a_d=0.0, c_sd=0.0, **kwargs)

    @classmethod
    def uncorrelated(cls, a_s: float, a_d: float, **kwargs) -> "NoiseModel":
        return cls(a_s=a_s, a_d=a_d, c_sd=0.0, **kwargs)

    @classmethod
    def correlated(cls, a_s: float, a_d: float, c_sd: float = 1.0, **kwargs) -> "NoiseModel":
        return cls(a_s=a_s, a_d=a_d, c_sd=c_sd, **kwargs)

    @property
    def cross_amplitude_sq(self) -> float:
        """A_PhisPhid^2 = c_sd A_Phis A_Phid."""
        return self.c_sd * self.a_s * self.a_d


@dataclass(frozen=True, eq=False)
class DephasingProfile:
    """Per-point sensitivities (GHz/Phi0), rates (1/s) and T_phi (s) over a flux grid."""

    grid: np.ndarray
    sens_s: np.ndarray
    sens_d: np.ndarray
    gamma_s: np.ndarray
    gamma_d: np.ndarray
    gamma_total: np.ndarray
    t_phi: np.ndarray
    log_factor: np.ndarray

    @property
    def t_phi_s(self) -> np.ndarray:
        """1/Gamma_s, infinite where the common-mode rate vanishes."""
        return _inverse_rate(self.gamma_s)

    @property
    def t_phi_d(self) -> np.ndarray:
        return _inverse_rate(self.gamma_d)


def _inverse_rate(gamma: np.ndarray) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    out = np.full_like(gamma, np.inf)
    np.divide(1.0, gamma, out=out, where=gamma > 0)
    return out


# =============================================================================
# Sensitivities
# =============================================================================

def flux_sensitivity(
    params: CircuitParams,
    flux: FluxBias,
    mode: FluxMode,
    step: float = DEFAULT_FD_STEP,
    dim: int = DEFAULT_DIM,
    *,
    along_bias_line: bool = True,
    resolution: float = DEFAULT_SLOPE_TOL,
) -> float:
    """
    df01/dPhi_s or df01/dPhi_d by central difference, in GHz/Phi0.

    The common mode moves (Phi1, Phi2) along the bias line, so Phi_d follows
    as beta * Phi_s; with `along_bias_line=False` it is the partial at fixed
    Phi_d. The differential mode is the partial at fixed Phi_s.

    Args:
        params: circuit parameters
        flux: bias point
        mode: FluxMode.COMMON or FluxMode.DIFFERENTIAL
        step: finite-difference step in Phi0
        dim: Fock truncation
        along_bias_line: common-mode direction, see above
        resolution: smallest slope the caller needs to resolve

    Raises:
        ValueError: if step <= 0
        SensitivityError: if rounding of the eigenvalues would exceed `resolution`
    """
    if not (math.isfinite(step) and step > 0):
        raise ValueError(f"step must be > 0, got {step}")
    if EIGEN_NOISE_FLOOR_GHZ / (2.0 * step) > resolution:
        raise SensitivityError(
            f"step {step:.3e} Phi0 cannot resolve {resolution:.3e} GHz/Phi0 above the "
            f"{EIGEN_NOISE_FLOOR_GHZ:.0e} GHz eigenvalue noise floor",
            flux=flux,
        )
    d_phi1, d_phi2 = bias_direction(params, mode, along_bias_line)
    up = f01_at(params, flux.shifted(step * d_phi1, step * d_phi2), dim)
    down = f01_at(params, flux.shifted(-step * d_phi1, -step * d_phi2), dim)
    return (up - down) / (2.0 * step)


def richardson_sensitivity(
    params: CircuitParams,
    flux: FluxBias,
    mode: FluxMode,
    step: float = DEFAULT_FD_STEP,
    dim: int = DEFAULT_DIM,
    **kwargs,
) -> float:
    """Richardson combination (4 D(h/2) - D(h)) / 3 of two central differences."""
    coarse = flux_sensitivity(params, flux, mode, step, dim, **kwargs)
    fine = flux_sensitivity(params, flux, mode, step / 2.0, dim, **kwargs)
    return (4.0 * fine - coarse) / 3.0


def hellmann_feynman_sensitivity(
    params: CircuitParams,
    flux: FluxBias,
    mode: FluxMode,
    dim: int = DEFAULT_DIM,
    along_bias_line: bool = True,
) -> float:
    """<1|dH|1> - <0|dH|0> for the mode's noise operator, in GHz/Phi0."""
    _, vectors = eigensystem(params, flux, dim, k=2)
    dH = potential_hamiltonian_derivative(params, flux, mode, dim, along_bias_line)
    v0, v1 = vectors[:, 0], vectors[:, 1]
    return float(v1 @ dH @ v1 - v0 @ dH @ v0)


# =============================================================================
# Rates
# =============================================================================

def _signed_mode_rate(amplitude: float, sensitivity: float, log_factor: float) -> float:
    return 2.0 * math.pi * log_factor * (amplitude * sensitivity) * GHZ


def mode_dephasing_rate(amplitude: float, sensitivity: float, log_factor: float = DEFAULT_LOG_FACTOR) -> float:
    """
    Gamma = 2 pi A log_factor |df01/dPhi| for one flux mode, in 1/s.

    Raises:
        ValueError: if amplitude < 0 or log_factor <= 0
    """
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    if log_factor <= 0:
        raise ValueError(f"log_factor must be > 0, got {log_factor}")
    return abs(_signed_mode_rate(amplitude, sensitivity, log_factor))


def total_dephasing_rate(
    model: NoiseModel,
    sens_s: float,
    sens_d: float,
    log_factor: Optional[float] = None,
) -> float:
    """
    Total rate sqrt(Gs^2 + Gd^2 + 2 c_sd (2 pi lf)^2 A_s A_d sens_s sens_d), in 1/s.

    The cross term carries the sign of sens_s * sens_d. The radicand is
    evaluated as (x + y)^2 - 2 (1 - c_sd) x y with signed per-mode rates x, y,
    which keeps exact cancellation exact at c_sd = 1. Clamped at 0.
    """
    lf = model.log_factor if log_factor is None else log_factor
    x = _signed_mode_rate(model.a_s, sens_s, lf)
    y = _signed_mode_rate(model.a_d, sens_d, lf)
    if model.c_sd == 1.0:
        return abs(x + y)
    radicand = (x + y) ** 2 - 2.0 * (1.0 - model.c_sd) * x * y
    return math.sqrt(max(radicand, 0.0))


def self_consistent_log_factor(
    model: NoiseModel,
    sens_s: float,
    sens_d: float,
    max_iter: int = SELF_CONSISTENT_MAX_ITER,
    rtol: float = SELF_CONSISTENT_RTOL,
) -> tuple[float, float]:
    """
    Fixed point of t_m = 1/Gamma with log_factor = sqrt(|ln(zeta / (f_ir t_m))|).

    Starts from `model.log_factor`.

    Returns:
        (total rate in 1/s, converged log factor)
    """
    lf = model.log_factor
    gamma = total_dephasing_rate(model, sens_s, sens_d, lf)
    for _ in range(max_iter):
        if gamma <= 0:
            return gamma, lf
        t_m = 1.0 / gamma
        lf = math.sqrt(abs(math.log(ZETA / (model.f_ir_hz * t_m))))
        if lf == 0:
            return 0.0, lf
        updated = total_dephasing_rate(model, sens_s, sens_d, lf)
        if abs(updated - gamma) <= rtol * gamma:
            return updated, lf
        gamma = updated
    logger.warning(f"Self-consistent log factor did not converge in {max_iter} iterations (lf={lf:.4f})")
    return gamma, lf


def beta_form_local_rate(
    params: CircuitParams,
    model: NoiseModel,
    flux: FluxBias,
    step: float = DEFAULT_FD_STEP,
    dim: int = DEFAULT_DIM,
) -> float:
    """
    Local rate 2 pi A_d log_factor |df01/dbeta| / Phi_s, in 1/s.

    beta = Phi_d/Phi_s is varied at fixed Phi_s. Equals the differential-mode
    rate at nonzero Phi_s.

    Raises:
        ValueError: if Phi_s is zero or step <= 0
    """
    phi_s = flux.phi_s
    if phi_s == 0:
        raise ValueError("beta form is undefined at Phi_s = 0")
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    beta = flux.phi_d / phi_s
    d_beta = step / abs(phi_s)
    up = f01_at(params, FluxBias.from_modes(phi_s, (beta + d_beta) * phi_s), dim)
    down = f01_at(params, FluxBias.from_modes(phi_s, (beta - d_beta) * phi_s), dim)
    df_dbeta = (up - down) / (2.0 * d_beta)
    return mode_dephasing_rate(model.a_d, df_dbeta / phi_s, model.log_factor)


def coherence_envelope(gamma: float, t: np.ndarray) -> np.ndarray:
    """|rho01(t)| = exp(-(Gamma t)^2) for Gaussian phase noise."""
    return np.exp(-((gamma * np.asarray(t, dtype=float)) ** 2))


# =============================================================================
# Sweeps
# =============================================================================

def dephasing_sweep(
    params: CircuitParams,
    model: NoiseModel,
    phi2_grid: Sequence[float],
    step: float = DEFAULT_FD_STEP,
    dim: int = DEFAULT_DIM,
    *,
    workers: Optional[int] = None,
) -> DephasingProfile:
    """
    Dephasing along the bias line Phi1 = r*Phi2.

    Each grid point is a bias; sensitivities are taken about it in the
    common and differential directions. Points with zero total rate get an
    infinite T_phi.

    Raises:
        ValueError: for an invalid grid
        SensitivityError: if `step` is too small
        SpectrumError: if a solve fails
    """
    grid = validate_flux_grid(phi2_grid)

    def evaluate(phi2: float) -> tuple[float, ...]:
        flux = FluxBias.from_constrained(params, phi2)
        sens_s = flux_sensitivity(params, flux, FluxMode.COMMON, step, dim)
        sens_d = flux_sensitivity(params, flux, FluxMode.DIFFERENTIAL, step, dim)
        if model.self_consistent:
            gamma, lf = self_consistent_log_factor(model, sens_s, sens_d)
        else:
            lf = model.log_factor
            gamma = total_dephasing_rate(model, sens_s, sens_d)
        gamma_s = mode_dephasing_rate(model.a_s, sens_s, lf)
        gamma_d = mode_dephasing_rate(model.a_d, sens_d, lf)
        return sens_s, sens_d, gamma_s, gamma_d, gamma, lf

    logger.debug(f"Dephasing sweep over {grid.size} points (c_sd={model.c_sd})")
    rows = np.array(parallel_map(evaluate, grid.tolist(), workers), dtype=float).reshape(grid.size, 6)
    gamma_total = rows[:, 4]
    return DephasingProfile(
        grid=grid,
        sens_s=rows[:, 0],
        sens_d=rows[:, 1],
        gamma_s=rows[:, 2],
        gamma_d=rows[:, 3],
        gamma_total=gamma_total,
        t_phi=_inverse_rate(gamma_total),
        log_factor=rows[:, 5],
    )


def local_amplitude_overlay(
    model: NoiseModel,
    profile: DephasingProfile,
    amplitudes: Sequence[float],
) -> dict[float, np.ndarray]:
    """
    T_phi over the profile's grid for other local-noise amplitudes.

    The sensitivities do not depend on the noise, so only the rates are
    recomputed.

    Args:
        model: noise model the profile was computed with
        profile: result of `dephasing_sweep`
        amplitudes: A_Phid values in Phi0

    Returns:
        {A_Phid: T_phi in s per grid point}, infinite where the total rate is 0

    Raises:
        NoiseModelError: for a negative or non-finite amplitude
    """
    overlay = {}
    for amplitude in amplitudes:
        variant = replace(model, a_d=float(amplitude))
        gamma = np.empty(profile.grid.size)
        for p, (sens_s, sens_d) in enumerate(zip(profile.sens_s, profile.sens_d)):
            if variant.self_consistent:
                gamma[p], _ = self_consistent_log_factor(variant, float(sens_s), float(sens_d))
            else:
                gamma[p] = total_dephasing_rate(variant, float(sens_s), float(sens_d))
        overlay[float(amplitude)] = _inverse_rate(gamma)
    return overlay


def with_mode(model: NoiseModel, mode: str) -> NoiseModel:
    """
    Restrict a model to a run mode: global-only, uncorrelated or correlated.

    Raises:
        NoiseModelError: for an unknown mode
    """
    if mode == "global-only":
        return replace(model, a_d=0.0, c_sd=0.0)
    if mode == "uncorrelated":
        return replace(model, c_sd=0.0)
    if mode == "correlated":
        if model.c_sd == 0:
            logger.warning("correlated mode with c_sd=0 is the uncorrelated model")
        return model
    raise NoiseModelError(f"unknown noise mode {mode!r}")
