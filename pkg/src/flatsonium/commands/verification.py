"""
Verification command for flatsonium.

Runs every numerical self-check against the configured circuit and returns a
machine-readable summary. A failing or crashing check is recorded, never raised.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import linalg

from ..circuit import (
    FluxBias,
    build_effective_hamiltonian,
    build_hamiltonian,
    make_fock_operators,
)
from ..config import RunConfig
from ..noise import NoiseModel, mode_dephasing_rate, total_dephasing_rate
from ..oracle import PhaseGridSpec, phase_grid_eigenlevels
from ..spectrum import eigenlevels, f01_on_bias_line, find_sweet_spots, predicted_sweet_spot_count
from ..utils.parallel import parallel_map

logger = logging.getLogger(__name__)

RANDOM_SEED = 20240611
HERMITICITY_DRAWS = 1000
REDUCTION_DRAWS = 200
CHECK_FLUXES = [i / 10 for i in range(11)]


@dataclass
class CheckResult:
    """Outcome of one check; value is the measured error, compared against tolerance."""

    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""
    skipped: bool = False

    def to_dict(self) -> dict:
        data = asdict(self)
        if not math.isfinite(self.value):
            data["value"] = None
        return data


def _result(name: str, value: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(value <= tolerance), value=float(value),
                       tolerance=tolerance, detail=detail)


def _skipped(name: str, tolerance: float, reason: str) -> CheckResult:
    return CheckResult(name=name, passed=True, value=0.0, tolerance=tolerance, detail=reason, skipped=True)


def _levels(H: np.ndarray, k: int) -> np.ndarray:
    return linalg.eigh(H, eigvals_only=True, subset_by_index=[0, k - 1])


# =============================================================================
# Circuit checks
# =============================================================================

def check_hermiticity(config: RunConfig) -> CheckResult:
    """max|H - H^T| over random circuits and biases."""
    rng = np.random.default_rng(RANDOM_SEED)
    worst = 0.0
    for _ in range(HERMITICITY_DRAWS):
        params = replace(
            config.params,
            ec_ghz=float(rng.uniform(0.5, 10.0)),
            el_ghz=float(rng.uniform(0.1, 2.0)),
            ej_sum_ghz=float(rng.uniform(0.0, 30.0)),
            b=float(rng.uniform(0.0, 5.0)),
            r=float(rng.uniform(-3.0, 3.0)),
        )
        flux = FluxBias(float(rng.uniform(-2.0, 2.0)), float(rng.uniform(-2.0, 2.0)))
        H = build_hamiltonian(params, flux, config.verify_dim)
        worst = max(worst, float(np.max(np.abs(H - H.conj().T))))
    return _result("hermiticity", worst, 1e-12, f"{HERMITICITY_DRAWS} random draws")


def check_canonical_pair(config: RunConfig) -> CheckResult:
    """[n, phi] = -i away from the truncation corner, and phi_zpf n_zpf = 1/2."""
    ops = make_fock_operators(config.params, config.verify_dim)
    deviation = ops.commutator() + 1j * np.eye(ops.dim)
    deviation[-1, -1] = 0.0
    worst = max(float(np.max(np.abs(deviation))), abs(ops.phi_zpf * ops.n_zpf - 0.5))
    return _result("canonical_pair", worst, 1e-12)


def check_form_equivalence(config: RunConfig) -> CheckResult:
    """Two-cosine and single-cosine Hamiltonians give the same lowest levels on the bias line."""
    p = config.params
    if not p.has_integer_r:
        return _skipped("form_equivalence", 1e-9, "noninteger r")
    k = min(6, config.verify_dim)
    worst = 0.0
    for phi2 in CHECK_FLUXES:
        two = _levels(build_hamiltonian(p, FluxBias.from_constrained(p, phi2), config.verify_dim), k)
        one = _levels(build_effective_hamiltonian(p, phi2, config.verify_dim), k)
        worst = max(worst, float(np.max(np.abs(two - one))))
    return _result("form_equivalence", worst, 1e-9, f"lowest {k} levels at {len(CHECK_FLUXES)} fluxes")


def check_periodicity(config: RunConfig) -> CheckResult:
    """Full spectrum at Phi2 and Phi2 + Phi0 on the bias line."""
    p = config.params
    if not p.has_integer_r:
        return _skipped("flux_periodicity", 1e-9, "noninteger r")
    worst = 0.0
    for phi2 in CHECK_FLUXES:
        here = linalg.eigvalsh(build_hamiltonian(p, FluxBias.from_constrained(p, phi2), config.verify_dim))
        there = linalg.eigvalsh(build_hamiltonian(p, FluxBias.from_constrained(p, phi2 + 1.0), config.verify_dim))
        worst = max(worst, float(np.max(np.abs(here - there))))
    return _result("flux_periodicity", worst, 1e-9)


def check_mirror_symmetry(config: RunConfig) -> CheckResult:
    """f01(Phi2) = f01(Phi0 - Phi2) on a 401-point grid for integer r and b = r + 1."""
    p = config.params
    if not (p.has_integer_r and p.b == p.r + 1):
        return _skipped("mirror_symmetry", 1e-9, "needs integer r and b = r + 1")
    grid = [i / 400 for i in range(401)]
    f01 = np.array(parallel_map(lambda x: f01_on_bias_line(p, x, config.verify_dim), grid, config.workers))
    return _result("mirror_symmetry", float(np.max(np.abs(f01 - f01[::-1]))), 1e-9)


def check_truncation(config: RunConfig) -> CheckResult:
    """Lowest 4 levels at verify_dim against verify_dim + 20."""
    p = config.params
    dim = config.verify_dim
    k = min(4, dim)
    worst = 0.0
    for phi2 in (0.0, 0.25, 0.5):
        flux = FluxBias.from_constrained(p, phi2)
        worst = max(worst, float(np.max(np.abs(eigenlevels(p, flux, dim, k) - eigenlevels(p, flux, dim + 20, k)))))
    return _result("truncation", worst, 1e-6, f"dim {dim} vs {dim + 20}")


def check_harmonic_fock(config: RunConfig) -> CheckResult:
    """E_JSigma = 0 gives sqrt(8 E_C E_L)(k + 1/2) in the Fock basis."""
    p = replace(config.params, ej_sum_ghz=0.0)
    k = min(4, config.verify_dim)
    levels = eigenlevels(p, FluxBias(0.0, 0.0), config.verify_dim, k)
    exact = p.oscillator_ghz * (np.arange(k) + 0.5)
    return _result("harmonic_fock", float(np.max(np.abs(levels - exact))), 1e-9)


# =============================================================================
# Oracle checks
# =============================================================================

def check_harmonic_oracle(config: RunConfig) -> CheckResult:
    p = replace(config.params, ej_sum_ghz=0.0)
    levels = phase_grid_eigenlevels(p, FluxBias(0.0, 0.0), PhaseGridSpec(), k=4)
    exact = p.oscillator_ghz * (np.arange(4) + 0.5)
    return _result("harmonic_oracle", float(np.max(np.abs(levels - exact))), 1e-5)


def check_oracle_agreement(config: RunConfig) -> CheckResult:
    """f01, f12, f23 from both solvers at 11 fluxes, relative error."""
    p = config.params

    def relative_error(phi2: float) -> float:
        flux = FluxBias.from_constrained(p, phi2)
        fock = np.diff(eigenlevels(p, flux, config.verify_dim, 4))
        grid = np.diff(phase_grid_eigenlevels(p, flux, PhaseGridSpec(), k=4))
        return float(np.max(np.abs(fock - grid) / np.abs(grid)))

    worst = max(parallel_map(relative_error, CHECK_FLUXES, config.workers))
    return _result("oracle_agreement", worst, 1e-4, f"{len(CHECK_FLUXES)} fluxes, f01/f12/f23")


def check_oracle_convergence(config: RunConfig) -> CheckResult:
    """Extrapolated levels from 2001- and 4001-point base grids."""
    p = config.params
    flux = FluxBias.from_constrained(p, 0.25)
    base = phase_grid_eigenlevels(p, flux, PhaseGridSpec(n_points=2001), k=4)
    finer = phase_grid_eigenlevels(p, flux, PhaseGridSpec(n_points=4001), k=4)
    return _result("oracle_convergence", float(np.max(np.abs(base - finer))), 1e-6)


# =============================================================================
# Noise checks
# =============================================================================

def check_uncorrelated_reduction(config: RunConfig) -> CheckResult:
    """c_sd = 0 gives sqrt(Gs^2 + Gd^2)."""
    rng = np.random.default_rng(RANDOM_SEED + 1)
    worst = 0.0
    for _ in range(REDUCTION_DRAWS):
        model = NoiseModel(a_s=float(rng.uniform(0, 1e-5)), a_d=float(rng.uniform(0, 1e-5)), c_sd=0.0)
        sens_s, sens_d = (float(x) for x in rng.uniform(-30.0, 30.0, size=2))
        gamma_s = mode_dephasing_rate(model.a_s, sens_s, model.log_factor)
        gamma_d = mode_dephasing_rate(model.a_d, sens_d, model.log_factor)
        expected = math.hypot(gamma_s, gamma_d)
        got = total_dephasing_rate(model, sens_s, sens_d)
        if expected > 0:
            worst = max(worst, abs(got - expected) / expected)
    return _result("uncorrelated_reduction", worst, 1e-12, f"{REDUCTION_DRAWS} random draws")


def check_correlated_cancellation(config: RunConfig) -> CheckResult:
    """c_sd = 1 with A_s sens_s = -A_d sens_d cancels the rate."""
    model = NoiseModel(a_s=4e-6, a_d=1e-6, c_sd=1.0)
    sens_s, sens_d = 2.0, -8.0
    gamma_s = mode_dephasing_rate(model.a_s, sens_s, model.log_factor)
    return _result("correlated_cancellation", total_dephasing_rate(model, sens_s, sens_d) / gamma_s, 1e-12)


def check_sweet_spot_count(config: RunConfig) -> CheckResult:
    """Numeric count equals the closed-form count for r in {2, 3} with b = r + 1."""
    p = config.params
    if p.r not in (2, 3) or p.b != p.r + 1 or p.ej_sum_ghz == 0:
        return _skipped("sweet_spot_count", 0.0, "needs r in {2, 3}, b = r + 1 and E_JSigma > 0")
    spots = find_sweet_spots(p, config.dim, config.sweet_grid_n, config.slope_tol,
                             step=config.fd_step, workers=config.workers)
    predicted = predicted_sweet_spot_count(p.r)
    return _result("sweet_spot_count", float(abs(len(spots) - predicted)), 0.0,
                   f"found {len(spots)}, predicted {predicted}")


CHECKS: list[Callable[[RunConfig], CheckResult]] = [
    check_hermiticity,
    check_canonical_pair,
    check_form_equivalence,
    check_periodicity,
    check_mirror_symmetry,
    check_truncation,
    check_harmonic_fock,
    check_harmonic_oracle,
    check_oracle_agreement,
    check_oracle_convergence,
    check_uncorrelated_reduction,
    check_correlated_cancellation,
    check_sweet_spot_count,
]


def run_check(check: Callable[[RunConfig], CheckResult], config: RunConfig) -> CheckResult:
    name = check.__name__.removeprefix("check_")
    try:
        result = check(config)
    except Exception as e:
        logger.debug(f"Check {name} raised", exc_info=True)
        return CheckResult(name=name, passed=False, value=math.inf, tolerance=0.0,
                           detail=f"{type(e).__name__}: {e}")
    status = "skipped" if result.skipped else ("ok" if result.passed else "FAILED")
    logger.info(f"{result.name}: {status} ({result.value:.3e} vs {result.tolerance:.1e})")
    return result


def cmd_verify(config: RunConfig) -> dict:
    """
    Run every check.

    Args:
        config: run configuration; verify_dim is the truncation checked

    Returns:
        Dict with overall `passed`, the truncation used and one entry per check
    """
    results = [run_check(check, config) for check in CHECKS]
    passed = all(r.passed for r in results)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.warning(f"Verification failed: {', '.join(failed)}")
    else:
        logger.info(f"All {len(results)} checks passed")
    return {
        "passed": passed,
        "verify_dim": config.verify_dim,
        "failed": failed,
        "checks": [r.to_dict() for r in results],
    }
